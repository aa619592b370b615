#include "opsaddle/rng.hpp"

#include <cmath>

namespace opsaddle {

int sample_categorical(const Vec& weights, Rng& g) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidInput("sample_categorical: weights sum to zero");
  double u = uniform01(g) * total;
  int last_positive = -1;
  for (int i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (w <= 0.0) continue;
    last_positive = i;
    if (u < w) return i;
    u -= w;
  }
  // Rounding pushed u past the final bucket.
  return last_positive;
}

double sample_normal(Rng& g) {
  // Box-Muller; one value per call keeps the draw sequence stateless.
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec sample_on_sphere(int dim, double radius, Rng& g) {
  Vec x(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) x[i] = sample_normal(g);
    norm2 = x.squaredNorm();
  } while (norm2 == 0.0);
  return x * (radius / std::sqrt(norm2));
}

Vec sample_in_ball(int dim, double radius, Rng& g) {
  const double r = radius * std::pow(uniform01(g), 1.0 / dim);
  return sample_on_sphere(dim, r, g);
}

}  // namespace opsaddle
