#pragma once

#include <cstdint>
#include <random>

#include "opsaddle/errors.hpp"
#include "opsaddle/types.hpp"

namespace opsaddle {

// All randomness flows through mt19937_64 plus the hand-rolled draws below,
// so a fixed seed reproduces runs bit-exactly across compilers and stdlibs
// (std:: distributions are implementation-defined).
using Rng = std::mt19937_64;

inline double uniform01(Rng& g) {
  // 53-bit mantissa draw in [0, 1).
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw from an unnormalized nonnegative weight vector.
int sample_categorical(const Vec& weights, Rng& g);

double sample_normal(Rng& g);

// Uniformly distributed point in the ball of the given radius.
Vec sample_in_ball(int dim, double radius, Rng& g);

// Point on the sphere of the given radius.
Vec sample_on_sphere(int dim, double radius, Rng& g);

}  // namespace opsaddle
