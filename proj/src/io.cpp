#include "opsaddle/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "opsaddle/errors.hpp"

namespace opsaddle {

using nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write file: " + path);
  out << content;
}

json mdp_to_json(const TabularMdp& mdp) {
  json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  j["nu0"] = std::vector<double>(mdp.nu0.data(), mdp.nu0.data() + mdp.nu0.size());
  json trans = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    json per_state = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto row = mdp.transition.row(mdp.sa(s, a));
      per_state.push_back(std::vector<double>(row.begin(), row.end()));
    }
    trans.push_back(per_state);
  }
  j["transition"] = trans;
  json reward = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    const auto row = mdp.reward_mean.row(s);
    reward.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["reward"] = reward;
  return j;
}

TabularMdp mdp_from_json(const json& j) {
  TabularMdp mdp;
  try {
    mdp.n_states = j.at("n_states").get<int>();
    mdp.n_actions = j.at("n_actions").get<int>();
    mdp.gamma = j.at("gamma").get<double>();
    const auto nu0 = j.at("nu0").get<std::vector<double>>();
    mdp.nu0 = Eigen::Map<const Vec>(nu0.data(), static_cast<Eigen::Index>(nu0.size()));
    mdp.transition = Mat(mdp.n_states * mdp.n_actions, mdp.n_states);
    const auto& trans = j.at("transition");
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        const auto row = trans.at(s).at(a).get<std::vector<double>>();
        if (static_cast<int>(row.size()) != mdp.n_states)
          throw InvalidInput("mdp json: transition row length mismatch");
        for (int s2 = 0; s2 < mdp.n_states; ++s2) mdp.transition(mdp.sa(s, a), s2) = row[s2];
      }
    mdp.reward_mean = Mat(mdp.n_states, mdp.n_actions);
    const auto& reward = j.at("reward");
    for (int s = 0; s < mdp.n_states; ++s) {
      const auto row = reward.at(s).get<std::vector<double>>();
      if (static_cast<int>(row.size()) != mdp.n_actions)
        throw InvalidInput("mdp json: reward row length mismatch");
      for (int a = 0; a < mdp.n_actions; ++a) mdp.reward_mean(s, a) = row[a];
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed mdp json: ") + e.what());
  }
  mdp.validate();
  return mdp;
}

json features_to_json(const FeatureMaps& features) {
  json j;
  j["dim_z"] = features.dim_z();
  j["dim_xi"] = features.dim_xi();
  auto dump = [](const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      const auto row = m.row(i);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
  };
  j["phi_w"] = dump(features.phi_w);
  j["phi_q"] = dump(features.phi_q);
  return j;
}

FeatureMaps features_from_json(const json& j) {
  try {
    const int dim_z = j.at("dim_z").get<int>();
    const int dim_xi = j.at("dim_xi").get<int>();
    auto load = [&](const json& rows, int dim) {
      Mat m(rows.size(), dim);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = rows.at(i).get<std::vector<double>>();
        if (static_cast<int>(row.size()) != dim)
          throw InvalidInput("features json: row length mismatch");
        for (int k = 0; k < dim; ++k) m(static_cast<Eigen::Index>(i), k) = row[k];
      }
      return m;
    };
    FeatureMaps f{load(j.at("phi_w"), dim_z), load(j.at("phi_q"), dim_xi)};
    f.validate();
    return f;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed features json: ") + e.what());
  }
}

json behavior_to_json(const BehaviorDistribution& behavior) {
  json j;
  j["mu"] = std::vector<double>(behavior.mu.data(), behavior.mu.data() + behavior.mu.size());
  return j;
}

BehaviorDistribution behavior_from_json(const json& j) {
  try {
    const auto mu = j.at("mu").get<std::vector<double>>();
    BehaviorDistribution b{Eigen::Map<const Vec>(mu.data(), static_cast<Eigen::Index>(mu.size()))};
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed behavior json: ") + e.what());
  }
}

std::string dataset_to_csv(const OfflineDataset& dataset, const std::string& config_hash) {
  std::string out;
  if (!config_hash.empty()) out += "# config_hash=" + config_hash + "\n";
  out += "s,a,r,s_next\n";
  char buf[64];
  for (const auto& t : dataset.tuples) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%d\n", t.s, t.a, t.r, t.s_next);
    out += buf;
  }
  return out;
}

OfflineDataset dataset_from_csv(const std::string& csv, int n_states, int n_actions) {
  OfflineDataset data;
  data.n_states = n_states;
  data.n_actions = n_actions;
  std::istringstream in(csv);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "s,a,r,s_next") throw InvalidInput("dataset csv: bad header");
      header_seen = true;
      continue;
    }
    SampleRow row;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%d", &row.s, &row.a, &row.r, &row.s_next) != 4)
      throw InvalidInput("dataset csv: bad row: " + line);
    if (row.s < 0 || row.s >= n_states || row.a < 0 || row.a >= n_actions ||
        row.s_next < 0 || row.s_next >= n_states)
      throw InvalidInput("dataset csv: index out of range: " + line);
    data.tuples.push_back(row);
  }
  if (!header_seen) throw InvalidInput("dataset csv: missing header");
  return data;
}

json constants_to_json(const ProblemConstants& c) {
  json j;
  j["G"] = c.G;
  j["H"] = c.H;
  j["L_pi"] = c.L_pi;
  j["gamma"] = c.gamma;
  j["lambda_w"] = c.lambda_w;
  j["lambda_Q"] = c.lambda_Q;
  j["v_w"] = c.v_w;
  j["v_Q"] = c.v_Q;
  j["v_M"] = c.v_M;
  j["mu_zeta"] = c.mu_zeta;
  j["mu_xi"] = c.mu_xi;
  j["L"] = c.L;
  j["kappa_zeta"] = c.kappa_zeta;
  j["kappa_xi"] = c.kappa_xi;
  j["R_zeta"] = c.R_zeta;
  j["R_xi"] = c.R_xi;
  j["R_0"] = c.R_0;
  j["R_prime"] = c.R_prime;
  j["C_W"] = c.C_W;
  j["C_Q"] = c.C_Q;
  j["sigma_K"] = c.sigma_K;
  j["sigma_M"] = c.sigma_M;
  j["sigma_R"] = c.sigma_R;
  j["sigma_nu"] = c.sigma_nu;
  j["sigma_theta"] = c.sigma_theta;
  j["sigma_zeta"] = c.sigma_zeta;
  j["sigma_xi"] = c.sigma_xi;
  j["sigma"] = c.sigma;
  j["L_bar_zeta"] = c.L_bar_zeta;
  j["L_bar_xi"] = c.L_bar_xi;
  j["C_zeta_xi"] = c.C_zeta_xi;
  j["L_zeta_xi"] = c.L_zeta_xi;
  return j;
}

}  // namespace opsaddle
