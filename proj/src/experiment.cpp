#include "opsaddle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "opsaddle/bias.hpp"
#include "opsaddle/errors.hpp"
#include "opsaddle/io.hpp"

namespace opsaddle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) ok = true;
    if (!ok) throw InvalidInput("config: unknown key '" + it.key() + "' in " + where);
  }
}

const std::vector<std::string> kOverrideKeys = {
    "dataset_seed",      "psreda.K",          "psreda.q",
    "psreda.S1",         "psreda.S2",         "psreda.m",
    "psreda.K0",         "psreda.lambda_inner", "psreda.step_denom",
    "psreda.init_mode",  "ospim.T",           "ospim.B",
    "ospim.alpha",       "ospim.beta",        "ospim.c",
    "ospim.eta_theta",   "ospim.c_oracle",    "ospim.ls_multiplier",
    "constants.probe_policies", "constants.probe_seed"};

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

}  // namespace

double ExperimentConfig::override_or(const std::string& key, double fallback) const {
  const auto it = overrides.find(key);
  return it == overrides.end() ? fallback : it->second;
}

std::uint64_t ExperimentConfig::dataset_seed() const {
  return static_cast<std::uint64_t>(override_or("dataset_seed", 12345.0));
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: not valid json: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"mdp", "features", "behavior", "dataset_n", "lambda_w", "lambda_Q",
                       "algorithm", "oracle_kind", "epsilon", "seeds", "output_dir",
                       "overrides", "infinite_data", "compare_oracles", "bias_report"},
                      "top level");

  ExperimentConfig c;
  c.raw = j;
  c.hash = fnv1a_hex(j.dump());
  try {
    const json& mdp = j.at("mdp");
    if (mdp.contains("file")) {
      reject_unknown_keys(mdp, {"file"}, "mdp");
      c.mdp_source = ExperimentConfig::MdpSource::file;
      c.mdp_file = mdp.at("file").get<std::string>();
    } else if (mdp.contains("inline")) {
      reject_unknown_keys(mdp, {"inline"}, "mdp");
      c.mdp_source = ExperimentConfig::MdpSource::inline_json;
      c.mdp_inline = mdp.at("inline");
    } else if (mdp.contains("random")) {
      reject_unknown_keys(mdp, {"random"}, "mdp");
      const json& r = mdp.at("random");
      reject_unknown_keys(r, {"n_states", "n_actions", "gamma", "seed"}, "mdp.random");
      c.mdp_source = ExperimentConfig::MdpSource::random;
      c.rand_states = r.at("n_states").get<int>();
      c.rand_actions = r.at("n_actions").get<int>();
      c.rand_gamma = r.at("gamma").get<double>();
      c.rand_seed = r.at("seed").get<std::uint64_t>();
    } else {
      throw InvalidInput("config: mdp needs one of file/inline/random");
    }

    const json& feats = j.at("features");
    reject_unknown_keys(feats, {"type", "dim_z", "dim_xi", "seed"}, "features");
    const std::string ftype = feats.at("type").get<std::string>();
    if (ftype == "onehot") {
      c.feature_family = ExperimentConfig::FeatureFamily::onehot;
    } else if (ftype == "random") {
      c.feature_family = ExperimentConfig::FeatureFamily::random;
      c.dim_z = feats.at("dim_z").get<int>();
      c.dim_xi = feats.at("dim_xi").get<int>();
      c.feature_seed = feats.at("seed").get<std::uint64_t>();
    } else {
      throw InvalidInput("config: features.type must be onehot or random");
    }

    const json& beh = j.at("behavior");
    reject_unknown_keys(beh, {"type", "path"}, "behavior");
    const std::string btype = beh.at("type").get<std::string>();
    if (btype == "uniform") {
      c.behavior_kind = ExperimentConfig::BehaviorKind::uniform;
    } else if (btype == "file") {
      c.behavior_kind = ExperimentConfig::BehaviorKind::file;
      c.behavior_file = beh.at("path").get<std::string>();
    } else {
      throw InvalidInput("config: behavior.type must be uniform or file");
    }

    c.dataset_n = j.at("dataset_n").get<int>();
    c.lambda_w = j.at("lambda_w").get<double>();
    c.lambda_Q = j.at("lambda_Q").get<double>();
    c.algorithm = j.at("algorithm").get<std::string>();
    const std::string ok = j.at("oracle_kind").get<std::string>();
    if (ok == "least_square")
      c.oracle_kind = OracleKind::least_square;
    else if (ok == "svreb")
      c.oracle_kind = OracleKind::svreb;
    else
      throw InvalidInput("config: oracle_kind must be least_square or svreb");
    c.epsilon = j.at("epsilon").get<double>();
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("overrides")) {
      for (auto it = j["overrides"].begin(); it != j["overrides"].end(); ++it) {
        if (std::find(kOverrideKeys.begin(), kOverrideKeys.end(), it.key()) ==
            kOverrideKeys.end())
          throw InvalidInput("config: unknown override key '" + it.key() + "'");
        c.overrides[it.key()] = it.value().get<double>();
      }
    }
    if (j.contains("infinite_data")) c.infinite_data = j.at("infinite_data").get<bool>();
    if (j.contains("compare_oracles")) {
      const json& co = j["compare_oracles"];
      reject_unknown_keys(co, {"budgets", "n_seeds"}, "compare_oracles");
      if (co.contains("budgets")) c.compare_budgets = co["budgets"].get<std::vector<std::int64_t>>();
      if (co.contains("n_seeds")) c.compare_seeds = co["n_seeds"].get<int>();
    }
    if (j.contains("bias_report")) {
      const json& br = j["bias_report"];
      reject_unknown_keys(br, {"lambdas", "probe_policies", "probe_points"}, "bias_report");
      if (br.contains("lambdas")) c.bias_lambdas = br["lambdas"].get<std::vector<double>>();
      if (br.contains("probe_policies")) c.bias_probe_policies = br["probe_policies"].get<int>();
      if (br.contains("probe_points")) c.bias_probe_points = br["probe_points"].get<int>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }

  if (c.dataset_n < 1) throw InvalidInput("config: dataset_n must be >= 1");
  if (!(c.lambda_w > 0.0 && c.lambda_Q > 0.0))
    throw InvalidInput("config: lambda_w and lambda_Q must be positive");
  if (c.algorithm != "psreda" && c.algorithm != "ospim")
    throw InvalidInput("config: algorithm must be psreda or ospim");
  if (!(c.epsilon > 0.0)) throw InvalidInput("config: epsilon must be positive");
  if (c.algorithm == "psreda" && !(c.epsilon < 1.0))
    throw InvalidInput("epsilon must be < 1");
  if (c.seeds.empty()) throw InvalidInput("config: seeds must be nonempty");
  if (c.output_dir.empty()) throw InvalidInput("config: output_dir must be set");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_file(path));
}

Instance build_instance(const ExperimentConfig& config, const std::string& base_dir) {
  Instance inst;
  switch (config.mdp_source) {
    case ExperimentConfig::MdpSource::file:
      inst.mdp = mdp_from_json(json::parse(read_file(resolve(base_dir, config.mdp_file))));
      break;
    case ExperimentConfig::MdpSource::inline_json:
      inst.mdp = mdp_from_json(config.mdp_inline);
      break;
    case ExperimentConfig::MdpSource::random: {
      Rng g(config.rand_seed);
      inst.mdp = random_mdp(config.rand_states, config.rand_actions, config.rand_gamma, g);
      break;
    }
  }
  if (config.behavior_kind == ExperimentConfig::BehaviorKind::uniform)
    inst.behavior = uniform_behavior(inst.mdp.n_states, inst.mdp.n_actions);
  else
    inst.behavior =
        behavior_from_json(json::parse(read_file(resolve(base_dir, config.behavior_file))));
  inst.behavior.validate();
  if (inst.behavior.mu.size() != inst.mdp.n_sa())
    throw InvalidInput("behavior distribution size does not match the mdp");

  if (config.feature_family == ExperimentConfig::FeatureFamily::onehot)
    inst.features = onehot_features(inst.mdp.n_states, inst.mdp.n_actions);
  else
    inst.features = random_features(inst.mdp.n_states, inst.mdp.n_actions, config.dim_z,
                                    config.dim_xi, config.feature_seed);
  return inst;
}

Problem build_problem(const ExperimentConfig& config, const Instance& instance) {
  const BallRegime regime =
      config.algorithm == "psreda" ? BallRegime::expanded : BallRegime::saddle;
  ProblemOptions options;
  options.probe_policies = static_cast<int>(config.override_or("constants.probe_policies", 64));
  options.probe_seed = static_cast<std::uint64_t>(config.override_or("constants.probe_seed", 2024));
  if (config.infinite_data)
    return make_exact_problem(instance.mdp, instance.behavior, instance.features,
                              config.lambda_w, config.lambda_Q, regime, options);
  return make_problem(instance.mdp, instance.behavior, instance.features, config.lambda_w,
                      config.lambda_Q, regime, config.dataset_n, config.dataset_seed(),
                      options);
}

PsredaConfig psreda_config_for(const ExperimentConfig& config, const ProblemConstants& c) {
  PsredaConfig p = PsredaConfig::from_theorem(c, config.epsilon);
  p.outer_iters = config.override_or("psreda.K", p.outer_iters);
  p.refresh_period = config.override_or("psreda.q", p.refresh_period);
  p.big_batch = config.override_or("psreda.S1", p.big_batch);
  p.inner_batch = config.override_or("psreda.S2", p.inner_batch);
  p.inner_iters = config.override_or("psreda.m", p.inner_iters);
  p.init_iters = config.override_or("psreda.K0", p.init_iters);
  p.lambda_inner = config.override_or("psreda.lambda_inner", p.lambda_inner);
  p.step_denom = config.override_or("psreda.step_denom", p.step_denom);
  p.init_mode = config.override_or("psreda.init_mode", 0.0) > 0.5
                    ? PsredaConfig::InitMode::stochastic
                    : PsredaConfig::InitMode::exact;
  return p;
}

OspimConfig ospim_config_for(const ExperimentConfig& config, const ProblemConstants& c) {
  OspimConfig o = OspimConfig::from_theorem(c, config.epsilon, config.oracle_kind);
  o.outer_iters = config.override_or("ospim.T", o.outer_iters);
  o.batch_size = config.override_or("ospim.B", o.batch_size);
  o.alpha = config.override_or("ospim.alpha", o.alpha);
  o.beta = config.override_or("ospim.beta", o.beta);
  o.c = config.override_or("ospim.c", o.c);
  o.eta_theta = config.override_or("ospim.eta_theta", o.eta_theta);
  o.c_oracle = config.override_or("ospim.c_oracle", o.c_oracle);
  o.ls_multiplier = config.override_or("ospim.ls_multiplier", o.ls_multiplier);
  return o;
}

int worker_threads() {
  if (const char* env = std::getenv("OPSADDLE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Fans the per-seed jobs out over worker threads; results land in seed order.
template <typename Fn>
void parallel_over_seeds(const std::vector<std::uint64_t>& seeds, Fn&& fn) {
  const int workers = std::min<int>(worker_threads(), static_cast<int>(seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(seeds.size());
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json aggregate_final_rows(const std::vector<RunTrace>& traces) {
  json agg;
  if (traces.empty() || traces.front().rows.empty()) return agg;
  const auto& columns = traces.front().columns;
  for (std::size_t ci = 0; ci < columns.size(); ++ci) {
    double mean = 0.0;
    for (const auto& t : traces) mean += t.rows.back()[ci];
    mean /= traces.size();
    double var = 0.0;
    for (const auto& t : traces) var += std::pow(t.rows.back()[ci] - mean, 2);
    const double sd = traces.size() > 1 ? std::sqrt(var / (traces.size() - 1)) : 0.0;
    agg[columns[ci]] = {{"mean", mean}, {"std", sd}};
  }
  return agg;
}

}  // namespace

void cmd_generate(const ExperimentConfig& config, const std::string& base_dir) {
  const Instance inst = build_instance(config, base_dir);
  const fs::path out(resolve(base_dir, config.output_dir));
  fs::create_directories(out);

  json mdp_json = mdp_to_json(inst.mdp);
  mdp_json["config_hash"] = config.hash;
  write_file((out / "mdp.json").string(), mdp_json.dump(2) + "\n");

  json feat_json = features_to_json(inst.features);
  feat_json["config_hash"] = config.hash;
  write_file((out / "features.json").string(), feat_json.dump(2) + "\n");

  const OfflineDataset data =
      sample_dataset(inst.mdp, inst.behavior, config.dataset_n, config.dataset_seed());
  write_file((out / "dataset.csv").string(), dataset_to_csv(data, config.hash));

  const Problem problem = build_problem(config, inst);
  json constants = constants_to_json(problem.constants);
  constants["config_hash"] = config.hash;
  write_file((out / "constants.json").string(), constants.dump(2) + "\n");
}

void cmd_run(const ExperimentConfig& config, const std::string& base_dir) {
  const Instance inst = build_instance(config, base_dir);
  const Problem problem = build_problem(config, inst);
  const fs::path out(resolve(base_dir, config.output_dir));
  fs::create_directories(out);

  std::vector<RunTrace> traces(config.seeds.size());
  if (config.algorithm == "psreda") {
    const PsredaConfig pcfg = psreda_config_for(config, problem.constants);
    pcfg.validate_for_run();
    parallel_over_seeds(config.seeds, [&](std::size_t i) {
      const auto start = std::chrono::steady_clock::now();
      PsredaRun run = run_psreda(problem, pcfg, config.seeds[i]);
      const auto stop = std::chrono::steady_clock::now();
      run.trace.meta.config_hash = config.hash;
      run.trace.meta.wall_ms =
          deterministic_clock()
              ? 0.0
              : std::chrono::duration<double, std::milli>(stop - start).count();
      traces[i] = std::move(run.trace);
    });
  } else {
    const OspimConfig ocfg = ospim_config_for(config, problem.constants);
    ocfg.validate_for_run();
    parallel_over_seeds(config.seeds, [&](std::size_t i) {
      const auto start = std::chrono::steady_clock::now();
      OspimRun run = run_ospim(problem, ocfg, config.seeds[i]);
      const auto stop = std::chrono::steady_clock::now();
      run.trace.meta.config_hash = config.hash;
      run.trace.meta.wall_ms =
          deterministic_clock()
              ? 0.0
              : std::chrono::duration<double, std::milli>(stop - start).count();
      traces[i] = std::move(run.trace);
    });
  }

  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    const std::string name = "trace_seed" + std::to_string(config.seeds[i]) + ".csv";
    write_file((out / name).string(), write_trace_csv(traces[i]));
  }
  json constants = constants_to_json(problem.constants);
  constants["config_hash"] = config.hash;
  write_file((out / "constants.json").string(), constants.dump(2) + "\n");

  json agg;
  agg["config_hash"] = config.hash;
  agg["n_seeds"] = config.seeds.size();
  agg["final"] = aggregate_final_rows(traces);
  write_file((out / "aggregate.json").string(), agg.dump(2) + "\n");
}

void cmd_compare_oracles(const ExperimentConfig& config, const std::string& base_dir) {
  const Instance inst = build_instance(config, base_dir);
  const Problem problem = build_problem(config, inst);
  const SoftmaxPolicy policy = SoftmaxPolicy::uniform(inst.mdp.n_states, inst.mdp.n_actions);
  const auto rows = compare_oracles(problem, policy, config.compare_budgets,
                                    config.compare_seeds, config.seeds.front(),
                                    deterministic_clock());
  std::string csv = "# config_hash=" + config.hash + "\n";
  csv += "oracle,n_samples,mean_err,std_err,wall_ms\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.17g,%.17g,%.17g\n", r.oracle.c_str(),
                  static_cast<long long>(r.n_samples), r.mean_err, r.std_err, r.wall_ms);
    csv += buf;
  }
  const fs::path out(resolve(base_dir, config.output_dir));
  fs::create_directories(out);
  write_file((out / "compare_oracles.csv").string(), csv);
}

void cmd_bias_report(const ExperimentConfig& config, const std::string& base_dir) {
  const Instance inst = build_instance(config, base_dir);
  const Problem problem = build_problem(config, inst);

  ProblemOptions options;
  options.probe_policies = static_cast<int>(config.override_or("constants.probe_policies", 64));
  const Problem population =
      config.infinite_data
          ? problem
          : make_exact_problem(inst.mdp, inst.behavior, inst.features, config.lambda_w,
                               config.lambda_Q, problem.regime, options);

  Rng g(config.seeds.front());
  std::vector<SoftmaxPolicy> probe_policies;
  for (int i = 0; i < config.bias_probe_policies; ++i)
    probe_policies.push_back(SoftmaxPolicy::random(inst.mdp.n_states, inst.mdp.n_actions, 2.0, g));
  std::vector<Vec> probe_zetas;
  for (int i = 0; i < 8; ++i)
    probe_zetas.push_back(sample_in_ball(problem.dim_z(), problem.constants.R_zeta, g));

  const MisspecResult mis =
      misspecification(inst.mdp, inst.behavior, inst.features, probe_policies, probe_zetas,
                       config.lambda_w, config.lambda_Q, problem.constants.v_w);
  const double eps_bar =
      config.infinite_data
          ? 0.0
          : data_deviation_probe(problem, population, config.bias_probe_points,
                                 config.seeds.front());
  const double C =
      concentrability(inst.mdp, inst.behavior,
                      std::span<const SoftmaxPolicy>(probe_policies.data(), probe_policies.size()));
  const ProblemConstants& pc = problem.constants;
  const BiasBounds bounds =
      bias_bounds(pc.G, pc.gamma, C, pc.C_W, pc.C_Q, pc.kappa_zeta, pc.kappa_xi,
                  config.lambda_w, config.lambda_Q, mis.eps_W, mis.eps_Q, eps_bar);

  const SoftmaxPolicy at = SoftmaxPolicy::uniform(inst.mdp.n_states, inst.mdp.n_actions);
  BiasReport report;
  report.eps1 = mis.eps1;
  report.eps2 = mis.eps2;
  report.eps_W = mis.eps_W;
  report.eps_Q = mis.eps_Q;
  report.eps_data_bar_probe = eps_bar;
  report.eps_reg = bounds.eps_reg;
  report.eps_func = bounds.eps_func;
  report.eps_data = bounds.eps_data;
  report.exact_gap = measured_gap(problem, at);
  report.bound_sum = report.eps_reg + report.eps_func + report.eps_data;
  report.slack = report.bound_sum - report.exact_gap;

  json j;
  j["config_hash"] = config.hash;
  j["eps1"] = report.eps1;
  j["eps2"] = report.eps2;
  j["eps_W"] = report.eps_W;
  j["eps_Q"] = report.eps_Q;
  j["eps_data_bar_probe"] = report.eps_data_bar_probe;
  j["eps_reg"] = report.eps_reg;
  j["eps_func"] = report.eps_func;
  j["eps_data"] = report.eps_data;
  j["exact_gap"] = report.exact_gap;
  j["bound_sum"] = report.bound_sum;
  j["slack"] = report.slack;
  j["concentrability"] = C;
  j["provenance"] = {{"lambda_w", config.lambda_w},
                     {"lambda_Q", config.lambda_Q},
                     {"feature_family",
                      config.feature_family == ExperimentConfig::FeatureFamily::onehot
                          ? "onehot"
                          : "random"},
                     {"probe_policies", config.bias_probe_policies},
                     {"probe_points", config.bias_probe_points},
                     {"infinite_data", config.infinite_data},
                     {"seed", config.seeds.front()}};

  json sweep = json::array();
  for (const auto& row :
       reg_bias_vs_lambda(inst.mdp, inst.behavior, at, config.bias_lambdas)) {
    sweep.push_back({{"lambda", row.lambda},
                     {"w_dist", row.w_dist},
                     {"q_dist", row.q_dist},
                     {"w_bound", row.w_bound},
                     {"q_bound", row.q_bound}});
  }
  j["lambda_sweep"] = sweep;

  const fs::path out(resolve(base_dir, config.output_dir));
  fs::create_directories(out);
  write_file((out / "bias_report.json").string(), j.dump(2) + "\n");
}

int cmd_check(const ExperimentConfig& config, const std::string& base_dir) {
  const Instance inst = build_instance(config, base_dir);
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  const Problem problem = build_problem(config, inst);
  check("assumption B: singular-value floors positive",
        problem.constants.v_w > 1e-12 && problem.constants.v_Q > 1e-12 &&
            problem.constants.v_M > 1e-12);

  Rng g(7);
  bool saddle_ok = true, radius_ok = true, grad_ok = true;
  for (int i = 0; i < 8; ++i) {
    const SoftmaxPolicy pi = SoftmaxPolicy::random(inst.mdp.n_states, inst.mdp.n_actions, 1.5, g);
    const DerivedMatrices d = problem.derived_for(pi);
    const ClosedFormSaddle s =
        closed_form_saddle(d, problem.lambda_w, problem.lambda_Q, problem.gamma());
    const double residual = grad_zeta(d, s.zeta, s.xi, problem.lambda_w).norm() +
                            grad_xi(d, s.zeta, s.xi, problem.lambda_Q, problem.gamma()).norm();
    saddle_ok = saddle_ok && residual <= 1e-8;
    radius_ok = radius_ok && s.zeta.norm() <= problem.constants.R_zeta + 1e-9 &&
                s.xi.norm() <= problem.constants.R_xi + 1e-9;

    // central finite differences of the loss against the analytic gradients
    const Vec zeta = sample_in_ball(problem.dim_z(), problem.constants.R_zeta, g);
    const Vec xi = sample_in_ball(problem.dim_xi(), problem.constants.R_xi, g);
    const GradientTriple exact = problem.grad_exact(pi, zeta, xi);
    const double h = 1e-6;
    for (int k = 0; k < std::min<int>(3, problem.dim_z()); ++k) {
      Vec zp = zeta, zm = zeta;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (problem.loss(pi, zp, xi) - problem.loss(pi, zm, xi)) / (2 * h);
      grad_ok = grad_ok && std::abs(fd - exact.g_zeta[k]) <= 1e-5 * std::max(1.0, std::abs(fd));
    }
  }
  check("closed-form saddle stationarity <= 1e-8", saddle_ok);
  check("saddle norms inside (R_zeta, R_xi)", radius_ok);
  check("analytic zeta-gradient matches finite differences", grad_ok);

  const PolicyConstants pc = policy_constants();
  bool policy_ok = true;
  for (int i = 0; i < 200; ++i) {
    const SoftmaxPolicy pi = SoftmaxPolicy::random(inst.mdp.n_states, inst.mdp.n_actions, 3.0, g);
    const int s = static_cast<int>(uniform01(g) * inst.mdp.n_states);
    const int a = static_cast<int>(uniform01(g) * inst.mdp.n_actions);
    policy_ok = policy_ok && pi.log_policy_grad(s, a).norm() <= pc.G + 1e-9;
  }
  check("policy score norm within G", policy_ok);
  return failures;
}

}  // namespace opsaddle
