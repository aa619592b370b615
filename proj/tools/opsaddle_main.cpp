// Command-line front end: problem generation, seeded experiment execution,
// oracle comparison, and bias diagnostics. Exit codes: 0 success, 2 config or
// validation error, 3 assumption violation, 4 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opsaddle/errors.hpp"
#include "opsaddle/experiment.hpp"
#include "opsaddle/io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (json)")->required();
  cmd->add_option("--override", args.overrides, "key=value schedule override (repeatable)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "replace the config seed list with one seed");
}

opsaddle::ExperimentConfig make_config(const CommonArgs& args) {
  using opsaddle::InvalidInput;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(opsaddle::read_file(args.config_path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: not valid json: ") + e.what());
  }
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidInput("--override expects key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    try {
      j["overrides"][key] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw InvalidInput("--override value is not numeric: " + kv);
    }
  }
  if (!args.out_dir.empty()) j["output_dir"] = args.out_dir;
  if (args.seed >= 0) j["seeds"] = std::vector<std::int64_t>{args.seed};
  return opsaddle::parse_config(j.dump());
}

std::string config_dir(const CommonArgs& args) {
  return std::filesystem::path(args.config_path).parent_path().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy saddle-point policy optimization harness"};
  app.require_subcommand(1);

  CommonArgs gen_args, run_args, cmp_args, bias_args, check_args;
  CLI::App* gen = app.add_subcommand("generate", "write mdp/features/dataset/constants files");
  add_common(gen, gen_args);
  CLI::App* run = app.add_subcommand("run", "run the configured optimizer over all seeds");
  add_common(run, run_args);
  CLI::App* cmp = app.add_subcommand("compare-oracles", "oracle error vs sample budget table");
  add_common(cmp, cmp_args);
  CLI::App* bias = app.add_subcommand("bias-report", "bias decomposition diagnostics");
  add_common(bias, bias_args);
  CLI::App* chk = app.add_subcommand("check", "run the invariant suite on the instance");
  add_common(chk, check_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      opsaddle::cmd_generate(make_config(gen_args), config_dir(gen_args));
    } else if (run->parsed()) {
      opsaddle::cmd_run(make_config(run_args), config_dir(run_args));
    } else if (cmp->parsed()) {
      opsaddle::cmd_compare_oracles(make_config(cmp_args), config_dir(cmp_args));
    } else if (bias->parsed()) {
      opsaddle::cmd_bias_report(make_config(bias_args), config_dir(bias_args));
    } else if (chk->parsed()) {
      const int failures = opsaddle::cmd_check(make_config(check_args), config_dir(check_args));
      if (failures > 0) {
        std::cerr << failures << " invariant check(s) failed\n";
        return 4;
      }
    }
  } catch (const opsaddle::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const opsaddle::AssumptionViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
