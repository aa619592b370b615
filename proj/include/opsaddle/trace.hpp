#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace opsaddle {

struct TraceMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;  // 0 under OPSADDLE_DETERMINISTIC_CLOCK=1
};

// Per-iteration metrics of one optimizer run, ordered by iteration.
struct RunTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  TraceMeta meta;

  void add_row(std::vector<double> row);
  double last(const std::string& column) const;
  std::vector<double> column(const std::string& name) const;
};

// True when the environment requests reproducible (zeroed) wallclock fields.
bool deterministic_clock();

std::string write_trace_csv(const RunTrace& trace);

}  // namespace opsaddle
