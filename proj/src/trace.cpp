#include "opsaddle/trace.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "opsaddle/errors.hpp"

namespace opsaddle {

void RunTrace::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw InvalidInput("trace row width mismatch");
  rows.push_back(std::move(row));
}

namespace {
int column_index(const std::vector<std::string>& columns, const std::string& name) {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw InvalidInput("trace column not found: " + name);
}
}  // namespace

double RunTrace::last(const std::string& name) const {
  if (rows.empty()) throw InvalidInput("trace is empty");
  return rows.back()[column_index(columns, name)];
}

std::vector<double> RunTrace::column(const std::string& name) const {
  const int idx = column_index(columns, name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

bool deterministic_clock() {
  const char* v = std::getenv("OPSADDLE_DETERMINISTIC_CLOCK");
  return v != nullptr && std::strcmp(v, "0") != 0;
}

std::string write_trace_csv(const RunTrace& trace) {
  std::string out;
  char buf[64];
  out += "# config_hash=" + trace.meta.config_hash + "\n";
  out += "# seed=" + std::to_string(trace.meta.seed) + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", trace.meta.wall_ms);
  out += std::string("# wall_ms=") + buf + "\n";
  for (std::size_t i = 0; i < trace.columns.size(); ++i) {
    if (i) out += ",";
    out += trace.columns[i];
  }
  out += "\n";
  for (const auto& row : trace.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace opsaddle
