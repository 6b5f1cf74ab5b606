#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "experiment.hpp"

namespace locdim {

namespace detail {
inline std::string fmt4(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}
}  // namespace detail

// Median (IQR) of the normalized errors per estimator, plus the normalizer.
inline std::string render_table(const ResultTable& t) {
  std::ostringstream os;
  const auto& c = t.config;
  os << c.target << ", n = " << c.n << ", sigma = " << c.noise_sigma * 100 << "%, " << c.repetitions
     << " repetitions, N = " << c.N_eval << "\n";
  os << "lambda = " << detail::fmt4(t.lambda) << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-22s %s\n", "estimator", "median (IQR)", "missing");
  os << line;
  std::snprintf(line, sizeof line, "%-12s %-22s\n", "avg-error", detail::fmt4(t.normalizer).c_str());
  os << line;
  for (const auto& e : t.estimators) {
    std::string cell = detail::fmt4(e.median) + " (" + detail::fmt4(e.iqr) + ")";
    std::snprintf(line, sizeof line, "%-12s %-22s %d\n", e.name.c_str(), cell.c_str(), e.missing);
    os << line;
  }
  for (const auto& w : t.warnings) os << "warning: " << w << "\n";
  return os.str();
}

// One row per (estimator, repetition) for plotting.
inline std::string render_csv(const ResultTable& t) {
  std::ostringstream os;
  os << "estimator,repetition,normalized_error\n";
  for (const auto& e : t.estimators)
    for (size_t r = 0; r < e.errors.size(); ++r) {
      os << e.name << "," << r << ",";
      if (!std::isnan(e.errors[r])) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", e.errors[r]);
        os << buf;
      }
      os << "\n";
    }
  return os.str();
}

}  // namespace locdim
