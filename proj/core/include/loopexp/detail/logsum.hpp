#pragma once

#include <cmath>
#include <limits>

namespace loopexp::detail {

/// Running sum of exp(x) kept as max + ln(scaled sum).
struct LogSum {
  double shift = -std::numeric_limits<double>::infinity();
  double scaled = 0.0;

  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term <= shift) {
      scaled += std::exp(log_term - shift);
    } else {
      scaled = scaled * std::exp(shift - log_term) + 1.0;
      shift = log_term;
    }
  }

  void merge(const LogSum& other) {
    if (other.scaled == 0.0) return;
    if (scaled == 0.0) {
      *this = other;
      return;
    }
    if (other.shift <= shift) {
      scaled += other.scaled * std::exp(other.shift - shift);
    } else {
      scaled = scaled * std::exp(shift - other.shift) + other.scaled;
      shift = other.shift;
    }
  }

  bool empty() const { return scaled == 0.0; }
  double value() const { return shift + std::log(scaled); }
};

}  // namespace loopexp::detail
