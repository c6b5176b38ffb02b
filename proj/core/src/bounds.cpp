#include "loopexp/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace loopexp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double log_binomial(int d, int i) {
  return std::lgamma(d + 1.0) - std::lgamma(i + 1.0) - std::lgamma(d - i + 1.0);
}

void check_counts(std::span<const int> counts) {
  for (int c : counts)
    if (c < 0) throw PreconditionError("degree counts must be non-negative");
}

}  // namespace

void BoundConstants::validate() const {
  if (!(alpha_full > 0.0 && alpha_full < 1.0)) throw PreconditionError("alpha_d must lie in (0, 1)");
  if (!(alpha_partial > 1.0)) throw PreconditionError("alpha_i must exceed 1");
  if (!(tail_constant > 0.0)) throw PreconditionError("tail constant must be positive");
}

DegreeCounts degree_counts(std::span<const int> profile) {
  DegreeCounts counts;
  for (std::size_t i = 2; i < profile.size(); ++i) counts.push_back(profile[i]);
  return counts;
}

double activity_bound(std::span<const int> counts, double h, const BoundConstants& constants) {
  constants.validate();
  check_counts(counts);
  if (!(h >= 0.0)) throw PreconditionError("h must be non-negative");
  if (counts.empty()) throw PreconditionError("need counts n_2..n_d");
  const int d = static_cast<int>(counts.size()) + 1;
  double bound = std::pow(1.0 - constants.alpha_full * 0.5 * d * h * h, counts.back());
  for (int i = 2; i < d; ++i)
    bound *= std::pow(constants.alpha_partial * std::pow(h, d - i), counts[i - 2]);
  return bound;
}

double expander_activity_bound(int polymer_nodes, double h) {
  if (polymer_nodes < 0) throw PreconditionError("polymer size must be non-negative");
  return std::pow(2.0 * h, 0.18 * polymer_nodes);
}

double log_falling_factorial(double m, double k) {
  if (k == 0.0) return 0.0;
  if (!(m - k + 1.0 > 0.0)) throw PreconditionError("falling factorial out of range");
  return std::lgamma(m + 1.0) - std::lgamma(m - k + 1.0);
}

double log_mackay_probability_bound(std::span<const int> counts, int n, int d) {
  check_counts(counts);
  if (static_cast<int>(counts.size()) != d - 1) throw PreconditionError("need counts n_2..n_d");
  double half_stubs = 0.0;
  double numerator = 0.0;
  for (int i = 2; i <= d; ++i) {
    const int c = counts[i - 2];
    half_stubs += 0.5 * i * c;
    numerator += c * log_falling_factorial(d, i);
  }
  const double pool = 0.5 * n * d - 2.0 * d * d;
  if (half_stubs + 2.0 * d * d > 0.5 * n * d)
    throw PreconditionError("containment bound requires (1/2) sum i n_i + 2 d^2 <= n d / 2");
  return numerator - half_stubs * std::log(2.0) - log_falling_factorial(pool, half_stubs);
}

double mackay_probability_bound(std::span<const int> counts, int n, int d) {
  return std::exp(log_mackay_probability_bound(counts, n, d));
}

double log_subgraph_count_bound(std::span<const int> counts, int n) {
  check_counts(counts);
  const int d = static_cast<int>(counts.size()) + 1;
  int touched = 0;
  double stubs = 0.0;
  double value = 0.0;
  for (int i = 2; i <= d; ++i) {
    const int c = counts[i - 2];
    touched += c;
    stubs += static_cast<double>(i) * c;
    value -= std::lgamma(c + 1.0) + c * std::lgamma(i + 1.0);
  }
  if (touched > n) throw PreconditionError("more touched nodes than available");
  const double half = 0.5 * stubs;
  value += std::lgamma(n + 1.0) - std::lgamma(n - touched + 1.0);
  value += std::lgamma(stubs + 1.0) - std::lgamma(half + 1.0) - half * std::log(2.0);
  return value;
}

double subgraph_count_bound(std::span<const int> counts, int n) {
  return std::exp(log_subgraph_count_bound(counts, n));
}

bool DegreeProfileVector::in_domain(double slack) const {
  double s = 0.0;
  for (double v : x) {
    if (v < -slack || v > 1.0 + slack) return false;
    s += v;
  }
  return s >= 0.5 - slack && s <= 1.0 + slack;
}

double exponent_function(const DegreeProfileVector& point, double h, std::optional<double> n,
                         const BoundConstants& constants) {
  const int d = point.d();
  if (d < 2) throw PreconditionError("need at least one coordinate");
  if (!point.in_domain()) throw PreconditionError("profile vector outside the domain 1/2 <= sum x_i <= 1");
  if (!(h >= 0.0)) throw PreconditionError("h must be non-negative");
  if (!(constants.alpha_full > 0.0)) throw PreconditionError("alpha_d must be positive");

  double s = 0.0, mu = 0.0;
  for (int i = 2; i <= d; ++i) {
    const double xi = std::max(point.x[i - 2], 0.0);
    s += xi;
    mu += 0.5 * i * xi;
  }
  s = std::min(s, 1.0);
  const double beta = 0.5 * d - (n ? 2.0 * d * d / *n : 0.0);
  const double gap = beta - mu;
  if (!(beta > 0.0) || gap < -1e-12)
    throw PreconditionError("exponent undefined: n too small for this profile (beta <= mu)");

  double value = xlogx(mu) - xlogx(1.0 - s) - xlogx(beta) + xlogx(std::max(gap, 0.0));
  for (int i = 2; i <= d; ++i) {
    const double xi = std::max(point.x[i - 2], 0.0);
    if (xi > 0.0) value -= xi * (std::log(xi) - log_binomial(d, i));
  }

  const double full = 1.0 - constants.alpha_full * 0.5 * d * h * h;
  if (!(full > 0.0)) throw PreconditionError("1 - alpha_d (d/2) h^2 must be positive");
  value += std::max(point.x[d - 2], 0.0) * std::log(full);
  for (int i = 2; i < d; ++i) {
    const double xi = std::max(point.x[i - 2], 0.0);
    if (xi == 0.0) continue;
    if (h == 0.0) return kNegInf;
    value += xi * std::log(constants.alpha_partial * std::pow(h, d - i));
  }
  return value;
}

namespace {

struct GridWalker {
  int d;
  double step;
  long long units;
  double h;
  std::optional<double> n;
  const BoundConstants& constants;
  std::ostream* csv;
  ExponentScan& scan;
  std::vector<long long> counts;

  void walk(int coordinate, long long used) {
    if (coordinate == d - 1) {
      if (2 * used < units) return;
      visit();
      return;
    }
    for (long long c = 0; used + c <= units; ++c) {
      counts[coordinate] = c;
      walk(coordinate + 1, used + c);
    }
  }

  void visit() {
    DegreeProfileVector point;
    for (long long c : counts) point.x.push_back(static_cast<double>(c) * step);
    double value = 0.0;
    try {
      value = exponent_function(point, h, n, constants);
    } catch (const PreconditionError&) {
      ++scan.skipped;
      return;
    }
    ++scan.points;
    if (!(value < 0.0)) scan.all_negative = false;
    if (scan.argmax.empty() || value > scan.max_value) {
      scan.max_value = value;
      scan.argmax = point.x;
    }
    if (csv) {
      char buffer[64];
      for (double xi : point.x) {
        std::snprintf(buffer, sizeof buffer, "%.6g,", xi);
        *csv << buffer;
      }
      std::snprintf(buffer, sizeof buffer, "%.17g", value);
      *csv << buffer << '\n';
    }
  }
};

}  // namespace

ExponentScan scan_exponent(int d, double h, double grid_step, std::optional<double> n,
                           const BoundConstants& constants, std::ostream* csv) {
  if (!(grid_step > 0.0 && grid_step <= 0.1)) throw PreconditionError("grid step must lie in (0, 0.1]");
  if (d < 2) throw PreconditionError("degree must be at least 2");
  ExponentScan scan;
  const long long units = std::llround(1.0 / grid_step);
  if (std::abs(units * grid_step - 1.0) > 1e-9) throw PreconditionError("grid step must divide 1");
  if (csv) {
    for (int i = 2; i <= d; ++i) *csv << "x_" << i << ',';
    *csv << "exponent\n";
  }
  GridWalker walker{d, grid_step, units, h, n, constants, csv, scan, std::vector<long long>(d - 1, 0)};
  walker.walk(0, 0);
  return scan;
}

double tail_probability_bound(double delta, double h, int d, int n, const BoundConstants& constants) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (!(constants.tail_constant > 0.0)) throw PreconditionError("tail constant must be positive");
  if (!(constants.alpha_full > 0.0)) throw PreconditionError("alpha_d must be positive");
  return constants.tail_constant / delta * std::exp(-n * constants.alpha_full * 0.5 * d * h * h);
}

}  // namespace loopexp
