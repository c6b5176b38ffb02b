#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "loopexp/graphs.hpp"

namespace loopexp {

/// Activity-bound constants: alpha_d in (0, 1) for full-degree nodes and
/// alpha_i > 1 for nodes of degree 2..d-1. The defaults are configuration
/// values, not derived quantities.
struct BoundConstants {
  double alpha_full = 0.9;
  double alpha_partial = 1.2;
  double tail_constant = 1.0;

  void validate() const;
};

/// Degree profile (n_2, ..., n_d) of a subgraph; entry i-2 holds n_i.
using DegreeCounts = std::vector<int>;

/// Converts a profile indexed 1..d (as returned by subgraph_degree_profile) to DegreeCounts.
DegreeCounts degree_counts(std::span<const int> profile);

/// (1 - alpha_d (d/2) h^2)^{n_d} prod_{i=2}^{d-1} (alpha_i h^{d-i})^{n_i}, with d = counts.size() + 1.
double activity_bound(std::span<const int> counts, double h, const BoundConstants& constants = {});

/// (2h)^{0.18 |gamma|}.
double expander_activity_bound(int polymer_nodes, double h);

/// Bound on P[fixed subgraph with these degree counts is contained in a random
/// d-regular graph on n nodes]:
///   prod_i [d]_i^{n_i} / (2^m [nd/2 - 2d^2]_m),  m = (1/2) sum_i i n_i.
double mackay_probability_bound(std::span<const int> counts, int n, int d);
double log_mackay_probability_bound(std::span<const int> counts, int n, int d);

/// Number of subgraphs of K_n with the given degree counts, estimated from above by
/// the node-assignment multinomial times the stub-pairing factor.
double subgraph_count_bound(std::span<const int> counts, int n);
double log_subgraph_count_bound(std::span<const int> counts, int n);

/// ln m(m-1)...(m-k+1) for real m >= k - 1.
double log_falling_factorial(double m, double k);

/// Point x = (x_2, ..., x_d) of the domain {1/2 <= sum x_i <= 1}.
struct DegreeProfileVector {
  std::vector<double> x;  // x[i-2] = n_i / n
  int d() const { return static_cast<int>(x.size()) + 1; }
  bool in_domain(double slack = 1e-12) const;
};

/// Per-node exponent of (count bound) x (containment bound) x (activity bound) at
/// large n, from Stirling's formula. With mu = (1/2) sum i x_i, s = sum x_i and
/// beta = d/2 - 2d^2/n:
///   mu ln mu - sum x_i ln(x_i / C(d,i)) - (1-s) ln(1-s) - beta ln beta + (beta-mu) ln(beta-mu)
///   + x_d ln(1 - alpha_d (d/2) h^2) + sum_{i<d} x_i ln(alpha_i h^{d-i}).
/// An absent n takes the n -> infinity limit (beta = d/2).
double exponent_function(const DegreeProfileVector& x, double h, std::optional<double> n,
                         const BoundConstants& constants = {});

struct ExponentScan {
  std::vector<double> argmax;
  double max_value = 0.0;
  bool all_negative = true;
  std::size_t points = 0;
  /// Grid points where the finite-n expression is undefined (beta <= mu).
  std::size_t skipped = 0;
};

/// Grid scan of the domain with the given step; optionally streams a CSV surface
/// "x_2,...,x_d,exponent".
ExponentScan scan_exponent(int d, double h, double grid_step, std::optional<double> n,
                           const BoundConstants& constants = {}, std::ostream* csv = nullptr);

/// (C / delta) e^{-n alpha_d (d/2) h^2}.
double tail_probability_bound(double delta, double h, int d, int n, const BoundConstants& constants = {});

}  // namespace loopexp
