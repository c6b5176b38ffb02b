#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loopexp/bp.hpp"
#include "loopexp/graphs.hpp"
#include "loopexp/model.hpp"

namespace loopexp {

/// A real number kept as sign and ln|x|; the correction Z_corr is a signed sum
/// in general, so its logarithm is reported this way.
struct SignedLog {
  int sign = 0;  // -1, 0 or +1
  double log_abs = 0.0;

  static SignedLog of(double x);
  double value() const;
  /// ln x for positive x; NaN otherwise.
  double log() const;
};

/// Local activities
///   K_a(S) = sum_{s_a} p_a(s_a) prod_{b in S} s_ab e^{-s_ab (eta_{a->b} + eta_{b->a})}
/// for every node a and every subset S of its incident edges (as a local mask),
/// where p_a is the normalized local measure f_a prod_b e^{eta_{b->a} s_ab}.
class ActivityTable {
 public:
  ActivityTable(const VertexModel& model, const MessageSet& eta);

  double node_activity(int a, std::uint32_t local_subset) const { return table_[a][local_subset]; }
  /// K(g) = prod over touched nodes of K_a(members at a); 1 for the empty set.
  double activity(const EdgeSubset& s) const;
  int num_nodes() const { return static_cast<int>(table_.size()); }

 private:
  std::vector<std::vector<double>> table_;
};

double node_activity(const VertexModel& model, const MessageSet& eta, int a, std::uint32_t local_subset);
double subgraph_activity(const ActivityTable& table, const EdgeSubset& s);

/// K(gamma) for every catalog entry, in catalog order.
std::vector<double> polymer_activities(const ActivityTable& table, const PolymerCatalog& catalog);

struct ExhaustiveOptions {
  int max_edges = 22;
  int threads = 1;
};

/// Z_corr summed over every edge subset (all_subsets) and over loops only.
struct ZCorrExact {
  double all_subsets = 0.0;
  double loops_only = 0.0;
  /// max |K(g)| over subsets containing a degree-one node.
  double max_dangling = 0.0;
  /// Sum of |K(g)| over loops touching at least `large_threshold` nodes.
  double large_loop_tail = 0.0;
  int large_threshold = 0;
};

ZCorrExact z_corr_exact(const CheckGraph& g, const ActivityTable& table,
                        const ExhaustiveOptions& options = {});

struct PolymerSum {
  double value = 1.0;
  /// The catalog cap is below the host size, so loops with larger components are missing.
  bool truncated = false;
};

/// Sum over collections of pairwise node-disjoint polymers of prod K(gamma_i).
PolymerSum z_corr_polymer_form(const PolymerCatalog& catalog, std::span<const double> activities);

/// The same sum restricted to polymers accepted by `include` and disjoint from `excluded`.
double restricted_polymer_sum(const PolymerCatalog& catalog, std::span<const double> activities,
                              std::span<const char> include, const NodeSet* excluded);

/// Labeled connected graphs on M vertices (M <= 5) as edge masks over the
/// pairs (0,1), (0,2), ..., (M-2,M-1), plus the Ursell weight
///   phi(H) = sum_{G subset of H, G connected spanning} (-1)^{|G|}
/// for every graph H on the same pairs.
struct UrsellTable {
  int order = 0;
  std::vector<std::uint32_t> connected_graphs;
  std::vector<double> weight;  // indexed by H's edge mask
};

const UrsellTable& ursell_table(int order);
int pair_index(int i, int j, int order);

struct MayerExpansion {
  int max_order = 0;
  /// terms[M-1] = order-M contribution to ln Z_corr.
  std::vector<double> terms;
  /// partial_sums[M-1] = sum of the first M terms.
  std::vector<double> partial_sums;

  double value() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

/// Cluster expansion of ln(polymer partition function) truncated at max_order <= 5:
///   order M = (1/M!) sum over ordered M-tuples of prod K(gamma_i) phi(intersection graph).
MayerExpansion mayer_expansion(const PolymerCatalog& catalog, std::span<const double> activities,
                               int max_order);

struct ConvergenceCriterion {
  /// sum_t (1/t!) sup_a sum_{gamma contains a} |gamma|^t |K(gamma)|
  double value = 0.0;
  /// sup_a sum_{gamma contains a} e^{|gamma|} |K(gamma)|, the form with sup and t-sum exchanged.
  double exchanged = 0.0;
  int worst_node = -1;
};

ConvergenceCriterion convergence_criterion(const PolymerCatalog& catalog, std::span<const double> activities);

struct LargePolymerTerm {
  int polymer = 0;
  double activity = 0.0;
  /// Z_p(eta | gamma) / Z_p(eta)
  double ratio = 1.0;
};

struct SplitReport {
  /// Polymers with at least this many nodes are large.
  int threshold = 0;
  double z_p = 1.0;
  /// sum of |K(gamma)| over large polymers.
  double large_tail = 0.0;
  std::vector<LargePolymerTerm> large_terms;
  /// Collections with two disjoint large polymers (both exactly n/2 nodes);
  /// zero whenever the large polymer of a collection is unique.
  double pair_correction = 0.0;
  bool unique_large = true;
  bool truncated = false;

  /// Z_p (1 + sum_gamma K(gamma) Z_p(.|gamma)/Z_p) + pair_correction.
  double reconstructed_z_corr() const;
};

SplitReport split_report(const PolymerCatalog& catalog, std::span<const double> activities);

/// Per-instance record of the loop-series decomposition.
struct ExpansionReport {
  int n = 0;
  int d = 0;
  int num_edges = 0;
  FactorKind kind = FactorKind::CycleCode;
  double p = 0.5;
  double coupling = 0.0;
  double h_bound = 0.0;
  std::uint64_t graph_seed = 0;
  std::uint64_t channel_seed = 0;

  int bp_sweeps = 0;
  double bp_residual = 0.0;
  bool bp_converged = false;

  BetheValue bethe;
  std::optional<double> exact_log_z;
  std::optional<SignedLog> log_z_corr;        // all subsets
  std::optional<SignedLog> log_z_corr_loops;  // loops only
  std::optional<SignedLog> log_z_corr_polymer;
  bool polymer_truncated = false;
  std::optional<double> max_dangling_activity;

  int catalog_cap = 0;
  std::size_t catalog_size = 0;
  int mayer_order = 0;
  std::optional<double> mayer_value;
  std::vector<double> mayer_partial_sums;
  std::optional<double> criterion;
  std::optional<double> criterion_exchanged;

  std::optional<SplitReport> split;

  /// |exact ln Z - ln Z_Bethe - ln Z_corr|, recomputed from the fields above.
  std::optional<double> identity_residual() const;
  /// (1/n) ln Z_corr.
  std::optional<double> f_corr() const;
};

struct AnalysisOptions {
  bool exact_partition = true;
  bool exact_correction = true;
  bool polymer_form = true;
  bool split = false;
  bool criterion = true;
  /// Polymer node cap; 0 means the whole host.
  int catalog_cap = 0;
  int mayer_order = 3;
  PartitionOptions partition;
  ExhaustiveOptions exhaustive;
  EnumerationOptions enumeration;
};

/// Evaluates every enabled piece of the decomposition at the given messages.
ExpansionReport analyze_instance(const VertexModel& model, const MessageSet& eta,
                                 const AnalysisOptions& options = {});

}  // namespace loopexp
