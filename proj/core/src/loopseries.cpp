#include "loopexp/loopseries.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "loopexp/detail/parallel.hpp"

namespace loopexp {

// ---------------------------------------------------------------------------
// SignedLog

SignedLog SignedLog::of(double x) {
  SignedLog s;
  if (x > 0.0) {
    s.sign = 1;
    s.log_abs = std::log(x);
  } else if (x < 0.0) {
    s.sign = -1;
    s.log_abs = std::log(-x);
  } else {
    s.log_abs = -std::numeric_limits<double>::infinity();
  }
  return s;
}

double SignedLog::value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

double SignedLog::log() const {
  return sign > 0 ? log_abs : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Activities

ActivityTable::ActivityTable(const VertexModel& model, const MessageSet& eta) {
  const CheckGraph& g = model.graph();
  if (eta.eta.size() != 2 * static_cast<std::size_t>(g.num_edges()))
    throw PreconditionError("message set does not match the graph");
  table_.resize(g.num_nodes());
  std::vector<double> in, s, weights, prod;
  for (int a = 0; a < g.num_nodes(); ++a) {
    const int deg = g.degree(a);
    const std::size_t size = std::size_t{1} << deg;
    auto f = model.factor_table(a);
    in.resize(deg);
    s.resize(deg);
    double shift = 0.0;
    for (int k = 0; k < deg; ++k) {
      in[k] = eta.incoming(g, a, k);
      s[k] = in[k] + eta.outgoing(g, a, k);
      if (!std::isfinite(in[k]) || !std::isfinite(s[k])) throw PreconditionError("messages must be finite");
      shift += std::abs(in[k]);
    }
    weights.assign(size, 0.0);
    double z = 0.0;
    for (std::uint32_t config = 0; config < size; ++config) {
      if (f[config] == 0.0) continue;
      double exponent = -shift;
      for (int k = 0; k < deg; ++k) exponent += in[k] * local_spin(config, k);
      weights[config] = f[config] * std::exp(exponent);
      z += weights[config];
    }
    if (!(z > 0.0)) throw ComputationError("zero local normalizer at node " + std::to_string(a));

    auto& out = table_[a];
    out.assign(size, 0.0);
    prod.resize(size);
    for (std::uint32_t config = 0; config < size; ++config) {
      if (weights[config] == 0.0) continue;
      const double pa = weights[config] / z;
      // prod[S] = prod_{k in S} s_k e^{-s_k (eta_out + eta_in)}, built from S minus its lowest bit
      prod[0] = 1.0;
      for (std::uint32_t subset = 1; subset < size; ++subset) {
        const int k = std::countr_zero(subset);
        const int spin = local_spin(config, k);
        prod[subset] = prod[subset & (subset - 1)] * spin * std::exp(-spin * s[k]);
      }
      for (std::uint32_t subset = 0; subset < size; ++subset) out[subset] += pa * prod[subset];
    }
    out[0] = 1.0;
  }
}

double ActivityTable::activity(const EdgeSubset& s) const {
  double k = 1.0;
  const auto& nodes = s.nodes();
  const auto& masks = s.local_masks();
  for (std::size_t i = 0; i < nodes.size(); ++i) k *= table_[nodes[i]][masks[i]];
  return k;
}

double node_activity(const VertexModel& model, const MessageSet& eta, int a, std::uint32_t local_subset) {
  if (local_subset >> model.graph().degree(a)) throw PreconditionError("local subset out of range");
  return ActivityTable(model, eta).node_activity(a, local_subset);
}

double subgraph_activity(const ActivityTable& table, const EdgeSubset& s) { return table.activity(s); }

std::vector<double> polymer_activities(const ActivityTable& table, const PolymerCatalog& catalog) {
  std::vector<double> out;
  out.reserve(catalog.size());
  for (const auto& polymer : catalog.polymers) out.push_back(table.activity(polymer));
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive correction

ZCorrExact z_corr_exact(const CheckGraph& g, const ActivityTable& table, const ExhaustiveOptions& options) {
  const int m = g.num_edges();
  if (m > options.max_edges)
    throw PreconditionError("exhaustive subset scan limited to " + std::to_string(options.max_edges) +
                            " edges, got " + std::to_string(m));
  if (table.num_nodes() != g.num_nodes()) throw PreconditionError("activity table does not match the graph");
  const int n = g.num_nodes();
  const int threshold = (n + 1) / 2;

  std::vector<std::pair<int, int>> pos(m);
  for (int e = 0; e < m; ++e)
    pos[e] = {g.local_position(g.edge(e).first, e), g.local_position(g.edge(e).second, e)};

  struct Partial {
    long double all = 0.0L, loops = 0.0L, tail = 0.0L;
    double max_dangling = 0.0;
  };
  const int high = std::min(m, 6);
  const int low = m - high;
  const std::size_t chunks = std::size_t{1} << high;
  std::vector<Partial> partial(chunks);

  detail::parallel_for(chunks, options.threads, [&](std::size_t chunk) {
    std::vector<std::uint32_t> local(n, 0);
    for (int b = 0; b < high; ++b) {
      if (!((chunk >> b) & 1U)) continue;
      const int e = low + b;
      local[g.edge(e).first] ^= 1U << pos[e].first;
      local[g.edge(e).second] ^= 1U << pos[e].second;
    }
    Partial acc;
    const std::uint64_t steps = std::uint64_t{1} << low;
    for (std::uint64_t step = 0;; ++step) {
      double k = 1.0;
      bool dangling = false;
      int touched = 0;
      for (int a = 0; a < n; ++a) {
        const std::uint32_t mask = local[a];
        if (mask == 0) continue;
        ++touched;
        dangling = dangling || std::has_single_bit(mask);
        k *= table.node_activity(a, mask);
      }
      acc.all += k;
      if (dangling) {
        acc.max_dangling = std::max(acc.max_dangling, std::abs(k));
      } else {
        acc.loops += k;
        if (touched >= threshold) acc.tail += std::abs(k);
      }
      if (step + 1 == steps) break;
      const int e = std::countr_zero(step + 1);
      local[g.edge(e).first] ^= 1U << pos[e].first;
      local[g.edge(e).second] ^= 1U << pos[e].second;
    }
    partial[chunk] = acc;
  });

  Partial total;
  for (const auto& p : partial) {
    total.all += p.all;
    total.loops += p.loops;
    total.tail += p.tail;
    total.max_dangling = std::max(total.max_dangling, p.max_dangling);
  }
  ZCorrExact out;
  out.all_subsets = static_cast<double>(total.all);
  out.loops_only = static_cast<double>(total.loops);
  out.max_dangling = total.max_dangling;
  out.large_loop_tail = static_cast<double>(total.tail);
  out.large_threshold = threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Polymer form

namespace {

class DisjointSum {
 public:
  DisjointSum(const PolymerCatalog& catalog, std::span<const double> activities, std::vector<int> eligible)
      : catalog_(catalog), activities_(activities), eligible_(std::move(eligible)) {}

  double run(const NodeSet& used) { return visit(0, used); }

 private:
  // Each collection is visited once with members in increasing index order.
  double visit(std::size_t start, const NodeSet& used) {
    double total = 1.0;
    for (std::size_t i = start; i < eligible_.size(); ++i) {
      const int p = eligible_[i];
      const NodeSet& nodes = catalog_.polymers[p].node_set();
      if (used.intersects(nodes)) continue;
      NodeSet next = used;
      next |= nodes;
      total += activities_[p] * visit(i + 1, next);
    }
    return total;
  }

  const PolymerCatalog& catalog_;
  std::span<const double> activities_;
  std::vector<int> eligible_;
};

void check_activities(const PolymerCatalog& catalog, std::span<const double> activities) {
  if (activities.size() != catalog.size())
    throw PreconditionError("one activity per catalog entry is required");
}

}  // namespace

double restricted_polymer_sum(const PolymerCatalog& catalog, std::span<const double> activities,
                              std::span<const char> include, const NodeSet* excluded) {
  check_activities(catalog, activities);
  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(catalog.size()); ++i) {
    if (activities[i] == 0.0) continue;
    if (!include.empty() && !include[i]) continue;
    if (excluded && excluded->intersects(catalog.polymers[i].node_set())) continue;
    eligible.push_back(i);
  }
  DisjointSum sum(catalog, activities, std::move(eligible));
  return sum.run(NodeSet(catalog.num_nodes));
}

PolymerSum z_corr_polymer_form(const PolymerCatalog& catalog, std::span<const double> activities) {
  PolymerSum out;
  out.value = restricted_polymer_sum(catalog, activities, {}, nullptr);
  out.truncated = !catalog.complete();
  return out;
}

// ---------------------------------------------------------------------------
// Ursell tables

int pair_index(int i, int j, int order) {
  if (i > j) std::swap(i, j);
  // pairs (0,1),(0,2),...,(0,M-1),(1,2),...
  return i * order - i * (i + 1) / 2 + (j - i - 1);
}

namespace {

bool spans_connected(std::uint32_t graph, int order, int vertices) {
  if (vertices <= 1) return true;
  std::uint32_t reached = 1, frontier = 1;
  while (frontier) {
    std::uint32_t next = 0;
    for (int i = 0; i < vertices; ++i) {
      if (!((frontier >> i) & 1U)) continue;
      for (int j = 0; j < vertices; ++j)
        if (j != i && ((graph >> pair_index(i, j, order)) & 1U) && !((reached >> j) & 1U)) next |= 1U << j;
    }
    reached |= next;
    frontier = next;
  }
  return reached == (1U << vertices) - 1;
}

UrsellTable build_ursell(int order) {
  UrsellTable t;
  t.order = order;
  const int pairs = order * (order - 1) / 2;
  const std::uint32_t graphs = 1U << pairs;
  std::vector<char> connected(graphs, 0);
  for (std::uint32_t graph = 0; graph < graphs; ++graph) {
    connected[graph] = spans_connected(graph, order, order);
    if (connected[graph]) t.connected_graphs.push_back(graph);
  }
  t.weight.assign(graphs, 0.0);
  for (std::uint32_t h = 0; h < graphs; ++h) {
    double w = 0.0;
    // all submasks of h, including h and 0
    for (std::uint32_t sub = h;; sub = (sub - 1) & h) {
      if (connected[sub]) w += (std::popcount(sub) % 2 == 0) ? 1.0 : -1.0;
      if (sub == 0) break;
    }
    t.weight[h] = w;
  }
  return t;
}

}  // namespace

const UrsellTable& ursell_table(int order) {
  static const std::vector<UrsellTable> tables = [] {
    std::vector<UrsellTable> out;
    for (int m = 1; m <= 5; ++m) out.push_back(build_ursell(m));
    return out;
  }();
  if (order < 1 || order > 5) throw PreconditionError("Ursell tables are available for orders 1..5");
  return tables[order - 1];
}

// ---------------------------------------------------------------------------
// Mayer expansion

namespace {

class ClusterSum {
 public:
  ClusterSum(const PolymerCatalog& catalog, std::span<const double> activities) {
    for (int i = 0; i < static_cast<int>(catalog.size()); ++i)
      if (activities[i] != 0.0) {
        index_.push_back(i);
        activity_.push_back(activities[i]);
      }
    const std::size_t p = index_.size();
    overlaps_.assign(p * p, 0);
    neighbors_.assign(p, {});
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const bool hit = catalog.polymers[index_[i]].node_set().intersects(catalog.polymers[index_[j]].node_set());
        overlaps_[i * p + j] = hit;
        if (hit) neighbors_[i].push_back(static_cast<int>(j));
      }
    stamp_.assign(p, 0);
  }

  double order_term(int order) {
    order_ = order;
    table_ = &ursell_table(order);
    tuple_.assign(order, 0);
    sum_ = 0.0;
    extend(0, 0, 1.0);
    double factorial = 1.0;
    for (int m = 2; m <= order; ++m) factorial *= m;
    return sum_ / factorial;
  }

 private:
  int components(std::uint32_t graph, int vertices) const {
    std::uint32_t seen = 0;
    int count = 0;
    for (int start = 0; start < vertices; ++start) {
      if ((seen >> start) & 1U) continue;
      ++count;
      std::uint32_t frontier = 1U << start;
      seen |= frontier;
      while (frontier) {
        const int i = std::countr_zero(frontier);
        frontier &= frontier - 1;
        for (int j = 0; j < vertices; ++j)
          if (j != i && !((seen >> j) & 1U) && ((graph >> pair_index(i, j, order_)) & 1U)) {
            seen |= 1U << j;
            frontier |= 1U << j;
          }
      }
    }
    return count;
  }

  void place(int k, int candidate, std::uint32_t graph, double product) {
    const std::size_t p = index_.size();
    std::uint32_t next = graph;
    for (int i = 0; i < k; ++i)
      if (overlaps_[static_cast<std::size_t>(tuple_[i]) * p + candidate]) next |= 1U << pair_index(i, k, order_);
    tuple_[k] = candidate;
    extend(k + 1, next, product * activity_[candidate]);
  }

  void extend(int k, std::uint32_t graph, double product) {
    if (k == order_) {
      sum_ += product * table_->weight[graph];
      return;
    }
    const int comps = components(graph, k);
    // a connected tuple needs comps - 1 <= slots left after this one
    const bool must_touch = k > 0 && comps + k + 1 > order_;
    const int p = static_cast<int>(index_.size());
    if (!must_touch) {
      for (int c = 0; c < p; ++c) place(k, c, graph, product);
      return;
    }
    ++generation_;
    std::vector<int> candidates;
    for (int i = 0; i < k; ++i)
      for (int c : neighbors_[tuple_[i]])
        if (stamp_[c] != generation_) {
          stamp_[c] = generation_;
          candidates.push_back(c);
        }
    for (int c : candidates) place(k, c, graph, product);
  }

  std::vector<int> index_;
  std::vector<double> activity_;
  std::vector<char> overlaps_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t generation_ = 0;
  const UrsellTable* table_ = nullptr;
  int order_ = 0;
  std::vector<int> tuple_;
  double sum_ = 0.0;
};

}  // namespace

MayerExpansion mayer_expansion(const PolymerCatalog& catalog, std::span<const double> activities, int max_order) {
  check_activities(catalog, activities);
  if (max_order < 1 || max_order > 5) throw PreconditionError("Mayer expansion order must lie in 1..5");
  MayerExpansion out;
  out.max_order = max_order;
  ClusterSum clusters(catalog, activities);
  double running = 0.0;
  for (int m = 1; m <= max_order; ++m) {
    const double term = clusters.order_term(m);
    running += term;
    out.terms.push_back(term);
    out.partial_sums.push_back(running);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence criterion

ConvergenceCriterion convergence_criterion(const PolymerCatalog& catalog, std::span<const double> activities) {
  check_activities(catalog, activities);
  ConvergenceCriterion out;
  const int n = catalog.num_nodes;
  int max_size = 0;
  for (const auto& polymer : catalog.polymers) max_size = std::max(max_size, polymer.size());
  // weight[a][k] = sum of |K| over polymers through a with k nodes
  std::vector<std::vector<double>> weight(n, std::vector<double>(max_size + 1, 0.0));
  for (int a = 0; a < n; ++a)
    for (int i : catalog.by_node[a]) weight[a][catalog.polymers[i].size()] += std::abs(activities[i]);

  for (int a = 0; a < n; ++a) {
    double s = 0.0;
    for (int k = 0; k <= max_size; ++k) s += weight[a][k] * std::exp(static_cast<double>(k));
    if (s > out.exchanged || out.worst_node < 0) {
      out.exchanged = s;
      out.worst_node = a;
    }
  }

  // coefficient[k] tracks k^t / t!
  std::vector<double> coefficient(max_size + 1, 1.0);
  for (int t = 0; t < 2000; ++t) {
    if (t > 0)
      for (int k = 0; k <= max_size; ++k) coefficient[k] *= static_cast<double>(k) / t;
    double sup = 0.0;
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int k = 0; k <= max_size; ++k) s += weight[a][k] * coefficient[k];
      sup = std::max(sup, s);
    }
    out.value += sup;
    if (t > max_size && sup <= 1e-17 * out.value) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small / large split

double SplitReport::reconstructed_z_corr() const {
  double sum = 0.0;
  for (const auto& term : large_terms) sum += term.activity * term.ratio;
  return z_p * (1.0 + sum) + pair_correction;
}

SplitReport split_report(const PolymerCatalog& catalog, std::span<const double> activities) {
  check_activities(catalog, activities);
  SplitReport out;
  out.threshold = (catalog.num_nodes + 1) / 2;
  out.truncated = !catalog.complete();
  std::vector<char> small(catalog.size(), 0);
  std::vector<int> large;
  for (int i = 0; i < static_cast<int>(catalog.size()); ++i) {
    if (catalog.polymers[i].size() < out.threshold) {
      small[i] = 1;
    } else {
      out.large_tail += std::abs(activities[i]);
      if (activities[i] != 0.0) large.push_back(i);
    }
  }
  out.z_p = restricted_polymer_sum(catalog, activities, small, nullptr);
  for (int i : large) {
    const NodeSet& nodes = catalog.polymers[i].node_set();
    const double conditioned = restricted_polymer_sum(catalog, activities, small, &nodes);
    out.large_terms.push_back({i, activities[i], conditioned / out.z_p});
  }
  for (std::size_t x = 0; x < large.size(); ++x)
    for (std::size_t y = x + 1; y < large.size(); ++y) {
      const auto& first = catalog.polymers[large[x]].node_set();
      const auto& second = catalog.polymers[large[y]].node_set();
      if (first.intersects(second)) continue;
      out.unique_large = false;
      NodeSet both = first;
      both |= second;
      out.pair_correction += activities[large[x]] * activities[large[y]] *
                             restricted_polymer_sum(catalog, activities, small, &both);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Per-instance analysis

std::optional<double> ExpansionReport::identity_residual() const {
  if (!exact_log_z || !log_z_corr) return std::nullopt;
  if (log_z_corr->sign <= 0) return std::numeric_limits<double>::infinity();
  return std::abs(*exact_log_z - bethe.total - log_z_corr->log_abs);
}

std::optional<double> ExpansionReport::f_corr() const {
  const std::optional<SignedLog>& source = log_z_corr ? log_z_corr : log_z_corr_loops;
  if (source && source->sign > 0) return source->log_abs / n;
  if (exact_log_z) return (*exact_log_z - bethe.total) / n;
  return std::nullopt;
}

ExpansionReport analyze_instance(const VertexModel& model, const MessageSet& eta, const AnalysisOptions& options) {
  const CheckGraph& g = model.graph();
  ExpansionReport report;
  report.n = g.num_nodes();
  report.d = g.degree();
  report.num_edges = g.num_edges();
  report.kind = model.spec().kind;
  report.bp_sweeps = eta.sweeps;
  report.bp_residual = eta.residual;
  report.bp_converged = eta.converged;
  for (double h : model.spec().h) report.h_bound = std::max(report.h_bound, std::abs(h));
  for (double j : model.spec().coupling) report.coupling = std::max(report.coupling, std::abs(j));

  report.bethe = bethe_log_partition(model, eta);
  if (options.exact_partition && g.num_edges() <= options.partition.max_edges)
    report.exact_log_z = exact_log_partition(model, options.partition);

  const ActivityTable table(model, eta);
  if (options.exact_correction && g.num_edges() <= options.exhaustive.max_edges) {
    const ZCorrExact z = z_corr_exact(g, table, options.exhaustive);
    report.log_z_corr = SignedLog::of(z.all_subsets);
    report.log_z_corr_loops = SignedLog::of(z.loops_only);
    report.max_dangling_activity = z.max_dangling;
  }

  const bool need_catalog = options.polymer_form || options.mayer_order > 0 || options.split || options.criterion;
  if (need_catalog && g.num_nodes() >= 3) {
    const int cap = options.catalog_cap > 0 ? options.catalog_cap : g.num_nodes();
    const PolymerCatalog catalog = enumerate_polymers(g, std::max(cap, 3), options.enumeration);
    const std::vector<double> activities = polymer_activities(table, catalog);
    report.catalog_cap = catalog.node_cap;
    report.catalog_size = catalog.size();
    if (options.polymer_form) {
      const PolymerSum sum = z_corr_polymer_form(catalog, activities);
      report.log_z_corr_polymer = SignedLog::of(sum.value);
      report.polymer_truncated = sum.truncated;
    }
    if (options.mayer_order > 0) {
      const MayerExpansion mayer = mayer_expansion(catalog, activities, options.mayer_order);
      report.mayer_order = options.mayer_order;
      report.mayer_value = mayer.value();
      report.mayer_partial_sums = mayer.partial_sums;
    }
    if (options.criterion) {
      const ConvergenceCriterion criterion = convergence_criterion(catalog, activities);
      report.criterion = criterion.value;
      report.criterion_exchanged = criterion.exchanged;
    }
    if (options.split) report.split = split_report(catalog, activities);
  }
  return report;
}

}  // namespace loopexp
