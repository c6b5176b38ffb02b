#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace loopexp {

/// Raised when an input violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot complete (retry limits, budgets, divergence).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Edge = std::pair<int, int>;

/// Simple undirected graph of parity checks. Edges are stored as (u, v) with
/// u < v, sorted lexicographically; each node keeps its incident edge indices
/// in increasing order, and that order fixes the local spin positions used by
/// factors, messages and activities.
class CheckGraph {
 public:
  CheckGraph() = default;

  /// Builds a d-regular simple graph; throws PreconditionError otherwise.
  static CheckGraph regular(int n, int d, std::vector<Edge> edges);

  /// Builds an arbitrary simple graph (test hosts such as trees). degree()
  /// reports the maximum node degree.
  static CheckGraph general(int n, std::vector<Edge> edges);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int degree() const { return d_; }
  int degree(int node) const { return static_cast<int>(adjacency_[node].size()); }
  bool is_regular() const { return regular_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  std::span<const int> incident(int node) const { return adjacency_[node]; }

  /// Position of edge e in the incidence list of one of its endpoints.
  int local_position(int node, int e) const;
  int other_end(int e, int node) const;

  /// Edge index joining u and v, if present.
  std::optional<int> find_edge(int u, int v) const;

  int num_components() const;

  bool operator==(const CheckGraph&) const = default;

 private:
  CheckGraph(int n, std::vector<Edge> edges);

  int n_ = 0;
  int d_ = 0;
  bool regular_ = true;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  // local position of edge e at its first / second endpoint
  std::vector<std::pair<int, int>> positions_;
};

/// Fixed-width bitset over node indices.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(int n) : words_((n + 63) / 64, 0) {}

  void insert(int v) { words_[v >> 6] |= std::uint64_t{1} << (v & 63); }
  bool contains(int v) const { return (words_[v >> 6] >> (v & 63)) & 1U; }
  bool intersects(const NodeSet& other) const;
  NodeSet& operator|=(const NodeSet& other);
  int size() const;

  bool operator==(const NodeSet&) const = default;

 private:
  std::vector<std::uint64_t> words_;
};

/// A set of edges of a host graph, identifying the subgraph it spans. A node
/// belongs to the subgraph iff it has at least one member edge.
class EdgeSubset {
 public:
  EdgeSubset() = default;
  EdgeSubset(const CheckGraph& g, std::vector<bool> mask);
  static EdgeSubset from_edges(const CheckGraph& g, std::span<const int> edges);
  /// Bits of `bits` select edges 0..63.
  static EdgeSubset from_bits(const CheckGraph& g, std::uint64_t bits);

  const std::vector<bool>& mask() const { return mask_; }
  const std::vector<int>& members() const { return members_; }
  /// Touched nodes in increasing order.
  const std::vector<int>& nodes() const { return nodes_; }
  const NodeSet& node_set() const { return node_set_; }
  /// profile()[i] = number of touched nodes with induced degree i (index 0 unused).
  const std::vector<int>& profile() const { return profile_; }
  /// Induced degree of each touched node, aligned with nodes().
  const std::vector<int>& induced_degrees() const { return induced_; }
  /// Local incidence mask (bit k = k-th incident edge) per touched node.
  const std::vector<std::uint32_t>& local_masks() const { return local_masks_; }

  int size() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(members_.size()); }
  bool empty() const { return members_.empty(); }

 private:
  std::vector<bool> mask_;
  std::vector<int> members_;
  std::vector<int> nodes_;
  NodeSet node_set_;
  std::vector<int> profile_;
  std::vector<int> induced_;
  std::vector<std::uint32_t> local_masks_;
};

/// Degree profile (n_1, ..., n_d) of the subgraph, indexed 1..d (index 0 unused).
std::vector<int> subgraph_degree_profile(const CheckGraph& g, const EdgeSubset& s);

/// True iff no touched node has induced degree one.
bool is_loop(const EdgeSubset& s);

bool is_connected(const CheckGraph& g, const EdgeSubset& s);

/// Connected loops touching at least three nodes, each listed once.
struct PolymerCatalog {
  std::vector<EdgeSubset> polymers;
  int node_cap = 0;
  int num_nodes = 0;
  /// by_node[a] lists indices into `polymers` of every polymer touching a.
  std::vector<std::vector<int>> by_node;

  /// True when the cap admits every polymer of the host.
  bool complete() const { return node_cap >= num_nodes; }
  std::size_t size() const { return polymers.size(); }
};

struct EnumerationOptions {
  std::size_t max_polymers = 2'000'000;
};

/// Enumerates all polymers touching at most `node_cap` nodes by growing
/// connected edge sets from each anchor edge (anchor = smallest member index).
PolymerCatalog enumerate_polymers(const CheckGraph& g, int node_cap,
                                  const EnumerationOptions& options = {});

/// Number of edges with exactly one endpoint in `nodes`.
int edge_boundary(const CheckGraph& g, std::span<const int> nodes);

enum class ExpansionMode { Exhaustive, Sampled };

struct ExpansionVerdict {
  bool expander = true;
  ExpansionMode mode = ExpansionMode::Exhaustive;
  /// Violating node set, empty when none was found.
  std::vector<int> witness;
  int witness_boundary = 0;
  /// Smallest boundary/|S| ratio seen over the scanned subsets.
  double min_ratio = 0.0;
  std::uint64_t subsets_checked = 0;
};

struct ExpansionOptions {
  int exhaustive_max_nodes = 20;
  int samples = 20'000;
  std::uint64_t seed = 1;
};

/// Checks |boundary(S)| >= kappa |S| for every node set with |S| <= n/2.
/// Exact for n <= exhaustive_max_nodes; otherwise grows random connected sets.
ExpansionVerdict check_edge_expansion(const CheckGraph& g, double kappa,
                                      const ExpansionOptions& options = {});

struct SamplingOptions {
  int max_attempts = 100'000;
};

/// Configuration-model sample, resampled until simple. Deterministic in seed.
CheckGraph sample_regular_graph(int n, int d, std::uint64_t seed,
                                const SamplingOptions& options = {});

/// Graph file: "n d" header then one sorted "u v" pair per line.
void write_graph(std::ostream& out, const CheckGraph& g);
CheckGraph read_graph(std::istream& in);

}  // namespace loopexp
