#include "loopexp/graphs.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "loopexp/rng.hpp"

namespace loopexp {

// ---------------------------------------------------------------------------
// CheckGraph

CheckGraph::CheckGraph(int n, std::vector<Edge> edges) : n_(n) {
  if (n < 0) throw PreconditionError("negative node count");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw PreconditionError("edge endpoint out of range");
    if (u == v) throw PreconditionError("self-loop at node " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw PreconditionError("parallel edges");
  edges_ = std::move(edges);

  adjacency_.assign(n_, {});
  for (int e = 0; e < num_edges(); ++e) {
    adjacency_[edges_[e].first].push_back(e);
    adjacency_[edges_[e].second].push_back(e);
  }
  positions_.resize(edges_.size());
  for (int a = 0; a < n_; ++a) {
    const auto& inc = adjacency_[a];
    for (int k = 0; k < static_cast<int>(inc.size()); ++k) {
      auto& slot = positions_[inc[k]];
      if (edges_[inc[k]].first == a)
        slot.first = k;
      else
        slot.second = k;
    }
  }
  d_ = 0;
  for (const auto& inc : adjacency_) d_ = std::max(d_, static_cast<int>(inc.size()));
  regular_ = std::all_of(adjacency_.begin(), adjacency_.end(),
                         [&](const auto& inc) { return static_cast<int>(inc.size()) == d_; });
  if (d_ > 20) throw PreconditionError("node degree above 20 is not supported");
}

CheckGraph CheckGraph::regular(int n, int d, std::vector<Edge> edges) {
  if (d < 1) throw PreconditionError("degree must be positive");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    throw PreconditionError("n*d must be even");
  CheckGraph g(n, std::move(edges));
  for (int a = 0; a < n; ++a) {
    if (g.degree(a) != d)
      throw PreconditionError("node " + std::to_string(a) + " has degree " +
                              std::to_string(g.degree(a)) + ", expected " + std::to_string(d));
  }
  g.d_ = d;
  return g;
}

CheckGraph CheckGraph::general(int n, std::vector<Edge> edges) {
  return CheckGraph(n, std::move(edges));
}

int CheckGraph::local_position(int node, int e) const {
  const auto& [u, v] = edges_[e];
  if (node == u) return positions_[e].first;
  if (node == v) return positions_[e].second;
  throw PreconditionError("node is not an endpoint of the edge");
}

int CheckGraph::other_end(int e, int node) const {
  const auto& [u, v] = edges_[e];
  return node == u ? v : u;
}

std::optional<int> CheckGraph::find_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
  if (it == edges_.end() || *it != Edge{u, v}) return std::nullopt;
  return static_cast<int>(it - edges_.begin());
}

int CheckGraph::num_components() const {
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_;
  for (const auto& [u, v] : edges_) {
    int ru = find(u), rv = find(v);
    if (ru != rv) {
      parent[ru] = rv;
      --components;
    }
  }
  return components;
}

// ---------------------------------------------------------------------------
// NodeSet

bool NodeSet::intersects(const NodeSet& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] & other.words_[i]) return true;
  return false;
}

NodeSet& NodeSet::operator|=(const NodeSet& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

int NodeSet::size() const {
  int count = 0;
  for (auto w : words_) count += std::popcount(w);
  return count;
}

// ---------------------------------------------------------------------------
// EdgeSubset

EdgeSubset::EdgeSubset(const CheckGraph& g, std::vector<bool> mask)
    : mask_(std::move(mask)), node_set_(g.num_nodes()) {
  if (static_cast<int>(mask_.size()) != g.num_edges())
    throw PreconditionError("edge mask size does not match the host graph");
  std::vector<int> degree(g.num_nodes(), 0);
  std::vector<std::uint32_t> local(g.num_nodes(), 0);
  for (int e = 0; e < g.num_edges(); ++e) {
    if (!mask_[e]) continue;
    members_.push_back(e);
    const auto& [u, v] = g.edge(e);
    ++degree[u];
    ++degree[v];
    local[u] |= 1U << g.local_position(u, e);
    local[v] |= 1U << g.local_position(v, e);
  }
  profile_.assign(g.degree() + 1, 0);
  for (int a = 0; a < g.num_nodes(); ++a) {
    if (degree[a] == 0) continue;
    nodes_.push_back(a);
    node_set_.insert(a);
    induced_.push_back(degree[a]);
    local_masks_.push_back(local[a]);
    ++profile_[degree[a]];
  }
}

EdgeSubset EdgeSubset::from_edges(const CheckGraph& g, std::span<const int> edges) {
  std::vector<bool> mask(g.num_edges(), false);
  for (int e : edges) {
    if (e < 0 || e >= g.num_edges()) throw PreconditionError("edge index out of range");
    mask[e] = true;
  }
  return EdgeSubset(g, std::move(mask));
}

EdgeSubset EdgeSubset::from_bits(const CheckGraph& g, std::uint64_t bits) {
  if (g.num_edges() < 64 && (bits >> g.num_edges()) != 0)
    throw PreconditionError("bit set beyond the edge count");
  std::vector<bool> mask(g.num_edges(), false);
  for (int e = 0; e < std::min(g.num_edges(), 64); ++e) mask[e] = (bits >> e) & 1U;
  return EdgeSubset(g, std::move(mask));
}

std::vector<int> subgraph_degree_profile(const CheckGraph& g, const EdgeSubset& s) {
  if (static_cast<int>(s.mask().size()) != g.num_edges())
    throw PreconditionError("subset does not index the host graph");
  return s.profile();
}

bool is_loop(const EdgeSubset& s) { return s.profile().size() < 2 || s.profile()[1] == 0; }

bool is_connected(const CheckGraph& g, const EdgeSubset& s) {
  if (s.empty()) return true;
  std::vector<char> seen(g.num_nodes(), 0);
  std::vector<int> stack{s.nodes().front()};
  seen[stack.back()] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    for (int e : g.incident(a)) {
      if (!s.mask()[e]) continue;
      int b = g.other_end(e, a);
      if (!seen[b]) {
        seen[b] = 1;
        ++reached;
        stack.push_back(b);
      }
    }
  }
  return reached == s.size();
}

// ---------------------------------------------------------------------------
// Polymer enumeration

namespace {

class PolymerGrower {
 public:
  PolymerGrower(const CheckGraph& g, int node_cap, const EnumerationOptions& options,
                std::vector<EdgeSubset>& out)
      : g_(g),
        cap_(node_cap),
        options_(options),
        out_(out),
        in_set_(g.num_edges(), 0),
        excluded_(g.num_edges(), 0),
        in_frontier_(g.num_edges(), 0),
        node_degree_(g.num_nodes(), 0) {}

  void grow_from(int anchor) {
    anchor_ = anchor;
    frontier_.clear();
    add_edge(anchor);
    recurse();
    remove_edge(anchor);
    for (int f : frontier_) in_frontier_[f] = 0;
    frontier_.clear();
  }

 private:
  // Include/exclude branching on the first frontier edge: every connected edge
  // set whose smallest member is the anchor is reached exactly once.
  // Frontier entries are never members or excluded; on return the frontier is
  // restored to its state at entry.
  void recurse() {
    if (frontier_.empty()) {
      emit();
      return;
    }
    int c = frontier_.back();
    frontier_.pop_back();
    in_frontier_[c] = 0;

    const auto [u, v] = g_.edge(c);
    int new_nodes = (node_degree_[u] == 0) + (node_degree_[v] == 0);
    if (touched_ + new_nodes <= cap_) {
      std::size_t mark = frontier_.size();
      std::vector<int> pushed;
      add_edge(c, &pushed);
      recurse();
      remove_edge(c);
      // restore frontier to its state before the include branch
      for (int p : pushed) in_frontier_[p] = 0;
      frontier_.resize(mark);
    }
    excluded_[c] = 1;
    recurse();
    excluded_[c] = 0;
    frontier_.push_back(c);
    in_frontier_[c] = 1;
  }

  void add_edge(int e, std::vector<int>* pushed = nullptr) {
    in_set_[e] = 1;
    members_.push_back(e);
    const auto [u, v] = g_.edge(e);
    for (int a : {u, v}) {
      if (node_degree_[a]++ == 0) ++touched_;
      for (int f : g_.incident(a)) {
        if (f > anchor_ && !in_set_[f] && !excluded_[f] && !in_frontier_[f]) {
          in_frontier_[f] = 1;
          frontier_.push_back(f);
          if (pushed) pushed->push_back(f);
        }
      }
    }
  }

  void remove_edge(int e) {
    in_set_[e] = 0;
    members_.pop_back();
    const auto [u, v] = g_.edge(e);
    for (int a : {u, v})
      if (--node_degree_[a] == 0) --touched_;
  }

  void emit() {
    if (touched_ < 3) return;
    for (int e : members_) {
      const auto [u, v] = g_.edge(e);
      if (node_degree_[u] < 2 || node_degree_[v] < 2) return;
    }
    if (out_.size() >= options_.max_polymers)
      throw ComputationError("polymer catalog exceeds the memory budget of " +
                             std::to_string(options_.max_polymers) + " entries");
    out_.push_back(EdgeSubset::from_edges(g_, members_));
  }

  const CheckGraph& g_;
  int cap_;
  const EnumerationOptions& options_;
  std::vector<EdgeSubset>& out_;
  int anchor_ = 0;
  int touched_ = 0;
  std::vector<char> in_set_, excluded_, in_frontier_;
  std::vector<int> node_degree_;
  std::vector<int> members_;
  std::vector<int> frontier_;
};

}  // namespace

PolymerCatalog enumerate_polymers(const CheckGraph& g, int node_cap,
                                  const EnumerationOptions& options) {
  if (node_cap < 3) throw PreconditionError("polymer node cap must be at least 3");
  PolymerCatalog catalog;
  catalog.node_cap = node_cap;
  catalog.num_nodes = g.num_nodes();
  PolymerGrower grower(g, node_cap, options, catalog.polymers);
  for (int anchor = 0; anchor < g.num_edges(); ++anchor) grower.grow_from(anchor);

  // canonical order: by node count, then by member edge list
  std::sort(catalog.polymers.begin(), catalog.polymers.end(),
            [](const EdgeSubset& x, const EdgeSubset& y) {
              if (x.size() != y.size()) return x.size() < y.size();
              return x.members() < y.members();
            });
  catalog.by_node.assign(g.num_nodes(), {});
  for (int i = 0; i < static_cast<int>(catalog.polymers.size()); ++i)
    for (int a : catalog.polymers[i].nodes()) catalog.by_node[a].push_back(i);
  return catalog;
}

// ---------------------------------------------------------------------------
// Expansion

int edge_boundary(const CheckGraph& g, std::span<const int> nodes) {
  std::vector<char> in(g.num_nodes(), 0);
  for (int a : nodes) {
    if (a < 0 || a >= g.num_nodes()) throw PreconditionError("node index out of range");
    in[a] = 1;
  }
  int boundary = 0;
  for (const auto& [u, v] : g.edges()) boundary += in[u] != in[v];
  return boundary;
}

namespace {

void record(ExpansionVerdict& verdict, double kappa, std::span<const int> nodes, int boundary) {
  ++verdict.subsets_checked;
  double ratio = static_cast<double>(boundary) / static_cast<double>(nodes.size());
  verdict.min_ratio = std::min(verdict.min_ratio, ratio);
  if (verdict.expander && boundary < kappa * static_cast<double>(nodes.size())) {
    verdict.expander = false;
    verdict.witness.assign(nodes.begin(), nodes.end());
    verdict.witness_boundary = boundary;
  }
}

}  // namespace

ExpansionVerdict check_edge_expansion(const CheckGraph& g, double kappa,
                                      const ExpansionOptions& options) {
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  ExpansionVerdict verdict;
  verdict.min_ratio = std::numeric_limits<double>::infinity();
  const int n = g.num_nodes();
  const int half = n / 2;
  if (half == 0) return verdict;

  if (n <= std::min(options.exhaustive_max_nodes, 30)) {
    verdict.mode = ExpansionMode::Exhaustive;
    std::vector<std::uint32_t> adj(n, 0);
    for (const auto& [u, v] : g.edges()) {
      adj[u] |= 1U << v;
      adj[v] |= 1U << u;
    }
    std::vector<int> nodes;
    const std::uint32_t limit = n == 32 ? 0xffffffffU : (1U << n) - 1;
    for (std::uint32_t s = 1; s <= limit && s != 0; ++s) {
      int size = std::popcount(s);
      if (size > half) continue;
      int boundary = 0;
      for (std::uint32_t rest = s; rest; rest &= rest - 1)
        boundary += std::popcount(adj[std::countr_zero(rest)] & ~s);
      ++verdict.subsets_checked;
      double ratio = static_cast<double>(boundary) / size;
      verdict.min_ratio = std::min(verdict.min_ratio, ratio);
      if (verdict.expander && boundary < kappa * size) {
        verdict.expander = false;
        for (std::uint32_t rest = s; rest; rest &= rest - 1)
          verdict.witness.push_back(std::countr_zero(rest));
        verdict.witness_boundary = boundary;
      }
    }
    return verdict;
  }

  // Sampled mode: random breadth-first growth; every prefix is a candidate set.
  verdict.mode = ExpansionMode::Sampled;
  Rng rng(options.seed);
  std::uniform_int_distribution<int> pick_node(0, n - 1);
  std::vector<char> in(n, 0);
  for (int sample = 0; sample < options.samples; ++sample) {
    std::fill(in.begin(), in.end(), 0);
    std::vector<int> set{pick_node(rng)};
    in[set[0]] = 1;
    int boundary = g.degree(set[0]);
    record(verdict, kappa, set, boundary);
    std::vector<int> frontier;
    while (static_cast<int>(set.size()) < half) {
      frontier.clear();
      for (int a : set)
        for (int e : g.incident(a)) {
          int b = g.other_end(e, a);
          if (!in[b]) frontier.push_back(b);
        }
      if (frontier.empty()) {
        // disconnected host: the component itself is the set
        break;
      }
      // prefer nodes with many edges into the set (greedy with random ties)
      std::shuffle(frontier.begin(), frontier.end(), rng);
      int next = frontier.front();
      if (sample % 2 == 0) {
        int best = -1;
        for (int b : frontier) {
          int inside = 0;
          for (int e : g.incident(b)) inside += in[g.other_end(e, b)];
          if (inside > best) {
            best = inside;
            next = b;
          }
        }
      }
      int inside = 0;
      for (int e : g.incident(next)) inside += in[g.other_end(e, next)];
      in[next] = 1;
      set.push_back(next);
      boundary += g.degree(next) - 2 * inside;
      record(verdict, kappa, set, boundary);
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Sampling

CheckGraph sample_regular_graph(int n, int d, std::uint64_t seed, const SamplingOptions& options) {
  if (d < 1) throw PreconditionError("degree must be positive");
  if ((static_cast<long long>(n) * d) % 2 != 0) throw PreconditionError("n*d must be even");
  if (n < d + 1) throw PreconditionError("need n >= d+1 for a simple d-regular graph");
  Rng rng(seed);
  std::vector<int> stubs(static_cast<std::size_t>(n) * d);
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < d; ++k) stubs[static_cast<std::size_t>(a) * d + k] = a;
  std::vector<Edge> edges(stubs.size() / 2);
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    bool simple = true;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      int u = stubs[2 * i], v = stubs[2 * i + 1];
      if (u == v) {
        simple = false;
        break;
      }
      edges[i] = {std::min(u, v), std::max(u, v)};
    }
    if (!simple) continue;
    std::vector<Edge> sorted = edges;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
    return CheckGraph::regular(n, d, std::move(sorted));
  }
  throw ComputationError("no simple pairing found after " +
                         std::to_string(options.max_attempts) + " attempts");
}

// ---------------------------------------------------------------------------
// File format

void write_graph(std::ostream& out, const CheckGraph& g) {
  out << g.num_nodes() << ' ' << g.degree() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

CheckGraph read_graph(std::istream& in) {
  std::string line;
  int n = 0, d = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream header(line);
    if (!(header >> n >> d)) throw PreconditionError("malformed graph header: " + line);
    break;
  }
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    int u = 0, v = 0;
    if (!(row >> u >> v)) throw PreconditionError("malformed edge line: " + line);
    edges.emplace_back(u, v);
  }
  CheckGraph g = CheckGraph::general(n, std::move(edges));
  if (g.is_regular() && g.degree() == d) return CheckGraph::regular(n, d, g.edges());
  if (g.num_edges() == 0 && d == 0) return g;
  if (g.is_regular())
    throw PreconditionError("graph header degree " + std::to_string(d) +
                            " disagrees with the edge list");
  return g;
}

}  // namespace loopexp
