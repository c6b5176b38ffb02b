#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loopexp/channel.hpp"
#include "loopexp/graphs.hpp"

namespace loopexp {

enum class FactorKind { CycleCode, SoftenedCycleCode, HighTemperature };

std::string to_string(FactorKind kind);
FactorKind factor_kind_from_string(const std::string& name);

/// Vertex-model factors. Every kind carries the per-edge fields h_ab, attached
/// as e^{h_ab s_ab / 2} at each endpoint, so an edge receives e^{h_ab s_ab} in total.
///   cycle code:        (1 + prod s) / 2
///   softened:          (1 + (1 - eps) prod s) / 2
///   high temperature:  (1 + tanh(J_a) prod s) / 2
struct FactorSpec {
  FactorKind kind = FactorKind::CycleCode;
  std::vector<double> h;         // per edge
  std::vector<double> coupling;  // per node, high temperature only
  double softening = 0.0;        // softened cycle code only

  static FactorSpec cycle_code(std::vector<double> h);
  static FactorSpec cycle_code(const ChannelRealization& channel);
  static FactorSpec softened_cycle_code(std::vector<double> h, double epsilon);
  static FactorSpec high_temperature(std::vector<double> h, std::vector<double> coupling);

  /// Throws PreconditionError if the factor spec does not fit the graph.
  void validate(const CheckGraph& g) const;
};

/// One spin per edge; bit e set means s_e = -1.
class SpinConfig {
 public:
  explicit SpinConfig(int num_edges) : bits_(num_edges, false) {}
  int size() const { return static_cast<int>(bits_.size()); }
  int spin(int e) const { return bits_[e] ? -1 : 1; }
  void set(int e, int spin) { bits_[e] = spin < 0; }

 private:
  std::vector<bool> bits_;
};

/// f_a at the given local spins (ordered as g.incident(a)).
double factor_value(const FactorSpec& spec, const CheckGraph& g, int a, std::span<const int> spins);

/// Spins of node a's incident edges taken from a global configuration.
std::vector<int> local_spins(const CheckGraph& g, int a, const SpinConfig& config);

/// Local configurations are indexed by a bitmask over incident positions:
/// bit k set means the k-th incident spin is -1.
inline int local_spin(std::uint32_t config, int k) { return (config >> k) & 1U ? -1 : 1; }

/// A graph together with per-node factor tables (2^deg(a) entries each).
class VertexModel {
 public:
  VertexModel(CheckGraph g, FactorSpec spec);

  const CheckGraph& graph() const { return graph_; }
  const FactorSpec& spec() const { return spec_; }
  std::span<const double> factor_table(int a) const { return tables_[a]; }

 private:
  CheckGraph graph_;
  FactorSpec spec_;
  std::vector<std::vector<double>> tables_;
};

struct PartitionOptions {
  int max_edges = 26;
  int threads = 1;
};

/// ln Z by exhaustive summation over all 2^|E| edge-spin configurations.
/// The sum is split into a fixed number of chunks combined in index order, so
/// the result does not depend on the thread count.
double exact_log_partition(const VertexModel& model, const PartitionOptions& options = {});
double exact_log_partition(const CheckGraph& g, const FactorSpec& spec,
                           const PartitionOptions& options = {});

}  // namespace loopexp
