#include "loopexp/model.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "loopexp/detail/logsum.hpp"
#include "loopexp/detail/parallel.hpp"

namespace loopexp {

std::string to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::CycleCode:
      return "cycle-code";
    case FactorKind::SoftenedCycleCode:
      return "softened-cycle-code";
    case FactorKind::HighTemperature:
      return "high-temperature";
  }
  return "unknown";
}

FactorKind factor_kind_from_string(const std::string& name) {
  if (name == "cycle-code" || name == "cycle") return FactorKind::CycleCode;
  if (name == "softened-cycle-code" || name == "softened") return FactorKind::SoftenedCycleCode;
  if (name == "high-temperature" || name == "hightemp") return FactorKind::HighTemperature;
  throw PreconditionError("unknown model kind: " + name);
}

FactorSpec FactorSpec::cycle_code(std::vector<double> h) {
  FactorSpec spec;
  spec.kind = FactorKind::CycleCode;
  spec.h = std::move(h);
  return spec;
}

FactorSpec FactorSpec::cycle_code(const ChannelRealization& channel) {
  return cycle_code(channel.h);
}

FactorSpec FactorSpec::softened_cycle_code(std::vector<double> h, double epsilon) {
  FactorSpec spec;
  spec.kind = FactorKind::SoftenedCycleCode;
  spec.h = std::move(h);
  spec.softening = epsilon;
  return spec;
}

FactorSpec FactorSpec::high_temperature(std::vector<double> h, std::vector<double> coupling) {
  FactorSpec spec;
  spec.kind = FactorKind::HighTemperature;
  spec.h = std::move(h);
  spec.coupling = std::move(coupling);
  return spec;
}

void FactorSpec::validate(const CheckGraph& g) const {
  if (static_cast<int>(h.size()) != g.num_edges())
    throw PreconditionError("one h value per edge is required");
  for (double x : h)
    if (!std::isfinite(x)) throw PreconditionError("h values must be finite");
  if (kind == FactorKind::SoftenedCycleCode && !(softening >= 0.0 && softening <= 1.0))
    throw PreconditionError("softening must lie in [0, 1]");
  if (kind == FactorKind::HighTemperature) {
    if (static_cast<int>(coupling.size()) != g.num_nodes())
      throw PreconditionError("one coupling per node is required");
    for (double j : coupling)
      if (!std::isfinite(j)) throw PreconditionError("couplings must be finite");
  }
}

namespace {

double constraint_weight(const FactorSpec& spec, int a, int parity) {
  switch (spec.kind) {
    case FactorKind::CycleCode:
      return parity > 0 ? 1.0 : 0.0;
    case FactorKind::SoftenedCycleCode:
      return 0.5 * (1.0 + (1.0 - spec.softening) * parity);
    case FactorKind::HighTemperature:
      return 0.5 * (1.0 + std::tanh(spec.coupling[a]) * parity);
  }
  return 0.0;
}

}  // namespace

double factor_value(const FactorSpec& spec, const CheckGraph& g, int a, std::span<const int> spins) {
  auto incident = g.incident(a);
  if (spins.size() != incident.size())
    throw PreconditionError("one spin per incident edge is required");
  int parity = 1;
  double field = 0.0;
  for (std::size_t k = 0; k < spins.size(); ++k) {
    parity *= spins[k];
    field += 0.5 * spec.h[incident[k]] * spins[k];
  }
  double w = constraint_weight(spec, a, parity);
  return w == 0.0 ? 0.0 : w * std::exp(field);
}

std::vector<int> local_spins(const CheckGraph& g, int a, const SpinConfig& config) {
  std::vector<int> spins;
  for (int e : g.incident(a)) spins.push_back(config.spin(e));
  return spins;
}

VertexModel::VertexModel(CheckGraph g, FactorSpec spec) : graph_(std::move(g)), spec_(std::move(spec)) {
  spec_.validate(graph_);
  tables_.resize(graph_.num_nodes());
  std::vector<int> spins;
  for (int a = 0; a < graph_.num_nodes(); ++a) {
    const int deg = graph_.degree(a);
    auto& table = tables_[a];
    table.resize(std::size_t{1} << deg);
    spins.assign(deg, 1);
    for (std::uint32_t config = 0; config < table.size(); ++config) {
      for (int k = 0; k < deg; ++k) spins[k] = local_spin(config, k);
      table[config] = factor_value(spec_, graph_, a, spins);
    }
  }
}

double exact_log_partition(const VertexModel& model, const PartitionOptions& options) {
  const CheckGraph& g = model.graph();
  const int m = g.num_edges();
  if (m > options.max_edges)
    throw PreconditionError("exact partition function limited to " +
                            std::to_string(options.max_edges) + " edges, got " + std::to_string(m));
  const int n = g.num_nodes();

  std::vector<std::vector<double>> log_tables(n);
  for (int a = 0; a < n; ++a) {
    auto table = model.factor_table(a);
    log_tables[a].resize(table.size());
    for (std::size_t c = 0; c < table.size(); ++c)
      log_tables[a][c] = table[c] > 0.0 ? std::log(table[c]) : -std::numeric_limits<double>::infinity();
  }
  std::vector<std::pair<int, int>> pos(m);
  for (int e = 0; e < m; ++e)
    pos[e] = {g.local_position(g.edge(e).first, e), g.local_position(g.edge(e).second, e)};

  // The top `high` edge bits select a chunk; the low bits are walked in Gray order.
  const int high = std::min(m, 6);
  const int low = m - high;
  const std::size_t chunks = std::size_t{1} << high;
  std::vector<detail::LogSum> partial(chunks);

  detail::parallel_for(chunks, options.threads, [&](std::size_t chunk) {
    std::vector<std::uint32_t> local(n, 0);
    for (int b = 0; b < high; ++b) {
      if (!((chunk >> b) & 1U)) continue;
      const int e = low + b;
      local[g.edge(e).first] ^= 1U << pos[e].first;
      local[g.edge(e).second] ^= 1U << pos[e].second;
    }
    detail::LogSum acc;
    const std::uint64_t steps = std::uint64_t{1} << low;
    for (std::uint64_t step = 0;; ++step) {
      double logw = 0.0;
      for (int a = 0; a < n; ++a) logw += log_tables[a][local[a]];
      acc.add(logw);
      if (step + 1 == steps) break;
      const int e = std::countr_zero(step + 1);
      local[g.edge(e).first] ^= 1U << pos[e].first;
      local[g.edge(e).second] ^= 1U << pos[e].second;
    }
    partial[chunk] = acc;
  });

  detail::LogSum total;
  for (const auto& p : partial) total.merge(p);
  if (total.empty()) throw ComputationError("partition function is zero");
  return total.value();
}

double exact_log_partition(const CheckGraph& g, const FactorSpec& spec, const PartitionOptions& options) {
  return exact_log_partition(VertexModel(g, spec), options);
}

}  // namespace loopexp
