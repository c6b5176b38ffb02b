#include "loopexp/bp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace loopexp {

MessageSet MessageSet::zeros(const CheckGraph& g) {
  MessageSet m;
  m.eta.assign(2 * static_cast<std::size_t>(g.num_edges()), 0.0);
  return m;
}

int MessageSet::index(const CheckGraph& g, int e, int from) {
  return 2 * e + (g.edge(e).first == from ? 0 : 1);
}

double MessageSet::from_to(const CheckGraph& g, int from, int to) const {
  auto e = g.find_edge(from, to);
  if (!e) throw PreconditionError("no edge between the given nodes");
  return eta[index(g, *e, from)];
}

double MessageSet::incoming(const CheckGraph& g, int a, int k) const {
  const int e = g.incident(a)[k];
  return eta[index(g, e, g.other_end(e, a))];
}

double MessageSet::outgoing(const CheckGraph& g, int a, int k) const {
  return eta[index(g, g.incident(a)[k], a)];
}

double log_two_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax));
}

namespace {

void check_messages(const CheckGraph& g, const MessageSet& m) {
  if (m.eta.size() != 2 * static_cast<std::size_t>(g.num_edges()))
    throw PreconditionError("message set does not match the graph");
  for (double x : m.eta)
    if (!std::isfinite(x)) throw PreconditionError("messages must be finite");
}

}  // namespace

MessageSet bp_sweep(const VertexModel& model, const MessageSet& in, const BpOptions& options) {
  const CheckGraph& g = model.graph();
  check_messages(g, in);
  if (!(options.damping >= 0.0 && options.damping < 1.0))
    throw PreconditionError("damping must lie in [0, 1)");

  MessageSet out;
  out.eta.resize(in.eta.size());
  out.sweeps = in.sweeps + 1;
  std::vector<double> field;
  for (int a = 0; a < g.num_nodes(); ++a) {
    const int deg = g.degree(a);
    auto table = model.factor_table(a);
    field.resize(deg);
    for (int k = 0; k < deg; ++k) field[k] = in.incoming(g, a, k);

    for (int c = 0; c < deg; ++c) {
      // cavity weights grouped by the value of s_ac, with a max-shift
      double shift = 0.0;
      for (int k = 0; k < deg; ++k)
        if (k != c) shift += std::abs(field[k]);
      double plus = 0.0, minus = 0.0;
      for (std::uint32_t config = 0; config < table.size(); ++config) {
        if (table[config] == 0.0) continue;
        double exponent = -shift;
        for (int k = 0; k < deg; ++k)
          if (k != c) exponent += field[k] * local_spin(config, k);
        const double w = table[config] * std::exp(exponent);
        (local_spin(config, c) > 0 ? plus : minus) += w;
      }
      if (plus == 0.0 && minus == 0.0)
        throw ComputationError("local factor annihilates every configuration at node " +
                               std::to_string(a));
      double update = 0.5 * (std::log(plus) - std::log(minus));
      if (!std::isfinite(update) || std::abs(update) > options.clamp) {
        out.overflow = true;
        update = std::copysign(options.clamp, std::isnan(update) ? 1.0 : update);
      }
      const int slot = MessageSet::index(g, g.incident(a)[c], a);
      const double old = in.eta[slot];
      out.residual = std::max(out.residual, std::abs(update - old));
      out.eta[slot] = (1.0 - options.damping) * update + options.damping * old;
    }
  }
  out.converged = !out.overflow && out.residual <= options.tolerance;
  return out;
}

MessageSet solve_fixed_point(const VertexModel& model, const BpOptions& options, const MessageSet& init) {
  if (!(options.tolerance > 0.0)) throw PreconditionError("tolerance must be positive");
  if (options.max_sweeps < 1) throw PreconditionError("max_sweeps must be at least 1");
  MessageSet current = init;
  current.sweeps = 0;
  current.converged = false;
  current.overflow = false;
  bool overflowed = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    current = bp_sweep(model, current, options);
    overflowed = overflowed || current.overflow;
    if (current.converged) break;
  }
  current.overflow = overflowed;
  current.converged = current.converged && !overflowed;
  return current;
}

MessageSet solve_fixed_point(const VertexModel& model, const BpOptions& options) {
  return solve_fixed_point(model, options, MessageSet::zeros(model.graph()));
}

BetheValue bethe_log_partition(const VertexModel& model, const MessageSet& eta) {
  const CheckGraph& g = model.graph();
  check_messages(g, eta);
  BetheValue value;
  for (int a = 0; a < g.num_nodes(); ++a) {
    const int deg = g.degree(a);
    auto table = model.factor_table(a);
    double shift = 0.0;
    for (int k = 0; k < deg; ++k) shift += std::abs(eta.incoming(g, a, k));
    double z = 0.0;
    for (std::uint32_t config = 0; config < table.size(); ++config) {
      if (table[config] == 0.0) continue;
      double exponent = -shift;
      for (int k = 0; k < deg; ++k) exponent += eta.incoming(g, a, k) * local_spin(config, k);
      z += table[config] * std::exp(exponent);
    }
    if (!(z > 0.0)) throw ComputationError("local normalizer vanishes at node " + std::to_string(a));
    value.node_term += std::log(z) + shift;
  }
  for (int e = 0; e < g.num_edges(); ++e)
    value.edge_term += log_two_cosh(eta.eta[2 * e] + eta.eta[2 * e + 1]);
  value.total = value.node_term - value.edge_term;
  return value;
}

void write_messages_csv(std::ostream& out, const CheckGraph& g, const MessageSet& messages) {
  out << "from,to,eta\n";
  char buffer[64];
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    std::snprintf(buffer, sizeof buffer, "%.17g", messages.eta[2 * e]);
    out << u << ',' << v << ',' << buffer << '\n';
    std::snprintf(buffer, sizeof buffer, "%.17g", messages.eta[2 * e + 1]);
    out << v << ',' << u << ',' << buffer << '\n';
  }
}

MessageSet read_messages_csv(std::istream& in, const CheckGraph& g) {
  MessageSet m = MessageSet::zeros(g);
  std::vector<char> seen(m.eta.size(), 0);
  std::string line;
  std::getline(in, line);
  if (line.rfind("from,to,eta", 0) != 0) throw PreconditionError("missing message CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string from, to, value;
    if (!std::getline(row, from, ',') || !std::getline(row, to, ',') || !std::getline(row, value))
      throw PreconditionError("malformed message row: " + line);
    const int a = std::stoi(from), b = std::stoi(to);
    auto e = g.find_edge(a, b);
    if (!e) throw PreconditionError("message on a non-edge: " + line);
    const int slot = MessageSet::index(g, *e, a);
    m.eta[slot] = std::stod(value);
    seen[slot] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw PreconditionError("message CSV does not cover every directed edge");
  return m;
}

}  // namespace loopexp
