#pragma once

#include <iosfwd>
#include <vector>

#include "loopexp/model.hpp"

namespace loopexp {

/// Directed-edge messages: index 2e carries u->v and 2e+1 carries v->u for
/// edge e = (u, v), u < v.
struct MessageSet {
  std::vector<double> eta;
  int sweeps = 0;
  /// Largest undamped change max |update - old| in the last sweep.
  double residual = 0.0;
  bool converged = false;
  /// Set when some update left [-clamp, clamp] (or was not finite) and was clamped.
  bool overflow = false;

  static MessageSet zeros(const CheckGraph& g);

  static int index(const CheckGraph& g, int e, int from);
  double from_to(const CheckGraph& g, int from, int to) const;
  /// Message arriving at `a` along its k-th incident edge.
  double incoming(const CheckGraph& g, int a, int k) const;
  double outgoing(const CheckGraph& g, int a, int k) const;
};

struct BpOptions {
  double tolerance = 1e-12;
  double damping = 0.5;
  int max_sweeps = 10'000;
  double clamp = 30.0;
};

/// One flooding update of every directed message,
///   eta_{a->c} = atanh( <s_ac> of f_a * prod_{b != c} e^{eta_{b->a} s_ab} ),
/// followed by damping eta = (1 - damping) update + damping old.
MessageSet bp_sweep(const VertexModel& model, const MessageSet& in, const BpOptions& options = {});

/// Iterates bp_sweep until the undamped residual drops to the tolerance or the
/// sweep budget runs out. Non-convergence is reported through the flags.
MessageSet solve_fixed_point(const VertexModel& model, const BpOptions& options, const MessageSet& init);
MessageSet solve_fixed_point(const VertexModel& model, const BpOptions& options = {});

struct BetheValue {
  double node_term = 0.0;
  double edge_term = 0.0;
  double total = 0.0;
};

/// ln Z_Bethe(eta) = sum_a ln(sum_{s_a} f_a prod_b e^{eta_{b->a} s_ab})
///                 - sum_ab ln(2 cosh(eta_{a->b} + eta_{b->a})).
BetheValue bethe_log_partition(const VertexModel& model, const MessageSet& eta);

/// ln(2 cosh x) without overflow.
double log_two_cosh(double x);

/// CSV with header "from,to,eta", one row per directed edge in index order.
void write_messages_csv(std::ostream& out, const CheckGraph& g, const MessageSet& messages);
MessageSet read_messages_csv(std::istream& in, const CheckGraph& g);

}  // namespace loopexp
