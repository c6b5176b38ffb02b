#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "loopexp/graphs.hpp"

namespace loopexp {

/// One BSC(p) output for the all-one transmitted word: per-edge sign (+1 when
/// the bit arrived intact) and half-log-likelihood h = sign * (1/2) ln((1-p)/p).
struct ChannelRealization {
  double p = 0.5;
  std::uint64_t seed = 0;
  std::vector<int> sign;
  std::vector<double> h;

  double magnitude() const;
};

struct ChannelOptions {
  double min_p = 1e-6;
};

/// (1/2) ln((1-p)/p).
double half_log_likelihood(double p);

ChannelRealization sample_bsc(const CheckGraph& g, double p, std::uint64_t seed,
                              const ChannelOptions& options = {});

/// Converts an average free energy (1/n) ln Z (nats per check node) into the
/// conditional entropy (1/n) H(X|Y).
double conditional_entropy_per_node(double avg_free_energy, double p);

/// CSV with header "edge,sign,h".
void write_channel_csv(std::ostream& out, const ChannelRealization& channel);
ChannelRealization read_channel_csv(std::istream& in, double p);

}  // namespace loopexp
