#include "loopexp/channel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "loopexp/rng.hpp"

namespace loopexp {

double half_log_likelihood(double p) {
  if (!(p > 0.0 && p <= 0.5)) throw PreconditionError("crossover probability must lie in (0, 1/2]");
  return 0.5 * std::log((1.0 - p) / p);
}

double ChannelRealization::magnitude() const { return half_log_likelihood(p); }

ChannelRealization sample_bsc(const CheckGraph& g, double p, std::uint64_t seed,
                              const ChannelOptions& options) {
  if (!(p >= options.min_p && p <= 0.5))
    throw PreconditionError("crossover probability " + std::to_string(p) + " outside [" +
                            std::to_string(options.min_p) + ", 1/2]");
  ChannelRealization channel;
  channel.p = p;
  channel.seed = seed;
  const double magnitude = half_log_likelihood(p);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  channel.sign.resize(g.num_edges());
  channel.h.resize(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    channel.sign[e] = unit(rng) < p ? -1 : 1;
    channel.h[e] = channel.sign[e] * magnitude;
  }
  return channel;
}

double conditional_entropy_per_node(double avg_free_energy, double p) {
  if (!(p > 0.0 && p <= 0.5)) throw PreconditionError("crossover probability must lie in (0, 1/2]");
  return avg_free_energy - 0.5 * (1.0 - 2.0 * p) * std::log((1.0 - p) / p);
}

void write_channel_csv(std::ostream& out, const ChannelRealization& channel) {
  out << "edge,sign,h\n";
  char buffer[64];
  for (std::size_t e = 0; e < channel.h.size(); ++e) {
    std::snprintf(buffer, sizeof buffer, "%.17g", channel.h[e]);
    out << e << ',' << channel.sign[e] << ',' << buffer << '\n';
  }
}

ChannelRealization read_channel_csv(std::istream& in, double p) {
  ChannelRealization channel;
  channel.p = p;
  std::string line;
  std::getline(in, line);
  if (line.rfind("edge,sign,h", 0) != 0) throw PreconditionError("missing channel CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string edge, sign, h;
    if (!std::getline(row, edge, ',') || !std::getline(row, sign, ',') || !std::getline(row, h))
      throw PreconditionError("malformed channel row: " + line);
    if (std::stoul(edge) != channel.h.size()) throw PreconditionError("channel rows out of order");
    channel.sign.push_back(std::stoi(sign));
    channel.h.push_back(std::stod(h));
  }
  return channel;
}

}  // namespace loopexp
