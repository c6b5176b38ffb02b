#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "loopexp/bp.hpp"
#include "loopexp/rng.hpp"

using namespace loopexp;
using namespace loopexp::testing;

namespace {

BpOptions undamped() {
  BpOptions o;
  o.damping = 0.0;
  return o;
}

FactorSpec random_high_temperature(const CheckGraph& g, double coupling, double h_bound, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-h_bound, h_bound);
  std::vector<double> h(g.num_edges());
  for (double& x : h) x = u(rng);
  return FactorSpec::high_temperature(h, std::vector<double>(g.num_nodes(), coupling));
}

}  // namespace

TEST(Messages, Indexing) {
  const CheckGraph g = k4();
  MessageSet m = MessageSet::zeros(g);
  ASSERT_EQ(m.eta.size(), 12u);
  const int e = *g.find_edge(1, 3);
  EXPECT_EQ(MessageSet::index(g, e, 1), 2 * e);
  EXPECT_EQ(MessageSet::index(g, e, 3), 2 * e + 1);
  m.eta[2 * e + 1] = 0.25;
  EXPECT_EQ(m.from_to(g, 3, 1), 0.25);
  EXPECT_EQ(m.incoming(g, 1, g.local_position(1, e)), 0.25);
  EXPECT_EQ(m.outgoing(g, 3, g.local_position(3, e)), 0.25);
  EXPECT_THROW(m.from_to(g, 0, 0), PreconditionError);
}

TEST(BpSweep, ZeroFieldIsFixed) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.0));
  const MessageSet out = bp_sweep(m, MessageSet::zeros(m.graph()));
  for (double x : out.eta) EXPECT_EQ(x, 0.0);
}

TEST(BpSweep, K4SingleUpdate) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.08));
  const MessageSet out = bp_sweep(m, MessageSet::zeros(m.graph()), undamped());
  const double expected = 0.04 + std::atanh(std::pow(std::tanh(0.04), 2));
  for (double x : out.eta) {
    EXPECT_NEAR(x, expected, 1e-14);
    EXPECT_NEAR(x, 0.04159829624, 1e-10);
  }
}

TEST(BpSweep, DampingMixesOldAndNew) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.08));
  BpOptions half;
  half.damping = 0.5;
  const MessageSet out = bp_sweep(m, MessageSet::zeros(m.graph()), half);
  for (double x : out.eta) EXPECT_NEAR(x, 0.5 * 0.04159829624, 1e-10);
  EXPECT_NEAR(out.residual, 0.04159829624, 1e-10);
}

TEST(BpSweep, ZeroCouplingGivesHalfField) {
  const CheckGraph g = sample_regular_graph(8, 3, 2);
  const VertexModel m(g, random_high_temperature(g, 0.0, 0.2, 5));
  MessageSet in = MessageSet::zeros(g);
  for (std::size_t i = 0; i < in.eta.size(); ++i) in.eta[i] = 0.1 * std::sin(static_cast<double>(i));
  const MessageSet out = bp_sweep(m, in, undamped());
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    EXPECT_NEAR(out.from_to(g, u, v), m.spec().h[e] / 2, 1e-14);
    EXPECT_NEAR(out.from_to(g, v, u), m.spec().h[e] / 2, 1e-14);
  }
}

TEST(BpSweep, Preconditions) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.0));
  MessageSet bad = MessageSet::zeros(k4());
  bad.eta[3] = NAN;
  EXPECT_THROW(bp_sweep(m, bad), PreconditionError);
  BpOptions o;
  o.damping = 1.0;
  EXPECT_THROW(bp_sweep(m, MessageSet::zeros(k4()), o), PreconditionError);
  MessageSet short_set;
  short_set.eta.assign(3, 0.0);
  EXPECT_THROW(bp_sweep(m, short_set), PreconditionError);
}

TEST(SolveFixedPoint, ZeroFieldConvergesImmediately) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.0));
  const MessageSet eta = solve_fixed_point(m);
  EXPECT_TRUE(eta.converged);
  EXPECT_EQ(eta.sweeps, 1);
  for (double x : eta.eta) EXPECT_EQ(x, 0.0);
}

TEST(SolveFixedPoint, K4UniformField) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.08));
  const MessageSet eta = solve_fixed_point(m);
  ASSERT_TRUE(eta.converged);
  EXPECT_LE(eta.residual, 1e-12);
  for (double x : eta.eta) EXPECT_NEAR(x, 0.04764212871, 1e-10);
  const double x = eta.eta[0];
  EXPECT_NEAR(x, 0.04 + std::atanh(std::pow(std::tanh(x + 0.04), 2)), 1e-12);
}

TEST(SolveFixedPoint, HighTemperatureUniqueFromAnyInit) {
  const CheckGraph g = sample_regular_graph(10, 3, 3);
  const VertexModel m(g, random_high_temperature(g, 0.05, 0.2, 9));
  BpOptions opts;
  const MessageSet reference = solve_fixed_point(m, opts);
  ASSERT_TRUE(reference.converged);
  Rng rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    MessageSet init = MessageSet::zeros(g);
    for (double& x : init.eta) x = u(rng);
    const MessageSet eta = solve_fixed_point(m, opts, init);
    ASSERT_TRUE(eta.converged);
    for (std::size_t i = 0; i < eta.eta.size(); ++i) EXPECT_NEAR(eta.eta[i], reference.eta[i], 10 * opts.tolerance);
  }
}

TEST(SolveFixedPoint, BudgetExhaustionIsReported) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.08));
  BpOptions o;
  o.max_sweeps = 2;
  const MessageSet eta = solve_fixed_point(m, o);
  EXPECT_FALSE(eta.converged);
  EXPECT_EQ(eta.sweeps, 2);
  o.tolerance = 0.0;
  EXPECT_THROW(solve_fixed_point(m, o), PreconditionError);
}

TEST(SolveFixedPoint, OverflowIsFlagged) {
  const VertexModel m(k4(), uniform_cycle_code(k4(), 80.0));
  const MessageSet eta = solve_fixed_point(m);
  EXPECT_TRUE(eta.overflow);
  EXPECT_FALSE(eta.converged);
  for (double x : eta.eta) EXPECT_LE(std::abs(x), 30.0);
}

TEST(Bethe, ZeroFieldClosedForm) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CheckGraph g = sample_regular_graph(10, 3, seed);
    const VertexModel m(g, uniform_cycle_code(g, 0.0));
    const BetheValue b = bethe_log_partition(m, MessageSet::zeros(g));
    EXPECT_NEAR(b.node_term, 10 * 2 * std::numbers::ln2, 1e-12);
    EXPECT_NEAR(b.edge_term, 15 * std::numbers::ln2, 1e-12);
    EXPECT_NEAR(b.total, 5 * std::numbers::ln2, 1e-12);
  }
  const VertexModel m(k4(), uniform_cycle_code(k4(), 0.0));
  EXPECT_NEAR(bethe_log_partition(m, MessageSet::zeros(k4())).total, 2 * std::numbers::ln2, 1e-14);
}

TEST(Bethe, ExactOnTrees) {
  // a tree with interior nodes of degree 3
  const CheckGraph tree = CheckGraph::general(8, {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {2, 6}, {2, 7}});
  for (double j : {0.0, 0.3, 1.2}) {
    const VertexModel m(tree, random_high_temperature(tree, j, 0.5, 4));
    const MessageSet eta = solve_fixed_point(m);
    ASSERT_TRUE(eta.converged);
    EXPECT_NEAR(bethe_log_partition(m, eta).total, exact_log_partition(m), 1e-11);
  }
}

TEST(Bethe, LogTwoCoshIsStable) {
  EXPECT_NEAR(log_two_cosh(0.0), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(log_two_cosh(1000.0), 1000.0, 1e-12);
  EXPECT_NEAR(log_two_cosh(-1000.0), 1000.0, 1e-12);
  EXPECT_NEAR(log_two_cosh(0.7), std::log(2 * std::cosh(0.7)), 1e-15);
}

TEST(Messages, CsvRoundTrip) {
  const CheckGraph g = sample_regular_graph(8, 3, 6);
  const VertexModel m(g, FactorSpec::cycle_code(sample_bsc(g, 0.45, 6)));
  const MessageSet eta = solve_fixed_point(m);
  std::stringstream buffer;
  write_messages_csv(buffer, g, eta);
  const MessageSet back = read_messages_csv(buffer, g);
  EXPECT_EQ(back.eta, eta.eta);

  std::istringstream partial("from,to,eta\n0,1,0.5\n");
  EXPECT_THROW(read_messages_csv(partial, g), PreconditionError);
}
