#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "loopexp/channel.hpp"
#include "loopexp/model.hpp"

using namespace loopexp;
using namespace loopexp::testing;

TEST(Channel, HalfLogLikelihood) {
  EXPECT_DOUBLE_EQ(half_log_likelihood(0.5), 0.0);
  EXPECT_NEAR(half_log_likelihood(0.48), 0.0400213538, 1e-10);
  EXPECT_THROW(half_log_likelihood(0.0), PreconditionError);
  EXPECT_THROW(half_log_likelihood(0.6), PreconditionError);
}

TEST(Channel, SampleBsc) {
  const CheckGraph g = sample_regular_graph(10, 3, 1);
  const ChannelRealization fair = sample_bsc(g, 0.5, 3);
  for (double h : fair.h) EXPECT_EQ(h, 0.0);

  const ChannelRealization noisy = sample_bsc(g, 0.48, 3);
  ASSERT_EQ(noisy.h.size(), 15u);
  for (std::size_t e = 0; e < noisy.h.size(); ++e) {
    EXPECT_NEAR(std::abs(noisy.h[e]), 0.0400213538, 1e-10);
    EXPECT_EQ(noisy.h[e] > 0, noisy.sign[e] > 0);
  }
  EXPECT_EQ(sample_bsc(g, 0.48, 3).sign, noisy.sign);
  EXPECT_THROW(sample_bsc(g, 0.0, 3), PreconditionError);
  EXPECT_THROW(sample_bsc(g, 0.51, 3), PreconditionError);
}

TEST(Channel, FlipFrequency) {
  const CheckGraph g = sample_regular_graph(2000, 3, 1);
  const ChannelRealization c = sample_bsc(g, 0.3, 11);
  int flips = 0;
  for (int s : c.sign) flips += s < 0;
  const double freq = static_cast<double>(flips) / c.sign.size();
  EXPECT_NEAR(freq, 0.3, 4 * std::sqrt(0.21 / c.sign.size()));
}

TEST(Channel, ConditionalEntropy) {
  EXPECT_DOUBLE_EQ(conditional_entropy_per_node(0.7, 0.5), 0.7);
  EXPECT_NEAR(conditional_entropy_per_node(0.5, 0.3), 0.3305404, 1e-7);
  EXPECT_THROW(conditional_entropy_per_node(0.5, 0.0), PreconditionError);
}

TEST(Channel, CsvRoundTrip) {
  const CheckGraph g = sample_regular_graph(8, 3, 2);
  const ChannelRealization c = sample_bsc(g, 0.45, 9);
  std::stringstream buffer;
  write_channel_csv(buffer, c);
  const ChannelRealization back = read_channel_csv(buffer, 0.45);
  EXPECT_EQ(back.sign, c.sign);
  EXPECT_EQ(back.h, c.h);
}

TEST(Model, FactorKindNames) {
  for (FactorKind k : {FactorKind::CycleCode, FactorKind::SoftenedCycleCode, FactorKind::HighTemperature})
    EXPECT_EQ(factor_kind_from_string(to_string(k)), k);
  EXPECT_EQ(factor_kind_from_string("hightemp"), FactorKind::HighTemperature);
  EXPECT_THROW(factor_kind_from_string("ising"), PreconditionError);
}

TEST(Model, FactorValues) {
  const CheckGraph g = k4();
  const FactorSpec zero = uniform_cycle_code(g, 0.0);
  const int even[] = {1, -1, -1};
  const int odd[] = {1, 1, -1};
  EXPECT_DOUBLE_EQ(factor_value(zero, g, 0, even), 1.0);
  EXPECT_DOUBLE_EQ(factor_value(zero, g, 0, odd), 0.0);

  const int plus[] = {1, 1, 1};
  EXPECT_NEAR(factor_value(uniform_cycle_code(g, 0.08), g, 0, plus), 1.127497, 1e-6);

  const FactorSpec ht = FactorSpec::high_temperature(std::vector<double>(6, 0.0), std::vector<double>(4, 0.0));
  EXPECT_DOUBLE_EQ(factor_value(ht, g, 2, odd), 0.5);
  EXPECT_DOUBLE_EQ(factor_value(ht, g, 2, even), 0.5);

  const FactorSpec soft = FactorSpec::softened_cycle_code(std::vector<double>(6, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(factor_value(soft, g, 1, odd), 0.05);
  EXPECT_THROW(factor_value(zero, g, 0, std::span<const int>(plus, 2)), PreconditionError);
}

TEST(Model, SpecValidation) {
  const CheckGraph g = k4();
  EXPECT_THROW(VertexModel(g, FactorSpec::cycle_code(std::vector<double>(5, 0.0))), PreconditionError);
  EXPECT_THROW(VertexModel(g, FactorSpec::softened_cycle_code(std::vector<double>(6, 0.0), 1.5)),
               PreconditionError);
  EXPECT_THROW(VertexModel(g, FactorSpec::high_temperature(std::vector<double>(6, 0.0), {0.1})),
               PreconditionError);
}

TEST(Model, FactorTableMatchesFactorValue) {
  const CheckGraph g = sample_regular_graph(6, 3, 4);
  const VertexModel m(g, FactorSpec::cycle_code(sample_bsc(g, 0.45, 4)));
  for (int a = 0; a < 6; ++a) {
    const auto table = m.factor_table(a);
    ASSERT_EQ(table.size(), 8u);
    for (std::uint32_t c = 0; c < 8; ++c) {
      const int spins[] = {local_spin(c, 0), local_spin(c, 1), local_spin(c, 2)};
      EXPECT_DOUBLE_EQ(table[c], factor_value(m.spec(), g, a, spins));
    }
  }
}

TEST(ExactPartition, SmallClosedForms) {
  EXPECT_NEAR(exact_log_partition(triangle(), uniform_cycle_code(triangle(), 0.0)), std::numbers::ln2, 1e-14);
  EXPECT_NEAR(exact_log_partition(k4(), uniform_cycle_code(k4(), 0.0)), std::log(8.0), 1e-14);
  // two codewords on the triangle: all plus and all minus, with fields e^{+-3h}
  const double h = 0.3;
  EXPECT_NEAR(exact_log_partition(triangle(), uniform_cycle_code(triangle(), h)),
              std::log(2 * std::cosh(3 * h)), 1e-14);
}

TEST(ExactPartition, HighTemperatureZeroCoupling) {
  // J = 0 factorizes: every edge sums e^{h s} over s
  const CheckGraph g = sample_regular_graph(8, 3, 3);
  std::vector<double> h(g.num_edges());
  double expected = -g.num_nodes() * std::numbers::ln2;
  for (int e = 0; e < g.num_edges(); ++e) {
    h[e] = 0.05 * (e % 5) - 0.1;
    expected += std::log(2 * std::cosh(h[e]));
  }
  const FactorSpec spec = FactorSpec::high_temperature(h, std::vector<double>(8, 0.0));
  EXPECT_NEAR(exact_log_partition(g, spec), expected, 1e-12);
}

TEST(ExactPartition, ThreadCountDoesNotChangeResult) {
  const CheckGraph g = sample_regular_graph(12, 3, 8);
  const FactorSpec spec = FactorSpec::cycle_code(sample_bsc(g, 0.45, 8));
  PartitionOptions serial, parallel;
  parallel.threads = 4;
  EXPECT_EQ(exact_log_partition(g, spec, serial), exact_log_partition(g, spec, parallel));
}

TEST(ExactPartition, EdgeCap) {
  const CheckGraph g = sample_regular_graph(20, 3, 1);
  EXPECT_THROW(exact_log_partition(g, uniform_cycle_code(g, 0.0)), PreconditionError);
}

TEST(ExactPartition, SoftenedApproachesHardConstraint) {
  const CheckGraph g = sample_regular_graph(8, 3, 2);
  const ChannelRealization c = sample_bsc(g, 0.45, 2);
  const double hard = exact_log_partition(g, FactorSpec::cycle_code(c));
  double previous = INFINITY;
  for (double eps : {0.1, 0.01, 0.001}) {
    const double gap = std::abs(exact_log_partition(g, FactorSpec::softened_cycle_code(c.h, eps)) - hard);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-2);
}
