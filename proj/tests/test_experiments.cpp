#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "loopexp/experiments.hpp"

using namespace loopexp;

namespace {

std::string strip_wall_clock(const std::string& text) {
  static const std::regex stamp(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z)");
  return std::regex_replace(text, stamp, "<time>");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

RunMeta fixed_meta() {
  RunMeta meta;
  meta.config_json = R"({"k":1})";
  meta.master_seed = 3;
  meta.wall_clock = "2000-01-01T00:00:00Z";
  return meta;
}

}  // namespace

TEST(Instances, DeterministicPerTrial) {
  InstanceConfig config;
  config.n = 10;
  config.p = 0.45;
  const Instance a = make_instance(config, 5, 2);
  const Instance b = make_instance(config, 5, 2);
  const Instance c = make_instance(config, 5, 3);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.spec.h, b.spec.h);
  EXPECT_NE(a.graph_seed, c.graph_seed);
  EXPECT_NE(a.graph_seed, a.channel_seed);
}

TEST(Instances, ConnectedOnly) {
  InstanceConfig config;
  config.n = 8;
  config.connected_only = true;
  for (int t = 0; t < 30; ++t) EXPECT_EQ(make_instance(config, 1, t).graph.num_components(), 1);
}

TEST(Instances, HighTemperatureFields) {
  InstanceConfig config;
  config.kind = FactorKind::HighTemperature;
  config.n = 10;
  config.coupling = 0.07;
  config.h_bound = 0.2;
  const Instance inst = make_instance(config, 2, 0);
  for (double h : inst.spec.h) EXPECT_LE(std::abs(h), 0.2);
  for (double j : inst.spec.coupling) EXPECT_EQ(j, 0.07);
}

TEST(VerifyIdentity, SpecExamples) {
  VerifyIdentityConfig k4;
  k4.instance.n = 4;
  k4.instance.p = 0.5;
  const auto r = run_verify_identity(k4);
  ASSERT_EQ(r.converged, 1);
  const ExpansionReport& rep = r.trials[0].report;
  EXPECT_LE(r.max_residual, 1e-10);
  EXPECT_NEAR(*rep.exact_log_z, 3 * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(rep.bethe.total, 2 * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(rep.log_z_corr->log(), std::numbers::ln2, 1e-12);

  VerifyIdentityConfig ring = k4;
  ring.instance.n = 3;
  ring.instance.d = 2;
  const auto t = run_verify_identity(ring);
  EXPECT_LE(t.max_residual, 1e-10);
  EXPECT_NEAR(t.trials[0].report.log_z_corr->log(), std::numbers::ln2, 1e-12);

  VerifyIdentityConfig batch;
  batch.instance.n = 8;
  batch.instance.p = 0.45;
  batch.trials = 50;
  batch.seed = 1;
  batch.analysis.mayer_order = 0;
  const auto b = run_verify_identity(batch);
  EXPECT_EQ(b.converged + b.excluded, 50);
  EXPECT_LE(b.max_residual, 1e-8);
}

TEST(VerifyIdentity, ThreadsDoNotChangeResults) {
  VerifyIdentityConfig config;
  config.instance.n = 8;
  config.instance.p = 0.45;
  config.trials = 6;
  const auto serial = run_verify_identity(config);
  config.threads = 3;
  const auto parallel = run_verify_identity(config);
  const RunMeta meta = fixed_meta();
  for (int i = 0; i < 6; ++i)
    EXPECT_EQ(expansion_report_json(serial.trials[i], meta), expansion_report_json(parallel.trials[i], meta));
}

TEST(VerifyIdentity, NonConvergedTrialsAreExcluded) {
  VerifyIdentityConfig config;
  config.instance.n = 6;
  config.instance.p = 0.45;
  config.trials = 3;
  config.bp.max_sweeps = 1;
  const auto r = run_verify_identity(config);
  EXPECT_EQ(r.converged, 0);
  EXPECT_EQ(r.excluded, 3);
  EXPECT_EQ(r.max_residual, 0.0);
}

TEST(CorrectionDecay, ClosedFormsAtHalfNoise) {
  CorrectionDecayConfig config;
  config.instance.p = 0.5;
  config.instance.connected_only = true;
  config.sizes = {4, 6, 8};
  config.seeds = 4;
  for (const DecayRow& row : run_correction_decay(config)) {
    EXPECT_EQ(row.samples, 4);
    EXPECT_NEAR(row.mean_abs_f_corr, std::numbers::ln2 / row.n, 1e-12);
    EXPECT_NEAR(row.std_error, 0.0, 1e-12);
  }
  CorrectionDecayConfig ht;
  ht.instance.kind = FactorKind::HighTemperature;
  ht.instance.coupling = 0.0;
  ht.sizes = {4, 6};
  ht.seeds = 3;
  for (const DecayRow& row : run_correction_decay(ht)) EXPECT_NEAR(row.mean_abs_f_corr, 0.0, 1e-14);
}

TEST(CorrectionDecay, CycleCodeTrend) {
  CorrectionDecayConfig config;
  config.instance.p = 0.48;
  config.sizes = {4, 6, 8, 10, 12};
  config.seeds = 100;
  const auto rows = run_correction_decay(config);
  EXPECT_TRUE(weakly_decreasing(rows));
}

TEST(CorrectionDecay, TrendTolerance) {
  std::vector<DecayRow> rows(4);
  const double means[] = {0.5, 0.4, 0.41, 0.3};
  for (int i = 0; i < 4; ++i) {
    rows[i].n = 4 + 2 * i;
    rows[i].mean_abs_f_corr = means[i];
    rows[i].std_error = 0.01;
  }
  EXPECT_TRUE(weakly_decreasing(rows));
  rows[2].mean_abs_f_corr = 0.5;
  EXPECT_FALSE(weakly_decreasing(rows));
  rows[2].mean_abs_f_corr = 0.405;
  rows[3].mean_abs_f_corr = 0.41;
  EXPECT_FALSE(weakly_decreasing(rows, 1));
  EXPECT_TRUE(weakly_decreasing(rows, 2));
}

TEST(CriterionReport, IncreasesWithCoupling) {
  CriterionReportConfig config;
  config.instance.kind = FactorKind::HighTemperature;
  config.instance.n = 10;
  config.values = {0.01, 0.05, 0.1, 0.2};
  config.trials = 3;
  config.catalog_cap = 8;
  const CriterionReport r = run_criterion_report(config);
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_GT(r.rows[i].mean_criterion, r.rows[i - 1].mean_criterion);
  EXPECT_FALSE(r.threshold.has_value());
}

TEST(CriterionReport, ThresholdIsInterpolated) {
  CriterionReportConfig config;
  config.instance.kind = FactorKind::HighTemperature;
  config.instance.n = 8;
  config.values = {0.2, 2.0};
  config.trials = 2;
  const CriterionReport r = run_criterion_report(config);
  ASSERT_TRUE(r.threshold.has_value());
  EXPECT_GT(*r.threshold, 0.2);
  EXPECT_LE(*r.threshold, 2.0);
}

TEST(Entropy, HalfNoiseIsCodeRate) {
  EntropyConfig config;
  config.instance.n = 10;
  config.instance.p = 0.5;
  config.instance.connected_only = true;
  config.trials = 3;
  const EntropyResult r = run_entropy(config);
  for (const EntropyRow& row : r.rows) EXPECT_NEAR(row.entropy_exact, (15.0 - 10 + 1) / 10 * std::numbers::ln2, 1e-9);
  std::ostringstream bits;
  write_entropy_csv(bits, r, fixed_meta(), true);
  EXPECT_NE(bits.str().find("# unit: bits"), std::string::npos);
  EXPECT_NE(bits.str().find("mean_entropy_exact: 0.59999999999999"), std::string::npos);
}

TEST(Serialization, JsonReportCarriesProvenance) {
  VerifyIdentityConfig config;
  config.instance.n = 6;
  config.instance.p = 0.45;
  config.analysis.split = true;
  const auto r = run_verify_identity(config);
  const auto j = nlohmann::json::parse(expansion_report_json(r.trials[0], fixed_meta()));
  EXPECT_EQ(j["meta"]["tool_version"], kToolVersion);
  EXPECT_EQ(j["meta"]["format_version"], kFormatVersion);
  EXPECT_EQ(j["meta"]["master_seed"], 3);
  EXPECT_EQ(j["meta"]["config"]["k"], 1);
  EXPECT_EQ(j["seeds"]["graph"], r.trials[0].graph_seed);
  EXPECT_EQ(j["seeds"]["channel"], r.trials[0].channel_seed);
  EXPECT_EQ(j["parameters"]["model"], "cycle-code");
  EXPECT_TRUE(j["bp"]["converged"]);
  EXPECT_LE(j["identity_residual"].get<double>(), 1e-10);
  EXPECT_TRUE(j["split"].is_object());
}

TEST(Serialization, CsvHeaders) {
  const RunMeta meta = fixed_meta();
  std::ostringstream decay;
  write_decay_csv(decay, {DecayRow{4, 2, 0, 0.1, 0.01}}, meta);
  EXPECT_NE(decay.str().find("\nn,samples,excluded,mean_abs_f_corr,std_error\n4,2,0,"), std::string::npos);
  EXPECT_EQ(decay.str().rfind("# tool_version: ", 0), 0u);

  ExpanderCheckConfig ec;
  ec.samples = 3;
  std::ostringstream expander;
  write_expander_csv(expander, run_expander_check(ec), meta);
  EXPECT_NE(expander.str().find("sample,graph_seed,mode,expander,min_ratio,subsets_checked,witness\n"),
            std::string::npos);
}

TEST(ExpanderCheck, Reproducible) {
  ExpanderCheckConfig config;
  config.samples = 10;
  const auto a = run_expander_check(config);
  const auto b = run_expander_check(config);
  ASSERT_EQ(a.rows.size(), 10u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].graph_seed, b.rows[i].graph_seed);
    EXPECT_EQ(a.rows[i].verdict.expander, b.rows[i].verdict.expander);
  }
}

// --- command-line tool -----------------------------------------------------

#ifdef LOOPEXP_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string command = std::string(LOOPEXP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "loopexp_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("verify-identity --no-such-flag"), 1);
  EXPECT_EQ(run_cli("verify-identity -n 5 -d 3"), 2);
  EXPECT_EQ(run_cli("verify-identity -p 0.7"), 2);
  EXPECT_EQ(run_cli("verify-identity -n 6 -p 0.45 --trials 2 --max-sweeps 1"), 3);
  EXPECT_EQ(run_cli("exponent-scan --step 0.03"), 2);
}

TEST(Cli, GenGraphRoundTrips) {
  const auto path = scratch("g.txt");
  ASSERT_EQ(run_cli("gen-graph -n 12 -d 3 --seed 4 -o " + path.string()), 0);
  std::ifstream in(path);
  EXPECT_EQ(read_graph(in), sample_regular_graph(12, 3, 4));
}

TEST(Cli, VerifyIdentityIsReproducible) {
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  const std::string args = "verify-identity -n 6 -p 0.45 --trials 3 --seed 9 --split";
  ASSERT_EQ(run_cli(args + " --out-dir " + a.string()), 0);
  ASSERT_EQ(run_cli(args + " --out-dir " + b.string()), 0);
  for (const char* name : {"trial_0000.json", "trial_0002.json", "summary.csv"}) {
    const std::string x = strip_wall_clock(slurp(a / name));
    std::string y = strip_wall_clock(slurp(b / name));
    y = std::regex_replace(y, std::regex("run_b"), "run_a");
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, y) << name;
  }
  const auto j = nlohmann::json::parse(slurp(a / "trial_0001.json"));
  EXPECT_EQ(j["meta"]["master_seed"], 9);
  EXPECT_EQ(j["meta"]["config"]["trials"], "3");
  EXPECT_TRUE(j["meta"]["config"]["split"]);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = scratch("run.toml");
  {
    std::ofstream out(cfg);
    out << "[entropy]\nnodes = 6\ntrials = 2\ncrossover = 0.45\n";
  }
  const auto from_file = scratch("entropy_file.csv");
  const auto overridden = scratch("entropy_flag.csv");
  ASSERT_EQ(run_cli("--config " + cfg.string() + " entropy -o " + from_file.string()), 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " entropy --trials 3 -o " + overridden.string()), 0);
  auto data_rows = [](const std::string& text) {
    int rows = 0;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) rows += !line.empty() && line[0] != '#' && line[0] != 't';
    return rows;
  };
  const std::string a = slurp(from_file);
  EXPECT_EQ(data_rows(a), 2);
  EXPECT_NE(a.find("\"nodes\":\"6\""), std::string::npos);
  EXPECT_EQ(data_rows(slurp(overridden)), 3);
}

TEST(Cli, ExponentScanSurface) {
  const auto path = scratch("surface.csv");
  ASSERT_EQ(run_cli("exponent-scan --field 0.1 --step 0.1 -o " + path.string()), 0);
  const std::string text = slurp(path);
  EXPECT_NE(text.find("x_2,x_3,exponent\n"), std::string::npos);
  EXPECT_NE(text.find("# master_seed: "), std::string::npos);
}
#endif
