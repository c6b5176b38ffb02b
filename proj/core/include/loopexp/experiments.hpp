#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loopexp/bounds.hpp"
#include "loopexp/bp.hpp"
#include "loopexp/loopseries.hpp"
#include "loopexp/model.hpp"

namespace loopexp {

inline constexpr const char* kToolVersion = "loopexp 1.0.0";
inline constexpr const char* kFormatVersion = "1";

/// Provenance written into every output file.
struct RunMeta {
  std::string tool_version = kToolVersion;
  /// One-line JSON echo of the full configuration.
  std::string config_json = "{}";
  std::uint64_t master_seed = 0;
  /// Wall-clock timestamp (ISO 8601); the only field allowed to differ between reruns.
  std::string wall_clock;
};

std::string current_timestamp();

/// How one random instance is drawn.
struct InstanceConfig {
  FactorKind kind = FactorKind::CycleCode;
  int n = 4;
  int d = 3;
  double p = 0.5;            // BSC crossover (cycle-code kinds)
  double coupling = 0.05;    // J_a, uniform over nodes (high temperature)
  double h_bound = 0.2;      // h_ab uniform in [-h, h] (high temperature)
  double softening = 0.01;   // softened cycle code
  bool connected_only = false;
};

struct Instance {
  CheckGraph graph;
  FactorSpec spec;
  std::uint64_t graph_seed = 0;
  std::uint64_t channel_seed = 0;
};

/// Draws the trial-th instance; streams are keyed by (master seed, trial index).
Instance make_instance(const InstanceConfig& config, std::uint64_t master_seed, int trial);

// ---------------------------------------------------------------------------

struct VerifyIdentityConfig {
  InstanceConfig instance;
  int trials = 1;
  std::uint64_t seed = 1;
  BpOptions bp;
  AnalysisOptions analysis;
  int threads = 1;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t channel_seed = 0;
  ExpansionReport report;
};

struct VerifyIdentityResult {
  std::vector<TrialResult> trials;
  int converged = 0;
  int excluded = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
};

/// Per-trial decomposition reports; non-converged trials are kept but excluded
/// from the residual statistics.
VerifyIdentityResult run_verify_identity(const VerifyIdentityConfig& config);

// ---------------------------------------------------------------------------

struct CorrectionDecayConfig {
  InstanceConfig instance;
  std::vector<int> sizes{4, 6, 8, 10, 12};
  int seeds = 100;
  std::uint64_t seed = 1;
  BpOptions bp;
  int threads = 1;
};

struct DecayRow {
  int n = 0;
  int samples = 0;
  int excluded = 0;
  double mean_abs_f_corr = 0.0;
  double std_error = 0.0;
};

std::vector<DecayRow> run_correction_decay(const CorrectionDecayConfig& config);

/// True when the means are non-increasing in n, allowing at most `inversions`
/// increases, each smaller than two combined standard errors.
bool weakly_decreasing(const std::vector<DecayRow>& rows, int inversions = 1);

// ---------------------------------------------------------------------------

struct ExpanderCheckConfig {
  int n = 14;
  int d = 3;
  int samples = 200;
  double kappa = 0.54;
  std::uint64_t seed = 1;
  ExpansionOptions expansion;
};

struct ExpanderRow {
  int sample = 0;
  std::uint64_t graph_seed = 0;
  ExpansionVerdict verdict;
};

struct ExpanderCheckResult {
  std::vector<ExpanderRow> rows;
  double pass_fraction = 0.0;
};

ExpanderCheckResult run_expander_check(const ExpanderCheckConfig& config);

// ---------------------------------------------------------------------------

enum class SweepParameter { Coupling, Field };

struct CriterionReportConfig {
  InstanceConfig instance;
  SweepParameter parameter = SweepParameter::Coupling;
  std::vector<double> values;
  int trials = 5;
  std::uint64_t seed = 1;
  int catalog_cap = 0;
  BpOptions bp;
};

struct CriterionRow {
  double parameter = 0.0;
  int samples = 0;
  double mean_criterion = 0.0;
  double max_criterion = 0.0;
  double mean_exchanged = 0.0;
};

struct CriterionReport {
  std::vector<CriterionRow> rows;
  /// Interpolated sweep value where the mean criterion first reaches 1.
  std::optional<double> threshold;
};

CriterionReport run_criterion_report(const CriterionReportConfig& config);

// ---------------------------------------------------------------------------

struct EntropyConfig {
  InstanceConfig instance;
  int trials = 10;
  std::uint64_t seed = 1;
  BpOptions bp;
};

struct EntropyRow {
  int trial = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t channel_seed = 0;
  bool converged = false;
  double f_exact = 0.0;
  double f_bethe = 0.0;
  double entropy_exact = 0.0;
  double entropy_bethe = 0.0;
};

struct EntropyResult {
  std::vector<EntropyRow> rows;
  double mean_entropy_exact = 0.0;
  double mean_entropy_bethe = 0.0;
  int converged = 0;
};

EntropyResult run_entropy(const EntropyConfig& config);

// ---------------------------------------------------------------------------
// Serialization

std::string expansion_report_json(const TrialResult& trial, const RunMeta& meta);
void write_identity_summary_csv(std::ostream& out, const VerifyIdentityResult& result, const RunMeta& meta);
void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows, const RunMeta& meta);
void write_expander_csv(std::ostream& out, const ExpanderCheckResult& result, const RunMeta& meta);
void write_criterion_csv(std::ostream& out, const CriterionReport& report, const RunMeta& meta);
void write_entropy_csv(std::ostream& out, const EntropyResult& result, const RunMeta& meta, bool bits);
/// "# key: value" provenance lines preceding a CSV header row.
void write_csv_preamble(std::ostream& out, const RunMeta& meta);

}  // namespace loopexp
