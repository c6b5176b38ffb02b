#include "loopexp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "loopexp/channel.hpp"
#include "loopexp/detail/parallel.hpp"
#include "loopexp/rng.hpp"

namespace loopexp {

using nlohmann::ordered_json;

std::string current_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

Instance make_instance(const InstanceConfig& config, std::uint64_t master_seed, int trial) {
  Instance instance;
  instance.graph_seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial), 0);
  instance.channel_seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial), 1);
  instance.graph = sample_regular_graph(config.n, config.d, instance.graph_seed);
  for (int attempt = 0; config.connected_only && instance.graph.num_components() != 1; ++attempt) {
    if (attempt >= 1000) throw ComputationError("no connected instance found");
    instance.graph_seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial), 2 + attempt);
    instance.graph = sample_regular_graph(config.n, config.d, instance.graph_seed);
  }
  const CheckGraph& g = instance.graph;
  switch (config.kind) {
    case FactorKind::CycleCode:
      instance.spec = FactorSpec::cycle_code(sample_bsc(g, config.p, instance.channel_seed));
      break;
    case FactorKind::SoftenedCycleCode:
      instance.spec = FactorSpec::softened_cycle_code(sample_bsc(g, config.p, instance.channel_seed).h,
                                                      config.softening);
      break;
    case FactorKind::HighTemperature: {
      Rng rng(instance.channel_seed);
      std::uniform_real_distribution<double> field(-config.h_bound, config.h_bound);
      std::vector<double> h(g.num_edges());
      for (double& x : h) x = field(rng);
      instance.spec = FactorSpec::high_temperature(std::move(h), std::vector<double>(g.num_nodes(), config.coupling));
      break;
    }
  }
  return instance;
}

// ---------------------------------------------------------------------------

VerifyIdentityResult run_verify_identity(const VerifyIdentityConfig& config) {
  if (config.trials < 1) throw PreconditionError("need at least one trial");
  VerifyIdentityResult result;
  result.trials.resize(config.trials);
  detail::parallel_for(static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t t) {
    const Instance instance = make_instance(config.instance, config.seed, static_cast<int>(t));
    const VertexModel model(instance.graph, instance.spec);
    const MessageSet eta = solve_fixed_point(model, config.bp);
    TrialResult& trial = result.trials[t];
    trial.trial = static_cast<int>(t);
    trial.graph_seed = instance.graph_seed;
    trial.channel_seed = instance.channel_seed;
    trial.report = analyze_instance(model, eta, config.analysis);
    trial.report.p = config.instance.p;
    trial.report.graph_seed = instance.graph_seed;
    trial.report.channel_seed = instance.channel_seed;
  });
  double sum = 0.0;
  for (const auto& trial : result.trials) {
    if (!trial.report.bp_converged) {
      ++result.excluded;
      continue;
    }
    ++result.converged;
    const double residual = trial.report.identity_residual().value_or(0.0);
    result.max_residual = std::max(result.max_residual, residual);
    sum += residual;
  }
  if (result.converged > 0) result.mean_residual = sum / result.converged;
  return result;
}

// ---------------------------------------------------------------------------

std::vector<DecayRow> run_correction_decay(const CorrectionDecayConfig& config) {
  if (config.seeds < 1) throw PreconditionError("need at least one seed");
  AnalysisOptions analysis;
  analysis.exact_partition = false;
  analysis.polymer_form = false;
  analysis.mayer_order = 0;
  analysis.criterion = false;
  std::vector<DecayRow> rows;
  for (int n : config.sizes) {
    InstanceConfig instance = config.instance;
    instance.n = n;
    std::vector<std::optional<double>> values(config.seeds);
    detail::parallel_for(static_cast<std::size_t>(config.seeds), config.threads, [&](std::size_t s) {
      const Instance inst = make_instance(instance, derive_seed(config.seed, static_cast<std::uint64_t>(n)),
                                          static_cast<int>(s));
      const VertexModel model(inst.graph, inst.spec);
      const MessageSet eta = solve_fixed_point(model, config.bp);
      if (!eta.converged) return;
      const ExpansionReport report = analyze_instance(model, eta, analysis);
      if (auto f = report.f_corr()) values[s] = std::abs(*f);
    });
    DecayRow row;
    row.n = n;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& v : values) {
      if (!v) {
        ++row.excluded;
        continue;
      }
      ++row.samples;
      sum += *v;
      sum_sq += *v * *v;
    }
    if (row.samples > 0) {
      row.mean_abs_f_corr = sum / row.samples;
      if (row.samples > 1) {
        const double var = std::max(0.0, (sum_sq - row.samples * row.mean_abs_f_corr * row.mean_abs_f_corr) /
                                               (row.samples - 1));
        row.std_error = std::sqrt(var / row.samples);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

bool weakly_decreasing(const std::vector<DecayRow>& rows, int inversions) {
  int seen = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double rise = rows[i].mean_abs_f_corr - rows[i - 1].mean_abs_f_corr;
    if (rise <= 0.0) continue;
    const double tolerance = 2.0 * std::hypot(rows[i].std_error, rows[i - 1].std_error);
    if (rise > tolerance) return false;
    if (++seen > inversions) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

ExpanderCheckResult run_expander_check(const ExpanderCheckConfig& config) {
  ExpanderCheckResult result;
  int passed = 0;
  for (int s = 0; s < config.samples; ++s) {
    ExpanderRow row;
    row.sample = s;
    row.graph_seed = derive_seed(config.seed, static_cast<std::uint64_t>(s));
    const CheckGraph g = sample_regular_graph(config.n, config.d, row.graph_seed);
    ExpansionOptions options = config.expansion;
    options.seed = derive_seed(row.graph_seed, 0, 7);
    row.verdict = check_edge_expansion(g, config.kappa, options);
    passed += row.verdict.expander;
    result.rows.push_back(std::move(row));
  }
  if (config.samples > 0) result.pass_fraction = static_cast<double>(passed) / config.samples;
  return result;
}

// ---------------------------------------------------------------------------

CriterionReport run_criterion_report(const CriterionReportConfig& config) {
  CriterionReport report;
  AnalysisOptions analysis;
  analysis.exact_partition = false;
  analysis.exact_correction = false;
  analysis.polymer_form = false;
  analysis.mayer_order = 0;
  analysis.catalog_cap = config.catalog_cap;
  for (double value : config.values) {
    InstanceConfig instance = config.instance;
    if (config.parameter == SweepParameter::Coupling) {
      instance.coupling = value;
    } else if (instance.kind == FactorKind::HighTemperature) {
      instance.h_bound = value;
    } else {
      // field sweep for the channel models: h = (1/2) ln((1-p)/p)
      instance.p = 1.0 / (1.0 + std::exp(2.0 * value));
    }
    CriterionRow row;
    row.parameter = value;
    for (int t = 0; t < config.trials; ++t) {
      const Instance inst = make_instance(instance, config.seed, t);
      const VertexModel model(inst.graph, inst.spec);
      const MessageSet eta = solve_fixed_point(model, config.bp);
      if (!eta.converged) continue;
      const ExpansionReport r = analyze_instance(model, eta, analysis);
      ++row.samples;
      row.mean_criterion += *r.criterion;
      row.mean_exchanged += *r.criterion_exchanged;
      row.max_criterion = std::max(row.max_criterion, *r.criterion);
    }
    if (row.samples > 0) {
      row.mean_criterion /= row.samples;
      row.mean_exchanged /= row.samples;
    }
    report.rows.push_back(row);
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    if (row.samples == 0 || row.mean_criterion < 1.0) continue;
    if (i == 0) {
      report.threshold = row.parameter;
    } else {
      const auto& prev = report.rows[i - 1];
      const double span = row.mean_criterion - prev.mean_criterion;
      const double w = span > 0.0 ? (1.0 - prev.mean_criterion) / span : 0.0;
      report.threshold = prev.parameter + w * (row.parameter - prev.parameter);
    }
    break;
  }
  return report;
}

// ---------------------------------------------------------------------------

EntropyResult run_entropy(const EntropyConfig& config) {
  EntropyResult result;
  const double p = config.instance.kind == FactorKind::HighTemperature ? 0.5 : config.instance.p;
  for (int t = 0; t < config.trials; ++t) {
    const Instance inst = make_instance(config.instance, config.seed, t);
    const VertexModel model(inst.graph, inst.spec);
    const MessageSet eta = solve_fixed_point(model, config.bp);
    EntropyRow row;
    row.trial = t;
    row.graph_seed = inst.graph_seed;
    row.channel_seed = inst.channel_seed;
    row.converged = eta.converged;
    const double n = inst.graph.num_nodes();
    row.f_exact = exact_log_partition(model) / n;
    row.f_bethe = bethe_log_partition(model, eta).total / n;
    row.entropy_exact = conditional_entropy_per_node(row.f_exact, p);
    row.entropy_bethe = conditional_entropy_per_node(row.f_bethe, p);
    if (row.converged) {
      ++result.converged;
      result.mean_entropy_bethe += row.entropy_bethe;
    }
    result.mean_entropy_exact += row.entropy_exact;
    result.rows.push_back(row);
  }
  if (config.trials > 0) result.mean_entropy_exact /= config.trials;
  if (result.converged > 0) result.mean_entropy_bethe /= result.converged;
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json meta_json(const RunMeta& meta) {
  ordered_json j;
  j["tool_version"] = meta.tool_version;
  j["format_version"] = kFormatVersion;
  j["config"] = ordered_json::parse(meta.config_json);
  j["master_seed"] = meta.master_seed;
  j["wall_clock"] = meta.wall_clock;
  return j;
}

ordered_json signed_log_json(const std::optional<SignedLog>& value) {
  if (!value) return nullptr;
  return {{"sign", value->sign}, {"log_abs", value->log_abs}};
}

template <typename T>
ordered_json optional_json(const std::optional<T>& value) {
  if (!value) return nullptr;
  return *value;
}

std::string format_double(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : ""; }

}  // namespace

std::string expansion_report_json(const TrialResult& trial, const RunMeta& meta) {
  const ExpansionReport& r = trial.report;
  ordered_json j;
  j["meta"] = meta_json(meta);
  j["trial"] = trial.trial;
  j["seeds"] = {{"graph", trial.graph_seed}, {"channel", trial.channel_seed}};
  j["parameters"] = {{"n", r.n},
                     {"d", r.d},
                     {"edges", r.num_edges},
                     {"model", to_string(r.kind)},
                     {"p", r.p},
                     {"coupling", r.coupling},
                     {"h_bound", r.h_bound}};
  j["bp"] = {{"sweeps", r.bp_sweeps}, {"residual", r.bp_residual}, {"converged", r.bp_converged}};
  j["bethe"] = {{"node_term", r.bethe.node_term}, {"edge_term", r.bethe.edge_term}, {"total", r.bethe.total}};
  j["exact_log_z"] = optional_json(r.exact_log_z);
  j["log_z_corr"] = signed_log_json(r.log_z_corr);
  j["log_z_corr_loops"] = signed_log_json(r.log_z_corr_loops);
  j["log_z_corr_polymer"] = signed_log_json(r.log_z_corr_polymer);
  j["polymer_truncated"] = r.polymer_truncated;
  j["max_dangling_activity"] = optional_json(r.max_dangling_activity);
  j["catalog"] = {{"cap", r.catalog_cap}, {"size", r.catalog_size}};
  j["mayer"] = {{"order", r.mayer_order}, {"value", optional_json(r.mayer_value)}, {"partial_sums", r.mayer_partial_sums}};
  j["criterion"] = optional_json(r.criterion);
  j["criterion_exchanged"] = optional_json(r.criterion_exchanged);
  j["f_corr"] = optional_json(r.f_corr());
  j["identity_residual"] = optional_json(r.identity_residual());
  if (r.split) {
    ordered_json terms = ordered_json::array();
    for (const auto& t : r.split->large_terms)
      terms.push_back({{"polymer", t.polymer}, {"activity", t.activity}, {"ratio", t.ratio}});
    j["split"] = {{"threshold", r.split->threshold},
                  {"z_p", r.split->z_p},
                  {"large_tail", r.split->large_tail},
                  {"large_terms", terms},
                  {"pair_correction", r.split->pair_correction},
                  {"unique_large", r.split->unique_large},
                  {"truncated", r.split->truncated},
                  {"reconstructed_z_corr", r.split->reconstructed_z_corr()}};
  } else {
    j["split"] = nullptr;
  }
  return j.dump(2);
}

void write_csv_preamble(std::ostream& out, const RunMeta& meta) {
  out << "# tool_version: " << meta.tool_version << '\n';
  out << "# format_version: " << kFormatVersion << '\n';
  out << "# config: " << meta.config_json << '\n';
  out << "# master_seed: " << meta.master_seed << '\n';
  out << "# wall_clock: " << meta.wall_clock << '\n';
}

void write_identity_summary_csv(std::ostream& out, const VerifyIdentityResult& result, const RunMeta& meta) {
  write_csv_preamble(out, meta);
  out << "# converged: " << result.converged << ", excluded: " << result.excluded
      << ", max_residual: " << format_double(result.max_residual) << '\n';
  out << "trial,graph_seed,channel_seed,converged,sweeps,exact_log_z,bethe,log_z_corr,log_z_corr_loops,"
         "log_z_corr_polymer,criterion,residual\n";
  for (const auto& t : result.trials) {
    const auto& r = t.report;
    auto signed_value = [](const std::optional<SignedLog>& s) {
      return s && s->sign > 0 ? format_double(s->log_abs) : std::string();
    };
    out << t.trial << ',' << t.graph_seed << ',' << t.channel_seed << ',' << (r.bp_converged ? 1 : 0) << ','
        << r.bp_sweeps << ',' << format_optional(r.exact_log_z) << ',' << format_double(r.bethe.total) << ','
        << signed_value(r.log_z_corr) << ',' << signed_value(r.log_z_corr_loops) << ','
        << signed_value(r.log_z_corr_polymer) << ',' << format_optional(r.criterion) << ','
        << format_optional(r.identity_residual()) << '\n';
  }
}

void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows, const RunMeta& meta) {
  write_csv_preamble(out, meta);
  out << "n,samples,excluded,mean_abs_f_corr,std_error\n";
  for (const auto& row : rows)
    out << row.n << ',' << row.samples << ',' << row.excluded << ',' << format_double(row.mean_abs_f_corr) << ','
        << format_double(row.std_error) << '\n';
}

void write_expander_csv(std::ostream& out, const ExpanderCheckResult& result, const RunMeta& meta) {
  write_csv_preamble(out, meta);
  out << "# pass_fraction: " << format_double(result.pass_fraction) << '\n';
  out << "sample,graph_seed,mode,expander,min_ratio,subsets_checked,witness\n";
  for (const auto& row : result.rows) {
    std::string witness;
    for (std::size_t i = 0; i < row.verdict.witness.size(); ++i)
      witness += (i ? " " : "") + std::to_string(row.verdict.witness[i]);
    out << row.sample << ',' << row.graph_seed << ','
        << (row.verdict.mode == ExpansionMode::Exhaustive ? "exhaustive" : "sampled") << ','
        << (row.verdict.expander ? 1 : 0) << ',' << format_double(row.verdict.min_ratio) << ','
        << row.verdict.subsets_checked << ',' << witness << '\n';
  }
}

void write_criterion_csv(std::ostream& out, const CriterionReport& report, const RunMeta& meta) {
  write_csv_preamble(out, meta);
  out << "# threshold: " << (report.threshold ? format_double(*report.threshold) : "none") << '\n';
  out << "parameter,samples,mean_criterion,max_criterion,mean_exchanged\n";
  for (const auto& row : report.rows)
    out << format_double(row.parameter) << ',' << row.samples << ',' << format_double(row.mean_criterion) << ','
        << format_double(row.max_criterion) << ',' << format_double(row.mean_exchanged) << '\n';
}

void write_entropy_csv(std::ostream& out, const EntropyResult& result, const RunMeta& meta, bool bits) {
  const double scale = bits ? 1.0 / std::log(2.0) : 1.0;
  write_csv_preamble(out, meta);
  out << "# unit: " << (bits ? "bits" : "nats") << " per check node\n";
  out << "# mean_entropy_exact: " << format_double(result.mean_entropy_exact * scale)
      << ", mean_entropy_bethe: " << format_double(result.mean_entropy_bethe * scale) << '\n';
  out << "trial,graph_seed,channel_seed,converged,f_exact,f_bethe,entropy_exact,entropy_bethe\n";
  for (const auto& row : result.rows)
    out << row.trial << ',' << row.graph_seed << ',' << row.channel_seed << ',' << (row.converged ? 1 : 0) << ','
        << format_double(row.f_exact * scale) << ',' << format_double(row.f_bethe * scale) << ','
        << format_double(row.entropy_exact * scale) << ',' << format_double(row.entropy_bethe * scale) << '\n';
}

}  // namespace loopexp
