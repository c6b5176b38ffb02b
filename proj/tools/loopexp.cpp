// loopexp: command-line front end for the loop-series experiments.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loopexp/bounds.hpp"
#include "loopexp/experiments.hpp"
#include "loopexp/graphs.hpp"

using namespace loopexp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitDiverged = 3;

struct Diverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstanceFlags {
  std::string model = "cycle-code";
  InstanceConfig config;
};

void add_instance_options(CLI::App* sub, InstanceFlags& flags, int default_n) {
  flags.config.n = default_n;
  sub->add_option("--model", flags.model, "cycle-code | softened-cycle-code | high-temperature")
      ->capture_default_str();
  sub->add_option("-n,--nodes", flags.config.n, "number of check nodes")->capture_default_str();
  sub->add_option("-d,--degree", flags.config.d, "node degree")->capture_default_str();
  sub->add_option("-p,--crossover", flags.config.p, "BSC crossover probability")->capture_default_str();
  sub->add_option("-J,--coupling", flags.config.coupling, "high-temperature coupling J")->capture_default_str();
  sub->add_option("--h-bound", flags.config.h_bound, "high-temperature fields drawn from [-h, h]")
      ->capture_default_str();
  sub->add_option("--softening", flags.config.softening, "softened cycle code epsilon")->capture_default_str();
  sub->add_flag("--connected", flags.config.connected_only, "resample until the graph is connected");
}

void add_bp_options(CLI::App* sub, BpOptions& bp) {
  sub->add_option("--tol", bp.tolerance, "BP convergence tolerance")->capture_default_str();
  sub->add_option("--damping", bp.damping, "BP damping in [0, 1)")->capture_default_str();
  sub->add_option("--max-sweeps", bp.max_sweeps, "BP sweep budget")->capture_default_str();
}

InstanceConfig resolve(const InstanceFlags& flags) {
  InstanceConfig config = flags.config;
  config.kind = factor_kind_from_string(flags.model);
  return config;
}

/// Echo of every option of the subcommand as one-line JSON.
std::string config_echo(const CLI::App* sub) {
  nlohmann::ordered_json j;
  j["subcommand"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    const auto results = opt->results();
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (!results.empty()) {
      j[name] = results.size() == 1 ? nlohmann::ordered_json(results.front()) : nlohmann::ordered_json(results);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j.dump();
}

RunMeta make_meta(const CLI::App* sub, std::uint64_t seed) {
  RunMeta meta;
  meta.config_json = config_echo(sub);
  meta.master_seed = seed;
  meta.wall_clock = current_timestamp();
  return meta;
}

/// Runs `write` against the named file, or stdout for "-" / empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw PreconditionError("cannot open output file " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-series / polymer expansion experiments for cycle codes"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "key = value config file; flags override it");
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_path;
  int threads = 1;

  // gen-graph
  auto* gen = app.add_subcommand("gen-graph", "sample a random d-regular graph");
  int gen_n = 10, gen_d = 3;
  gen->add_option("-n,--nodes", gen_n, "number of nodes")->capture_default_str();
  gen->add_option("-d,--degree", gen_d, "degree")->capture_default_str();
  gen->add_option("--seed", seed, "graph seed")->capture_default_str();
  gen->add_option("-o,--out", out_path, "output file (default stdout)");

  // verify-identity
  auto* verify = app.add_subcommand("verify-identity", "exact ln Z vs Bethe + ln Z_corr, per trial");
  InstanceFlags verify_instance;
  VerifyIdentityConfig verify_config;
  std::string out_dir;
  add_instance_options(verify, verify_instance, 4);
  add_bp_options(verify, verify_config.bp);
  verify->add_option("--trials", verify_config.trials, "number of trials")->capture_default_str();
  verify->add_option("--seed", seed, "master seed")->capture_default_str();
  verify->add_option("--catalog-cap", verify_config.analysis.catalog_cap, "polymer node cap (0 = n)")
      ->capture_default_str();
  verify->add_option("--mayer-order", verify_config.analysis.mayer_order, "Mayer truncation order (0 = off)")
      ->capture_default_str();
  verify->add_flag("--split", verify_config.analysis.split, "also report the small/large polymer split");
  verify->add_option("--threads", threads, "worker threads")->capture_default_str();
  verify->add_option("--out-dir", out_dir, "directory for per-trial JSON reports and summary.csv");

  // correction-decay
  auto* decay = app.add_subcommand("correction-decay", "mean |(1/n) ln Z_corr| against n");
  InstanceFlags decay_instance;
  CorrectionDecayConfig decay_config;
  decay_instance.config.p = 0.48;
  add_instance_options(decay, decay_instance, 4);
  add_bp_options(decay, decay_config.bp);
  decay->add_option("--sizes", decay_config.sizes, "comma-separated node counts")
      ->delimiter(',')
      ->capture_default_str();
  decay->add_option("--seeds", decay_config.seeds, "instances per size")->capture_default_str();
  decay->add_option("--seed", seed, "master seed")->capture_default_str();
  decay->add_option("--threads", threads, "worker threads")->capture_default_str();
  decay->add_option("-o,--out", out_path, "CSV output (default stdout)");

  // exponent-scan
  auto* scan = app.add_subcommand("exponent-scan", "grid scan of the large-n exponent");
  int scan_d = 3;
  double scan_h = 0.1, scan_step = 0.01;
  std::optional<double> scan_n;
  BoundConstants constants;
  constants.alpha_full = 1.0;
  scan->add_option("-d,--degree", scan_d, "degree")->capture_default_str();
  scan->add_option("--field", scan_h, "field magnitude h")->capture_default_str();
  scan->add_option("--step", scan_step, "grid step (must divide 1)")->capture_default_str();
  scan->add_option("-n,--nodes", scan_n, "finite n (default: n -> infinity)");
  scan->add_option("--alpha-d", constants.alpha_full, "alpha_d")->capture_default_str();
  scan->add_option("--alpha-i", constants.alpha_partial, "alpha_i for i < d")->capture_default_str();
  scan->add_option("-o,--out", out_path, "surface CSV output (default stdout)");

  // expander-check
  auto* expander = app.add_subcommand("expander-check", "edge-expansion verdicts on sampled graphs");
  ExpanderCheckConfig expander_config;
  std::optional<double> kappa;
  expander->add_option("-n,--nodes", expander_config.n, "number of nodes")->capture_default_str();
  expander->add_option("-d,--degree", expander_config.d, "degree")->capture_default_str();
  expander->add_option("--samples", expander_config.samples, "number of graphs")->capture_default_str();
  expander->add_option("--kappa", kappa, "expansion constant (default 0.18 d)");
  expander->add_option("--exhaustive-max", expander_config.expansion.exhaustive_max_nodes,
                       "largest n scanned exhaustively")
      ->capture_default_str();
  expander->add_option("--subset-samples", expander_config.expansion.samples, "random sets per graph above that")
      ->capture_default_str();
  expander->add_option("--seed", seed, "master seed")->capture_default_str();
  expander->add_option("-o,--out", out_path, "CSV output (default stdout)");

  // criterion-report
  auto* criterion = app.add_subcommand("criterion-report", "convergence criterion along a parameter sweep");
  InstanceFlags criterion_instance;
  CriterionReportConfig criterion_config;
  std::string parameter = "coupling";
  criterion_instance.model = "high-temperature";
  add_instance_options(criterion, criterion_instance, 10);
  add_bp_options(criterion, criterion_config.bp);
  criterion->add_option("--parameter", parameter, "coupling | field")->capture_default_str();
  criterion->add_option("--values", criterion_config.values, "comma-separated sweep values")
      ->delimiter(',')
      ->required();
  criterion->add_option("--trials", criterion_config.trials, "instances per value")->capture_default_str();
  criterion->add_option("--catalog-cap", criterion_config.catalog_cap, "polymer node cap (0 = n)")
      ->capture_default_str();
  criterion->add_option("--seed", seed, "master seed")->capture_default_str();
  criterion->add_option("-o,--out", out_path, "CSV output (default stdout)");

  // entropy
  auto* entropy = app.add_subcommand("entropy", "conditional entropy per check node, exact and Bethe");
  InstanceFlags entropy_instance;
  EntropyConfig entropy_config;
  bool bits = false;
  entropy_instance.config.n = 8;
  add_instance_options(entropy, entropy_instance, 8);
  add_bp_options(entropy, entropy_config.bp);
  entropy->add_option("--trials", entropy_config.trials, "number of instances")->capture_default_str();
  entropy->add_option("--seed", seed, "master seed")->capture_default_str();
  entropy->add_flag("--bits", bits, "report in bits instead of nats");
  entropy->add_option("-o,--out", out_path, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const CheckGraph g = sample_regular_graph(gen_n, gen_d, seed);
      with_output(out_path, [&](std::ostream& out) { write_graph(out, g); });
    } else if (*verify) {
      verify_config.instance = resolve(verify_instance);
      verify_config.seed = seed;
      verify_config.threads = threads;
      const auto result = run_verify_identity(verify_config);
      const RunMeta meta = make_meta(verify, seed);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        for (const auto& trial : result.trials) {
          char name[32];
          std::snprintf(name, sizeof name, "trial_%04d.json", trial.trial);
          std::ofstream json(std::filesystem::path(out_dir) / name);
          json << expansion_report_json(trial, meta) << '\n';
        }
        std::ofstream csv(std::filesystem::path(out_dir) / "summary.csv");
        write_identity_summary_csv(csv, result, meta);
      } else {
        write_identity_summary_csv(std::cout, result, meta);
      }
      std::fprintf(stderr, "converged %d, excluded %d, max residual %.3e\n", result.converged, result.excluded,
                   result.max_residual);
      if (result.converged == 0) throw Diverged("BP diverged on every trial");
    } else if (*decay) {
      decay_config.instance = resolve(decay_instance);
      decay_config.seed = seed;
      decay_config.threads = threads;
      const auto rows = run_correction_decay(decay_config);
      with_output(out_path, [&](std::ostream& out) { write_decay_csv(out, rows, make_meta(decay, seed)); });
      bool any = false;
      for (const auto& row : rows) any = any || row.samples > 0;
      if (!any) throw Diverged("BP diverged on every trial");
    } else if (*scan) {
      ExponentScan result;
      with_output(out_path, [&](std::ostream& out) {
        write_csv_preamble(out, make_meta(scan, 0));
        result = scan_exponent(scan_d, scan_h, scan_step, scan_n, constants, &out);
      });
      std::fprintf(stderr, "points %zu, skipped %zu, all negative %s, max %.10g at (", result.points, result.skipped,
                   result.all_negative ? "yes" : "no", result.max_value);
      for (std::size_t i = 0; i < result.argmax.size(); ++i)
        std::fprintf(stderr, "%s%.4g", i ? ", " : "", result.argmax[i]);
      std::fprintf(stderr, ")\n");
    } else if (*expander) {
      expander_config.kappa = kappa.value_or(0.18 * expander_config.d);
      expander_config.seed = seed;
      const auto result = run_expander_check(expander_config);
      with_output(out_path,
                  [&](std::ostream& out) { write_expander_csv(out, result, make_meta(expander, seed)); });
      std::fprintf(stderr, "pass fraction %.4f\n", result.pass_fraction);
    } else if (*criterion) {
      criterion_config.instance = resolve(criterion_instance);
      criterion_config.seed = seed;
      if (parameter == "coupling") {
        criterion_config.parameter = SweepParameter::Coupling;
      } else if (parameter == "field") {
        criterion_config.parameter = SweepParameter::Field;
      } else {
        throw PreconditionError("--parameter must be coupling or field");
      }
      const auto report = run_criterion_report(criterion_config);
      with_output(out_path,
                  [&](std::ostream& out) { write_criterion_csv(out, report, make_meta(criterion, seed)); });
    } else if (*entropy) {
      entropy_config.instance = resolve(entropy_instance);
      entropy_config.seed = seed;
      const auto result = run_entropy(entropy_config);
      with_output(out_path,
                  [&](std::ostream& out) { write_entropy_csv(out, result, make_meta(entropy, seed), bits); });
    }
  } catch (const Diverged& e) {
    std::cerr << "loopexp: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const PreconditionError& e) {
    std::cerr << "loopexp: precondition violated: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "loopexp: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
