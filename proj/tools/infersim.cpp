// infersim: run experiments, compare reports, generate traces, verify costs,
// and query model selection from the command line.
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure (including a
// failed cost verification).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "infersim/errors.hpp"
#include "infersim/experiment.hpp"

using namespace infersim;
namespace fs = std::filesystem;

namespace {

void print_table(const ComparisonTable& t, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %10s %10s %10s %12s\n", "policy", "norm_cost", "slo_viol%", "over_prov",
                "serverless%");
  out << buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%-20s %10.4f %10.3f %10.4f %12.3f\n", r.policy.c_str(), r.normalized_cost,
                  r.slo_violation_pct, r.over_provision_ratio, r.serverless_share_pct);
    out << buf;
  }
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + " is not valid JSON: " + e.what());
  }
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, int threads) {
  ExperimentConfig c = load_experiment(config);
  if (seed) c.seed = *seed;
  const ExperimentResult res = run_experiment(c, threads);
  print_table(res.table, std::cout);
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& baseline, const std::string& plot) {
  std::vector<MetricsReport> reports;
  for (const auto& f : files) reports.push_back(report_from_json(read_json(f)));
  const ComparisonTable t = compare(reports, baseline);
  print_table(t, std::cout);
  if (!plot.empty()) {
    std::ofstream out(plot, std::ios::binary | std::ios::trunc);
    out << emit_plot_data(t);
    if (!out) throw std::runtime_error("cannot write " + plot);
  }
  return 0;
}

int cmd_verify(const std::string& file, const std::string& card_path) {
  const nlohmann::json j = read_json(file);
  const MetricsReport r = report_from_json(j);
  const RateCard card = card_path.empty() ? report_rate_card(j) : load_rate_card(card_path);
  if (replay_verify(r, card)) {
    std::cout << "OK " << r.total_cost.to_string() << "\n";
    return 0;
  }
  std::cout << "MISMATCH report total " << r.total_cost.to_string() << "\n";
  return 2;
}

int cmd_select(const std::string& catalog_path, std::optional<double> acc, std::optional<Ms> lat,
               std::optional<std::string> cost_max, bool naive, const std::string& card_path,
               const std::string& vm_type) {
  const Catalog catalog = load_catalog(catalog_path);
  ConstraintSet c;
  c.accuracy_min_pct = acc;
  c.latency_max_ms = lat;
  if (cost_max) c.cost_budget = Money::parse(*cost_max);
  c.validate();

  CostEstimator est;
  std::optional<RateCard> card;
  std::string unit = "currency per 1M queries";
  if (!card_path.empty()) {
    card = load_rate_card(card_path);
    est = [&](const ModelProfile& m) { return cost_per_million(m, *card, vm_type, vm_type); };
  } else {
    // No prices: VM-hours per million queries at full slot use.
    unit = "vm-hours per 1M queries";
    est = [&](const ModelProfile& m) {
      const auto it = m.vm_slots.find(vm_type);
      const int slots = it == m.vm_slots.end() ? 1 : it->second;
      return CostEstimate{Money::from_units(1).mul_div(1'000'000 * m.ref_latency_ms, 3'600'000LL * slots),
                          DeploymentHint::kVm};
    };
  }
  const ModelChoice ch = naive ? select_model_naive(catalog, c, est) : select_model_paragon(catalog, c, est);
  nlohmann::ordered_json out;
  out["selection"] = naive ? "naive" : "paragon";
  out["model"] = ch.model_name ? nlohmann::ordered_json(*ch.model_name) : nlohmann::ordered_json(nullptr);
  out["satisfied"] = ch.satisfied;
  out["deployment_hint"] = to_string(ch.deployment_hint);
  out["estimated_cost_per_1M"] = ch.estimated_cost_per_1M.to_fixed(9);
  out["cost_unit"] = unit;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_trace_gen(TraceSource src, const std::string& kind, std::uint64_t seed, const std::string& out_path) {
  src.generator = kind == "periodic-burst" ? "periodic_burst" : kind;
  const ArrivalTrace t = src.build(seed);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  write_trace_csv(t, out);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  std::cout << "wrote " << t.arrivals_ms.size() << " arrivals to " << out_path << " (peak-to-median "
            << peak_to_median(t, 1) << "%)\n";
  return 0;
}

int cmd_trace_stats(const std::string& file, double window) {
  const ArrivalTrace t = load_trace_csv(file);
  const auto counts = window_counts(t, window);
  std::int64_t peak = 0;
  for (auto c : counts) peak = std::max(peak, c);
  nlohmann::ordered_json out;
  out["arrivals"] = t.arrivals_ms.size();
  out["duration_ms"] = t.duration_ms;
  out["mean_rate_per_s"] = t.duration_ms > 0 ? 1000.0 * static_cast<double>(t.arrivals_ms.size()) / t.duration_ms : 0;
  out["window_s"] = window;
  out["peak_per_window"] = peak;
  out["peak_to_median_pct"] = peak_to_median(counts);
  out["hash"] = t.hash();
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infersim: inference-serving procurement simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--threads", threads, "Worker threads (1 = serial reference path)");

  std::vector<std::string> reports;
  std::string baseline;
  std::string plot;
  auto* cmp = app.add_subcommand("compare", "Compare report files against a baseline");
  cmp->add_option("reports", reports, "Report JSON files")->required();
  cmp->add_option("--baseline", baseline, "Baseline policy name")->required();
  cmp->add_option("--plot", plot, "Also write plot CSV here");

  std::string report;
  std::string card_path;
  auto* ver = app.add_subcommand("verify", "Replay a report's ledger and check its costs");
  ver->add_option("report", report, "Report JSON file")->required();
  ver->add_option("--card", card_path, "Rate card (default: the one echoed in the report)");

  std::string catalog;
  std::optional<double> acc;
  std::optional<Ms> lat;
  std::optional<std::string> cost_max;
  bool naive = false;
  std::string vm_type = "m4.large";
  auto* sel = app.add_subcommand("select", "Pick a model for a constraint set");
  sel->add_option("--catalog", catalog, "Model catalog (JSON)")->required();
  sel->add_option("--acc-min", acc, "Minimum accuracy (%)");
  sel->add_option("--lat-max", lat, "Maximum latency (ms)");
  sel->add_option("--cost-max", cost_max, "Cost budget per 1M queries");
  sel->add_flag("--naive", naive, "Highest-accuracy baseline instead of cost-aware selection");
  sel->add_option("--card", card_path, "Rate card for cost estimates");
  sel->add_option("--vm-type", vm_type, "VM type for cost estimates");

  auto* trace = app.add_subcommand("trace", "Trace utilities");
  trace->require_subcommand(1);
  TraceSource src;
  std::string kind;
  std::string out_path;
  std::uint64_t trace_seed = 0;
  std::string jitter = "poisson";
  auto* gen = trace->add_subcommand("gen", "Generate a synthetic trace");
  gen->add_option("generator", kind, "constant | burst | periodic-burst")
      ->required()
      ->check(CLI::IsMember({"constant", "burst", "periodic-burst"}));
  gen->add_option("--rate", src.rate, "Rate for constant (req/s)");
  gen->add_option("--base", src.base_rate, "Base rate (req/s)");
  gen->add_option("--peak", src.peak_rate, "Peak rate (req/s)");
  gen->add_option("--peak-start", src.peak_start_s, "Burst start (s)");
  gen->add_option("--peak-len", src.peak_len_s, "Time at peak (s)");
  gen->add_option("--period", src.period_s, "Burst period (s)");
  gen->add_option("--first-peak", src.first_peak_s, "First burst start (s)");
  gen->add_option("--ramp-steps", src.ramp_steps, "Intermediate rate levels on each ramp");
  gen->add_option("--ramp-step", src.ramp_step_s, "Seconds per ramp level");
  gen->add_option("--duration", src.duration_s, "Trace length (s)");
  gen->add_option("--jitter", jitter, "none | poisson")->check(CLI::IsMember({"none", "poisson"}));
  gen->add_option("--seed", trace_seed, "Random seed");
  gen->add_option("-o,--output", out_path, "Output CSV")->required();

  std::string trace_file;
  double window = 1;
  auto* stats = trace->add_subcommand("stats", "Summarize a trace file");
  stats->add_option("file", trace_file, "Trace CSV")->required();
  stats->add_option("--window", window, "Window for peak-to-median (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config, seed, threads);
    if (*cmp) return cmd_compare(reports, baseline, plot);
    if (*ver) return cmd_verify(report, card_path);
    if (*sel) return cmd_select(catalog, acc, lat, cost_max, naive, card_path, vm_type);
    if (*gen) {
      src.jitter = jitter_from_string(jitter);
      return cmd_trace_gen(src, kind, trace_seed, out_path);
    }
    if (*stats) return cmd_trace_stats(trace_file, window);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
