#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infersim/simengine.hpp"

namespace infersim {

// Arrival source: a CSV file or one of the built-in generators.
struct TraceSource {
  std::optional<std::filesystem::path> file;
  std::string generator;  // constant | burst | periodic_burst
  double rate = 0;        // constant
  double base_rate = 0;
  double peak_rate = 0;
  double peak_start_s = 0;  // burst
  double peak_len_s = 0;
  double period_s = 0;  // periodic_burst
  double first_peak_s = 0;
  int ramp_steps = 0;
  double ramp_step_s = 0;
  double duration_s = 3600;
  Jitter jitter = Jitter::kPoisson;

  // Generators draw with the given seed; files ignore it.
  ArrivalTrace build(std::uint64_t seed) const;
};

nlohmann::ordered_json trace_source_to_json(const TraceSource& t);

struct OutputSpec {
  std::filesystem::path dir;
  bool ledger = true;
  bool request_csv = false;
};

struct ExperimentConfig {
  std::filesystem::path source;  // the config file, when loaded from one
  TraceSource trace;
  MixSpec mix;
  SelectionMode selection = SelectionMode::kParagon;
  std::filesystem::path catalog_path;
  std::filesystem::path rate_card_path;
  Catalog catalog;
  RateCard card;
  std::vector<PolicySpec> policies;
  std::string baseline;
  OutputSpec output;
  std::uint64_t seed = 0;
  int repetitions = 1;
  SimOptions simulation;
};

// Relative paths resolve against the config file's directory. Every problem
// found is reported in one ValidationError before anything runs.
ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct ComparisonRow {
  std::string policy;
  double normalized_cost = 0;
  double slo_violation_pct = 0;
  double over_provision_ratio = 0;
  double serverless_share_pct = 0;
  // Spread across repetitions; equal to the value for a single repetition.
  double normalized_cost_min = 0, normalized_cost_max = 0;
  double slo_violation_pct_min = 0, slo_violation_pct_max = 0;
  double over_provision_ratio_min = 0, over_provision_ratio_max = 0;
};

struct ComparisonTable {
  std::string baseline;
  std::vector<ComparisonRow> rows;

  const ComparisonRow& row(const std::string& policy) const;
};

// Rows in report order. normalized_cost = total_cost / baseline total_cost.
ComparisonTable compare(std::span<const MetricsReport> reports, const std::string& baseline_name);

// Mean of each metric over repetition tables, min/max kept. Tables must list
// the same policies in the same order.
ComparisonTable aggregate(std::span<const ComparisonTable> tables);

nlohmann::ordered_json table_to_json(const ComparisonTable& table);

// "policy,normalized_cost,slo_violation_pct,over_provision_ratio" with six
// decimals per value.
std::string emit_plot_data(const ComparisonTable& table);
ComparisonTable parse_plot_data(std::istream& in);

struct ExperimentResult {
  // reports[rep * policies + p]
  std::vector<MetricsReport> reports;
  ComparisonTable table;
  std::vector<std::filesystem::path> files;  // written artifacts, manifest last
};

// Runs every (policy, repetition); repetition r uses seed + r for the trace
// generator, the mix draw, and the run. threads <= 0 means the OpenMP
// default; 1 runs the serial reference path. write=false skips the output
// directory.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 0, bool write = true);

}  // namespace infersim
