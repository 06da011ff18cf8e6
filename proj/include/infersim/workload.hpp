#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infersim/catalog.hpp"

namespace infersim {

struct ArrivalTrace {
  std::vector<Ms> arrivals_ms;  // non-decreasing, each in [0, duration_ms)
  Ms duration_ms = 0;

  void validate() const;
  // Content hash of the arrival sequence and horizon.
  std::string hash() const;
  bool operator==(const ArrivalTrace&) const = default;
};

enum class Jitter { kNone, kPoisson };
Jitter jitter_from_string(const std::string& s);

enum class SloClass { kStrict, kRelaxed };
std::string to_string(SloClass c);

struct QuerySpec {
  std::uint32_t id = 0;
  Ms arrival_ms = 0;
  SloClass slo_class = SloClass::kRelaxed;
  ConstraintSet constraints;
  std::string model_name;

  Ms latency_budget_ms() const { return constraints.latency_max_ms.value_or(0); }
  bool operator==(const QuerySpec&) const = default;
};

// Constraint template for one query class. latency_max_ms defaults to the
// class SLO.
struct ConstraintTemplate {
  SloClass slo_class = SloClass::kRelaxed;
  double weight = 1;
  std::optional<double> accuracy_min_pct;
  std::optional<Ms> latency_max_ms;
  std::optional<Money> cost_budget;
};

struct MixSpec {
  double strict_fraction = 0.5;
  Ms strict_slo_ms = 500;
  Ms relaxed_slo_ms = 5000;
  std::optional<double> strict_accuracy_min_pct;
  std::optional<double> relaxed_accuracy_min_pct;
  std::optional<Money> strict_cost_budget;
  std::optional<Money> relaxed_cost_budget;
  // When non-empty, each query draws a template by weight instead of the
  // strict/relaxed Bernoulli split.
  std::vector<ConstraintTemplate> templates;
  std::uint64_t rng_seed = 0;

  void validate() const;
  // The effective template list (two entries for the strict/relaxed split).
  std::vector<ConstraintTemplate> resolved_templates() const;
  ConstraintSet constraints_for(const ConstraintTemplate& t) const;
};

nlohmann::ordered_json mix_to_json(const MixSpec& mix);
MixSpec mix_from_json(const nlohmann::json& j);

enum class SelectionMode { kNaive, kParagon };
SelectionMode selection_mode_from_string(const std::string& s);
std::string to_string(SelectionMode m);

// Accepts headerless one-timestamp-per-line (ms) or a "sec,count" header
// followed by per-second counts, expanded to even spacing within each second.
ArrivalTrace load_trace_csv(const std::string& path);
ArrivalTrace parse_trace_csv(std::istream& in);
void write_trace_csv(const ArrivalTrace& trace, std::ostream& out);

ArrivalTrace gen_constant(double rate_per_s, double duration_s, Jitter jitter, std::uint64_t seed);

// Base rate everywhere except [peak_start_s, peak_start_s + peak_len_s).
ArrivalTrace gen_burst(double base_rate, double peak_rate, double peak_start_s, double peak_len_s, double duration_s,
                       Jitter jitter, std::uint64_t seed);

// Piecewise-constant rate process. Segment i covers [start_s[i], start_s[i+1])
// (the last one runs to duration_s). Deterministic spacing inverts the
// cumulative intensity at integer counts; Poisson jitter inverts it at
// unit-rate exponential epochs.
struct RateSegment {
  double start_s = 0;
  double rate_per_s = 0;
};
ArrivalTrace gen_piecewise(std::span<const RateSegment> segments, double duration_s, Jitter jitter,
                           std::uint64_t seed);

// Repeating bursts every period_s, the first starting at first_peak_s. With
// ramp_steps > 0 the rate climbs through that many evenly spaced levels, each
// held ramp_step_s, before peak_len_s at the peak, then descends the same way.
ArrivalTrace gen_periodic_burst(double base_rate, double peak_rate, double period_s, double peak_len_s,
                                double first_peak_s, double duration_s, Jitter jitter, std::uint64_t seed,
                                int ramp_steps = 0, double ramp_step_s = 0);

// Arrival counts per window over the whole horizon, empty windows included.
std::vector<std::int64_t> window_counts(const ArrivalTrace& trace, double window_s = 1);

// 100 * (peak - median) / peak over window counts; 0 when peak is 0.
double peak_to_median(std::span<const std::int64_t> counts);
double peak_to_median(const ArrivalTrace& trace, double window_s = 1);

// Attaches class, constraints, and a model to every arrival. Templates are
// resolved once up front; a template Paragon selection cannot satisfy is a
// ConfigError before any query is built.
std::vector<QuerySpec> assign_constraints(const ArrivalTrace& trace, const MixSpec& mix,
                                          std::span<const ModelProfile> catalog, SelectionMode mode,
                                          const CostEstimator& cost);

}  // namespace infersim
