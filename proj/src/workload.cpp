#include "infersim/workload.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "infersim/errors.hpp"
#include "infersim/hash.hpp"

namespace infersim {

using nlohmann::json;

namespace {

// Uniform double in [0, 1) from the top 53 bits; mt19937_64 output is fixed by
// the standard, so traces are reproducible across toolchains.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Ms horizon_for_last(Ms last_ms) { return (last_ms + 1 + 999) / 1000 * 1000; }

}  // namespace

void ArrivalTrace::validate() const {
  if (duration_ms < 0) throw ValidationError("trace duration must be non-negative");
  for (std::size_t i = 0; i < arrivals_ms.size(); ++i) {
    if (arrivals_ms[i] < 0 || arrivals_ms[i] >= duration_ms) {
      throw ValidationError("arrival " + std::to_string(i) + " outside [0, duration)");
    }
    if (i > 0 && arrivals_ms[i] < arrivals_ms[i - 1]) throw ValidationError("arrivals must be non-decreasing");
  }
}

std::string ArrivalTrace::hash() const {
  Fnv1a h;
  h.update_i64(duration_ms);
  h.update_i64(static_cast<std::int64_t>(arrivals_ms.size()));
  for (Ms t : arrivals_ms) h.update_i64(t);
  return h.hex();
}

Jitter jitter_from_string(const std::string& s) {
  if (s == "none") return Jitter::kNone;
  if (s == "poisson") return Jitter::kPoisson;
  throw ValidationError("unknown jitter '" + s + "' (expected none|poisson)");
}

std::string to_string(SloClass c) { return c == SloClass::kStrict ? "strict" : "relaxed"; }

SelectionMode selection_mode_from_string(const std::string& s) {
  if (s == "naive") return SelectionMode::kNaive;
  if (s == "paragon") return SelectionMode::kParagon;
  throw ValidationError("unknown selection mode '" + s + "' (expected naive|paragon)");
}

std::string to_string(SelectionMode m) { return m == SelectionMode::kNaive ? "naive" : "paragon"; }

ArrivalTrace parse_trace_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool rate_format = false;
  bool first = true;
  std::vector<Ms> arrivals;
  Ms horizon = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (first) {
      first = false;
      if (std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isalpha(c); })) {
        std::string header;
        for (char c : t) {
          if (!std::isspace(static_cast<unsigned char>(c))) header.push_back(c);
        }
        if (header != "sec,count") throw ParseError("unrecognized trace header '" + t + "'", line_no);
        rate_format = true;
        continue;
      }
    }
    if (rate_format) {
      const auto comma = t.find(',');
      if (comma == std::string::npos) throw ParseError("expected 'second_index,count'", line_no);
      long long sec = 0;
      long long count = 0;
      try {
        std::size_t used = 0;
        const std::string a = trim(t.substr(0, comma));
        const std::string b = trim(t.substr(comma + 1));
        sec = std::stoll(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        count = std::stoll(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
      } catch (const std::logic_error&) {
        throw ParseError("malformed rate line '" + t + "'", line_no);
      }
      if (sec < 0 || count < 0) throw ValidationError("negative value on trace line " + std::to_string(line_no));
      for (long long j = 0; j < count; ++j) arrivals.push_back(sec * 1000 + j * 1000 / count);
      horizon = std::max<Ms>(horizon, (sec + 1) * 1000);
    } else {
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::logic_error&) {
        throw ParseError("malformed timestamp '" + t + "'", line_no);
      }
      if (!std::isfinite(v)) throw ParseError("malformed timestamp '" + t + "'", line_no);
      if (v < 0) throw ValidationError("negative timestamp on trace line " + std::to_string(line_no));
      arrivals.push_back(static_cast<Ms>(std::floor(v)));
    }
  }
  if (arrivals.empty()) throw ValidationError("trace contains no arrivals");
  std::sort(arrivals.begin(), arrivals.end());
  ArrivalTrace trace;
  trace.duration_ms = std::max(horizon, horizon_for_last(arrivals.back()));
  trace.arrivals_ms = std::move(arrivals);
  return trace;
}

ArrivalTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file: " + path);
  return parse_trace_csv(in);
}

void write_trace_csv(const ArrivalTrace& trace, std::ostream& out) {
  for (Ms t : trace.arrivals_ms) out << t << '\n';
}

ArrivalTrace gen_piecewise(std::span<const RateSegment> segments, double duration_s, Jitter jitter,
                           std::uint64_t seed) {
  if (!(duration_s > 0)) throw ValidationError("duration must be positive");
  if (segments.empty() || segments.front().start_s != 0) throw ValidationError("first rate segment must start at 0");

  // Normalize: drop segments past the horizon, merge equal neighbours so that
  // a degenerate burst reproduces the constant generator bit for bit.
  struct Seg {
    double start_s, end_s, rate, lambda_start;
  };
  std::vector<Seg> segs;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double start = segments[i].start_s;
    const double end = i + 1 < segments.size() ? segments[i + 1].start_s : duration_s;
    if (segments[i].rate_per_s < 0) throw ValidationError("rates must be non-negative");
    if (end < start) throw ValidationError("rate segments must be ordered");
    if (start >= duration_s) break;
    const double clipped_end = std::min(end, duration_s);
    if (!segs.empty() && segs.back().rate == segments[i].rate_per_s) {
      segs.back().end_s = clipped_end;
    } else {
      segs.push_back({start, clipped_end, segments[i].rate_per_s, 0});
    }
  }
  long double lambda = 0;
  for (auto& s : segs) {
    s.lambda_start = static_cast<double>(lambda);
    lambda += static_cast<long double>(s.rate) * (s.end_s - s.start_s);
  }
  const long double total = lambda;

  const Ms duration_ms = static_cast<Ms>(std::llround(duration_s * 1000));
  std::size_t seg = 0;
  // Inverse cumulative intensity, in ms. Queries arrive in increasing order.
  auto invert = [&](long double level) -> Ms {
    while (seg + 1 < segs.size() &&
           (segs[seg].rate == 0 || level >= segs[seg].lambda_start + segs[seg].rate * (segs[seg].end_s - segs[seg].start_s))) {
      ++seg;
    }
    const Seg& s = segs[seg];
    const long double ms = static_cast<long double>(s.start_s) * 1000 + (level - s.lambda_start) * 1000 / s.rate;
    return static_cast<Ms>(std::floor(ms + 1e-9L));
  };

  ArrivalTrace trace;
  trace.duration_ms = duration_ms;
  if (jitter == Jitter::kNone) {
    for (std::int64_t i = 0; i < total; ++i) {
      const Ms t = invert(i);
      if (t >= duration_ms) break;
      trace.arrivals_ms.push_back(t);
    }
  } else {
    std::mt19937_64 rng(splitmix64(seed));
    long double level = 0;
    for (;;) {
      level += -std::log1p(-uniform01(rng));
      if (level >= total) break;
      const Ms t = invert(level);
      if (t >= duration_ms) break;
      trace.arrivals_ms.push_back(t);
    }
  }
  return trace;
}

ArrivalTrace gen_constant(double rate_per_s, double duration_s, Jitter jitter, std::uint64_t seed) {
  if (!(rate_per_s > 0)) throw ValidationError("rate must be positive");
  const RateSegment seg{0, rate_per_s};
  return gen_piecewise(std::span(&seg, 1), duration_s, jitter, seed);
}

ArrivalTrace gen_burst(double base_rate, double peak_rate, double peak_start_s, double peak_len_s, double duration_s,
                       Jitter jitter, std::uint64_t seed) {
  if (!(base_rate > 0)) throw ValidationError("base rate must be positive");
  if (peak_rate < base_rate) throw ValidationError("peak rate must be >= base rate");
  if (peak_start_s < 0 || peak_len_s <= 0 || peak_start_s + peak_len_s > duration_s) {
    throw ValidationError("peak window must lie inside the trace horizon");
  }
  const std::vector<RateSegment> segs = {
      {0, base_rate}, {peak_start_s, peak_rate}, {peak_start_s + peak_len_s, base_rate}};
  return gen_piecewise(segs, duration_s, jitter, seed);
}

ArrivalTrace gen_periodic_burst(double base_rate, double peak_rate, double period_s, double peak_len_s,
                                double first_peak_s, double duration_s, Jitter jitter, std::uint64_t seed,
                                int ramp_steps, double ramp_step_s) {
  if (!(base_rate > 0)) throw ValidationError("base rate must be positive");
  if (peak_rate < base_rate) throw ValidationError("peak rate must be >= base rate");
  if (ramp_steps < 0 || ramp_step_s < 0 || (ramp_steps > 0 && !(ramp_step_s > 0))) {
    throw ValidationError("ramp needs steps >= 0 and a positive step length");
  }
  const double ramp_s = ramp_steps * ramp_step_s;
  if (!(period_s > 0) || !(peak_len_s > 0) || 2 * ramp_s + peak_len_s > period_s || first_peak_s < 0 ||
      first_peak_s >= duration_s) {
    throw ValidationError("invalid periodic burst window");
  }
  const auto level = [&](int k) { return base_rate + (peak_rate - base_rate) * k / (ramp_steps + 1); };
  std::vector<RateSegment> segs = {{0, base_rate}};
  for (double start = first_peak_s; start < duration_s; start += period_s) {
    double t = start;
    for (int k = 1; k <= ramp_steps; ++k, t += ramp_step_s) segs.push_back({t, level(k)});
    segs.push_back({t, peak_rate});
    t += peak_len_s;
    for (int k = ramp_steps; k >= 1; --k, t += ramp_step_s) segs.push_back({t, level(k)});
    segs.push_back({t, base_rate});
  }
  return gen_piecewise(segs, duration_s, jitter, seed);
}

std::vector<std::int64_t> window_counts(const ArrivalTrace& trace, double window_s) {
  if (!(window_s > 0)) throw ValidationError("window must be positive");
  const Ms window_ms = std::max<Ms>(1, static_cast<Ms>(std::llround(window_s * 1000)));
  const Ms bins = (trace.duration_ms + window_ms - 1) / window_ms;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(std::max<Ms>(bins, 0)), 0);
  for (Ms t : trace.arrivals_ms) {
    const auto b = static_cast<std::size_t>(t / window_ms);
    if (b >= counts.size()) counts.resize(b + 1, 0);
    ++counts[b];
  }
  return counts;
}

double peak_to_median(std::span<const std::int64_t> counts) {
  if (counts.empty()) return 0;
  std::vector<std::int64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                                   : (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2])) / 2;
  const double peak = static_cast<double>(sorted.back());
  if (peak == 0) return 0;
  return 100.0 * (peak - median) / peak;
}

double peak_to_median(const ArrivalTrace& trace, double window_s) {
  if (trace.arrivals_ms.empty()) throw ValidationError("peak_to_median of an empty trace");
  const auto counts = window_counts(trace, window_s);
  return peak_to_median(counts);
}

void MixSpec::validate() const {
  if (!(strict_fraction >= 0 && strict_fraction <= 1)) throw ValidationError("strict_fraction must be in [0, 1]");
  if (strict_slo_ms <= 0 || relaxed_slo_ms <= 0) throw ValidationError("SLOs must be positive");
  if (!(strict_slo_ms < relaxed_slo_ms)) throw ValidationError("strict_slo_ms must be below relaxed_slo_ms");
  double total = 0;
  for (const auto& t : templates) {
    if (!(t.weight > 0)) throw ValidationError("template weights must be positive");
    total += t.weight;
  }
  for (const auto& t : resolved_templates()) constraints_for(t).validate();
}

std::vector<ConstraintTemplate> MixSpec::resolved_templates() const {
  if (!templates.empty()) return templates;
  ConstraintTemplate strict;
  strict.slo_class = SloClass::kStrict;
  strict.weight = strict_fraction;
  strict.accuracy_min_pct = strict_accuracy_min_pct;
  strict.cost_budget = strict_cost_budget;
  ConstraintTemplate relaxed;
  relaxed.slo_class = SloClass::kRelaxed;
  relaxed.weight = 1 - strict_fraction;
  relaxed.accuracy_min_pct = relaxed_accuracy_min_pct;
  relaxed.cost_budget = relaxed_cost_budget;
  return {strict, relaxed};
}

ConstraintSet MixSpec::constraints_for(const ConstraintTemplate& t) const {
  ConstraintSet c;
  c.accuracy_min_pct = t.accuracy_min_pct;
  c.latency_max_ms = t.latency_max_ms.value_or(t.slo_class == SloClass::kStrict ? strict_slo_ms : relaxed_slo_ms);
  c.cost_budget = t.cost_budget;
  return c;
}

namespace {

template <typename J>
void put_optional(J& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}
template <typename J>
void put_optional(J& j, const char* key, const std::optional<Money>& v) {
  if (v) j[key] = v->to_string();
}

SloClass slo_class_from_string(const std::string& s) {
  if (s == "strict") return SloClass::kStrict;
  if (s == "relaxed") return SloClass::kRelaxed;
  throw ValidationError("unknown slo_class '" + s + "'");
}

}  // namespace

nlohmann::ordered_json mix_to_json(const MixSpec& mix) {
  nlohmann::ordered_json j;
  j["strict_fraction"] = mix.strict_fraction;
  j["strict_slo_ms"] = mix.strict_slo_ms;
  j["relaxed_slo_ms"] = mix.relaxed_slo_ms;
  put_optional(j, "strict_accuracy_min_pct", mix.strict_accuracy_min_pct);
  put_optional(j, "relaxed_accuracy_min_pct", mix.relaxed_accuracy_min_pct);
  put_optional(j, "strict_cost_budget", mix.strict_cost_budget);
  put_optional(j, "relaxed_cost_budget", mix.relaxed_cost_budget);
  if (!mix.templates.empty()) {
    j["templates"] = nlohmann::ordered_json::array();
    for (const auto& t : mix.templates) {
      nlohmann::ordered_json e;
      e["slo_class"] = to_string(t.slo_class);
      e["weight"] = t.weight;
      put_optional(e, "accuracy_min_pct", t.accuracy_min_pct);
      if (t.latency_max_ms) e["latency_max_ms"] = *t.latency_max_ms;
      put_optional(e, "cost_budget", t.cost_budget);
      j["templates"].push_back(std::move(e));
    }
  }
  j["rng_seed"] = mix.rng_seed;
  return j;
}

MixSpec mix_from_json(const json& j) {
  static const std::set<std::string> kKeys = {"strict_fraction",         "strict_slo_ms",        "relaxed_slo_ms",
                                              "strict_accuracy_min_pct", "relaxed_accuracy_min_pct",
                                              "strict_cost_budget",      "relaxed_cost_budget", "templates",
                                              "rng_seed"};
  if (!j.is_object()) throw ValidationError("mix must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.contains(k)) throw ValidationError("mix: unknown key '" + k + "'");
  }
  MixSpec mix;
  try {
    mix.strict_fraction = j.value("strict_fraction", mix.strict_fraction);
    mix.strict_slo_ms = j.value("strict_slo_ms", mix.strict_slo_ms);
    mix.relaxed_slo_ms = j.value("relaxed_slo_ms", mix.relaxed_slo_ms);
    if (j.contains("strict_accuracy_min_pct")) mix.strict_accuracy_min_pct = j["strict_accuracy_min_pct"].get<double>();
    if (j.contains("relaxed_accuracy_min_pct")) {
      mix.relaxed_accuracy_min_pct = j["relaxed_accuracy_min_pct"].get<double>();
    }
    if (j.contains("strict_cost_budget")) mix.strict_cost_budget = Money::from_json(j["strict_cost_budget"]);
    if (j.contains("relaxed_cost_budget")) mix.relaxed_cost_budget = Money::from_json(j["relaxed_cost_budget"]);
    if (j.contains("templates")) {
      for (const auto& e : j["templates"]) {
        for (const auto& [k, _] : e.items()) {
          if (k != "slo_class" && k != "weight" && k != "accuracy_min_pct" && k != "latency_max_ms" &&
              k != "cost_budget") {
            throw ValidationError("mix template: unknown key '" + k + "'");
          }
        }
        ConstraintTemplate t;
        t.slo_class = slo_class_from_string(e.value("slo_class", std::string("relaxed")));
        t.weight = e.value("weight", 1.0);
        if (e.contains("accuracy_min_pct")) t.accuracy_min_pct = e["accuracy_min_pct"].get<double>();
        if (e.contains("latency_max_ms")) t.latency_max_ms = e["latency_max_ms"].get<Ms>();
        if (e.contains("cost_budget")) t.cost_budget = Money::from_json(e["cost_budget"]);
        mix.templates.push_back(t);
      }
    }
    mix.rng_seed = j.value("rng_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mix: ") + e.what());
  }
  mix.validate();
  return mix;
}

std::vector<QuerySpec> assign_constraints(const ArrivalTrace& trace, const MixSpec& mix,
                                          std::span<const ModelProfile> catalog, SelectionMode mode,
                                          const CostEstimator& cost) {
  if (catalog.empty()) throw ConfigError("assign_constraints needs a non-empty catalog");
  mix.validate();
  const auto templates = mix.resolved_templates();

  struct Resolved {
    ConstraintSet constraints;
    std::string model;
  };
  std::vector<Resolved> resolved;
  std::vector<double> cumulative;
  double acc = 0;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const ConstraintSet c = mix.constraints_for(templates[i]);
    const ModelChoice choice =
        mode == SelectionMode::kParagon ? select_model_paragon(catalog, c, cost) : select_model_naive(catalog, c, cost);
    if (!choice.model_name) {
      throw ConfigError("constraint template " + std::to_string(i) + " (" + to_string(templates[i].slo_class) +
                        ") has no feasible model");
    }
    resolved.push_back({c, *choice.model_name});
    acc += templates[i].weight;
    cumulative.push_back(acc);
  }

  std::mt19937_64 rng(splitmix64(mix.rng_seed ^ 0x6d69785f73656564ULL));
  std::vector<QuerySpec> out;
  out.reserve(trace.arrivals_ms.size());
  for (std::size_t i = 0; i < trace.arrivals_ms.size(); ++i) {
    const double u = uniform01(rng) * acc;
    std::size_t pick = 0;
    while (pick + 1 < cumulative.size() && u >= cumulative[pick]) ++pick;
    // A zero-weight template is never drawn, even at the boundary.
    while (pick + 1 < cumulative.size() && templates[pick].weight == 0) ++pick;
    QuerySpec q;
    q.id = static_cast<std::uint32_t>(i);
    q.arrival_ms = trace.arrivals_ms[i];
    q.slo_class = templates[pick].slo_class;
    q.constraints = resolved[pick].constraints;
    q.model_name = resolved[pick].model;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace infersim
