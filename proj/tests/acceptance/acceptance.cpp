// Acceptance scenarios S1-S7 and property suites P1-P4. Prints one PASS/FAIL
// line per criterion and exits non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "infersim/experiment.hpp"
#include "testing.hpp"

using namespace infersim;
using namespace infersim::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances as pinned by the acceptance contract.
constexpr double kS1MaxSeconds = 30.0;
constexpr double kS2OprLo = 1.05, kS2OprHi = 1.60;
constexpr double kS2ViolationFactor = 0.80;
constexpr double kS2TargetBandLo = 1.20, kS2TargetBandHi = 1.30;
constexpr double kBurstyMinP2m = 50.0;
constexpr double kS3ViolationFactor = 0.60;
constexpr double kS3CostLo = 0.90, kS3CostHi = 1.15;
constexpr double kS4CostFactor = 0.97;
constexpr double kS4ViolationSlackPp = 1.0;
constexpr double kS5MaxP2m = 30.0;
constexpr double kS5CostFactor = 0.98;
constexpr double kS6MinGap = 0.10;
constexpr int kP2Cases = 100;
constexpr int kP3Cases = 1000;

int failures = 0;
std::int64_t p1_checked = 0, p1_failed = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void p1_check(const MetricsReport& r, const RateCard& card) {
  ++p1_checked;
  if (!replay_verify(r, card)) ++p1_failed;
}

fs::path experiment(const char* name) { return fs::path(data_path("experiments")) / name; }

ExperimentResult run_config(const char* name, ExperimentConfig* out = nullptr) {
  ExperimentConfig c = load_experiment(experiment(name));
  ExperimentResult res = run_experiment(c, 0, false);
  for (const auto& r : res.reports) p1_check(r, c.card);
  if (out) *out = std::move(c);
  return res;
}

const MetricsReport& by_policy(const ExperimentResult& res, const std::string& label) {
  for (const auto& r : res.reports) {
    if (r.policy.label() == label) return r;
  }
  throw std::runtime_error("no report for " + label);
}

void s1() {
  const auto t0 = std::chrono::steady_clock::now();
  const RateCard& card = default_card();
  const Catalog& catalog = fixture_catalog();
  bool ok = true;
  std::ostringstream cells;
  int cheaper = 0;
  for (std::size_t mi = 0; mi < 4; ++mi) {
    const ModelProfile& m = catalog[mi];
    const int slots = vm_capacity("m4.large", m, card, "m4.large");
    for (double rate : {10.0, 50.0, 100.0, 200.0}) {
      const ArrivalTrace t = gen_constant(rate, 3600, Jitter::kNone, 0);
      const auto qs = uniform_queries(t, m.name, 5000);

      PolicySpec vm_policy;
      vm_policy.kind = PolicyKind::kReactive;
      SimOptions vm_opt;
      vm_opt.autoscale = false;
      vm_opt.initial_vms = required_vms(rate, m.ref_latency_ms, slots);
      const MetricsReport vm = run(t, qs, vm_policy, card, std::span(&m, 1), 1, vm_opt);

      PolicySpec sl_policy;
      sl_policy.kind = PolicyKind::kMixed;
      SimOptions sl_opt;
      sl_opt.autoscale = false;
      sl_opt.initial_vms = 0;
      const MetricsReport sl = run(t, qs, sl_policy, card, std::span(&m, 1), 1, sl_opt);

      p1_check(vm, card);
      p1_check(sl, card);
      const bool cell = vm.total_cost < sl.total_cost && vm.serverless_invocations == 0 &&
                        sl.serverless_invocations == sl.total_requests;
      ok &= cell;
      cheaper += cell;
      if (!cell) cells << " " << m.name << "@" << rate << ":vm=" << vm.total_cost.to_fixed(4) << ",sl=" << sl.total_cost.to_fixed(4);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report("S1", ok && secs < kS1MaxSeconds,
         fmt("VM cheaper in %d/16 cells, %.1f s (limit %.0f s)%s", cheaper, secs, kS1MaxSeconds, cells.str().c_str()));
}

void s2_s5(const ExperimentResult& bursty, double bursty_p2m) {
  const ComparisonTable& t = bursty.table;
  const double base_viol = t.row("reactive").slo_violation_pct;

  bool ok = bursty_p2m >= kBurstyMinP2m;
  std::string detail = fmt("p2m %.1f;", bursty_p2m);
  for (const char* p : {"util_aware", "exascale"}) {
    const ComparisonRow& r = t.row(p);
    const bool in_band = r.over_provision_ratio >= kS2OprLo && r.over_provision_ratio <= kS2OprHi;
    const bool fewer = r.slo_violation_pct <= kS2ViolationFactor * base_viol;
    ok &= in_band && fewer;
    detail += fmt(" %s opr %.3f viol %.2f%%;", p, r.over_provision_ratio, r.slo_violation_pct);
  }
  std::string band_hit;
  for (const auto& r : t.rows) {
    const bool family = r.policy.rfind("util_aware", 0) == 0 || r.policy.rfind("exascale", 0) == 0;
    if (family && r.over_provision_ratio >= kS2TargetBandLo && r.over_provision_ratio <= kS2TargetBandHi) {
      band_hit += (band_hit.empty() ? "" : ",") + r.policy;
    }
  }
  ok &= !band_hit.empty();
  detail += fmt(" reactive viol %.2f%%; in [%.2f,%.2f]: %s", base_viol, kS2TargetBandLo, kS2TargetBandHi,
                band_hit.empty() ? "none" : band_hit.c_str());
  report("S2", ok, detail);

  const ComparisonRow& mixed = t.row("mixed");
  const bool s3 = mixed.slo_violation_pct <= kS3ViolationFactor * base_viol && mixed.normalized_cost >= kS3CostLo &&
                  mixed.normalized_cost <= kS3CostHi;
  report("S3", s3,
         fmt("mixed viol %.2f%% vs reactive %.2f%% (limit x%.2f), cost x%.3f (band [%.2f,%.2f])",
             mixed.slo_violation_pct, base_viol, kS3ViolationFactor, mixed.normalized_cost, kS3CostLo, kS3CostHi));

  const MetricsReport& pm = by_policy(bursty, "paragon");
  const MetricsReport& mm = by_policy(bursty, "mixed");
  const double cost_ratio = pm.total_cost.to_double() / mm.total_cost.to_double();
  const bool s4 = pm.total_cost.to_double() <= kS4CostFactor * mm.total_cost.to_double() &&
                  pm.slo_violation_pct <= mm.slo_violation_pct + kS4ViolationSlackPp;
  report("S4", s4,
         fmt("paragon/mixed cost %.3f (limit %.2f), viol %.2f%% vs %.2f%% (+%.1f pp)", cost_ratio, kS4CostFactor,
             pm.slo_violation_pct, mm.slo_violation_pct, kS4ViolationSlackPp));

  ExperimentConfig low_cfg;
  const ExperimentResult low = run_config("lowburst_workload1.json", &low_cfg);
  const double low_p2m = peak_to_median(low_cfg.trace.build(low_cfg.seed));
  const double low_cost = low.table.row("mixed").normalized_cost;
  report("S5", low_p2m < kS5MaxP2m && low_cost >= kS5CostFactor && s3,
         fmt("low-burst p2m %.1f (< %.0f), mixed cost x%.3f (>= %.2f); bursty side is S3 (%s)", low_p2m, kS5MaxP2m,
             low_cost, kS5CostFactor, s3 ? "pass" : "fail"));
}

void s6() {
  const ExperimentResult par = run_config("workload2_paragon.json");
  const ExperimentResult nav = run_config("workload2_naive.json");
  bool ok = true;
  std::string detail;
  for (const auto& r : par.reports) {
    const MetricsReport& n = by_policy(nav, r.policy.label());
    ok &= r.total_cost < n.total_cost;
    const double gap = 1.0 - r.total_cost.to_double() / n.total_cost.to_double();
    detail += fmt("%s %s vs %s (gap %.1f%%); ", r.policy.label().c_str(), r.total_cost.to_fixed(4).c_str(),
                  n.total_cost.to_fixed(4).c_str(), 100 * gap);
  }
  const double gap = 1.0 - by_policy(par, "paragon").total_cost.to_double() / by_policy(nav, "paragon").total_cost.to_double();
  ok &= gap >= kS6MinGap;
  report("S6", ok, detail + fmt("fixture gap needs >= %.0f%% under the paragon policy", 100 * kS6MinGap));
}

void s7() {
  const RateCard& card = default_card();
  bool ok = true;
  std::string detail;
  for (const auto& m : fixture_catalog()) {
    Ms prev_lat = 0;
    Money prev_cost;
    bool first = true, saturated = false;
    for (int mem : serverless_memory_options(m, card)) {
      const Ms lat = serverless_exec_latency(m, mem, card);
      const Money cost = serverless_invocation_cost(lat, mem, card);
      if (!first) {
        if (lat > prev_lat || cost < prev_cost) {
          ok = false;
          detail += fmt("%s@%d breaks shape; ", m.name.c_str(), mem);
        }
        if (lat == prev_lat) {
          saturated = true;
          if (!(cost > prev_cost)) {
            ok = false;
            detail += fmt("%s@%d flat cost past saturation; ", m.name.c_str(), mem);
          }
        }
      }
      first = false;
      prev_lat = lat;
      prev_cost = cost;
    }
    if (m.name == "squeezenet") {
      const bool flat = serverless_exec_latency(m, 2048, card) == serverless_exec_latency(m, 3008, card);
      ok &= saturated && flat;
      detail += fmt("squeezenet saturates at 2048 MB: %s; ", flat ? "yes" : "no");
    }
  }
  report("S7", ok, detail + fmt("%zu models swept", fixture_catalog().size()));
}

void p1() {
  report("P1", p1_checked > 0 && p1_failed == 0,
         fmt("replay_verify on %lld reports from S1-S6, %lld mismatches", static_cast<long long>(p1_checked),
             static_cast<long long>(p1_failed)));
}

void p2() {
  int bad = 0;
  std::string first_bad;
  for (int i = 1; i <= kP2Cases; ++i) {
    const SimCase sc = random_sim_case(static_cast<std::uint64_t>(i));
    std::string why;
    try {
      const MetricsReport r = run_case(sc);  // check_invariants guards slot accounting
      std::size_t served = 0;
      for (const auto& q : r.requests) served += q.finish_ms >= q.start_ms && q.start_ms >= q.arrival_ms;
      if (r.total_requests != static_cast<std::int64_t>(sc.trace.arrivals_ms.size()) ||
          served != sc.trace.arrivals_ms.size()) {
        why = "conservation";
      } else if (report_to_json(r, sc.card).dump() != report_to_json(run_case(sc), sc.card).dump()) {
        why = "rerun differs";
      }
    } catch (const std::exception& e) {
      why = e.what();
    }
    if (!why.empty()) {
      ++bad;
      if (first_bad.empty()) first_bad = fmt(" first: case %d (%s)", i, why.c_str());
    }
  }
  report("P2", bad == 0, fmt("%d/%d randomized configs conserve and rerun byte-identically%s", kP2Cases - bad, kP2Cases,
                             first_bad.c_str()));
}

void p3() {
  std::mt19937_64 rng(20240601);
  int agree = 0;
  for (int i = 0; i < kP3Cases; ++i) {
    const SelectionCase sc = random_selection_case(rng);
    std::map<std::string, Money> by_name;
    for (std::size_t k = 0; k < sc.catalog.size(); ++k) by_name[sc.catalog[k].name] = sc.costs[k];
    const ModelChoice ch =
        select_model_paragon(sc.catalog, sc.constraints, [&](const ModelProfile& m) { return by_name.at(m.name); });
    agree += ch.model_name == brute_force_select(sc.catalog, sc.constraints, sc.costs);
  }
  report("P3", agree == kP3Cases, fmt("%d/%d instances match exhaustive search", agree, kP3Cases));
}

void p4() {
  const RateCard& card = default_card();
  struct Check {
    const char* what;
    std::function<Money()> got;
    const char* want;
  };
  const std::vector<Check> checks = {
      {"vm_cost 3600 s", [&] { return vm_cost(3'600'000, "m4.large", card); }, "0.096000000"},
      {"3 VMs x 3600 s", [&] { return vm_cost(3'600'000, "m4.large", card) * 3; }, "0.288000000"},
      {"vm_cost 0 s", [&] { return vm_cost(0, "m4.large", card); }, "0.000000000"},
      {"1M x 200 ms @1024",
       [&] {
         Money sum;
         const Money one = serverless_invocation_cost(200, 1024, card);
         for (int i = 0; i < 1'000'000; ++i) sum += one;
         return sum;
       },
       "3.533340000"},
      {"1 ms billed as 100 ms",
       [&] { return serverless_invocation_cost(1, 1024, card) - serverless_invocation_cost(100, 1024, card); },
       "0.000000000"},
  };
  int ok = 0;
  std::string detail;
  for (const auto& c : checks) {
    const std::string got = c.got().to_fixed(9);
    if (got == c.want) {
      ++ok;
    } else {
      detail += fmt(" %s: %s != %s;", c.what, got.c_str(), c.want);
    }
  }
  report("P4", ok == static_cast<int>(checks.size()),
         fmt("%d/%zu billing values at 9 dp%s", ok, checks.size(), detail.c_str()));
}

}  // namespace

int main() {
  s1();
  ExperimentConfig bursty_cfg;
  const ExperimentResult bursty = run_config("bursty_workload1.json", &bursty_cfg);
  s2_s5(bursty, peak_to_median(bursty_cfg.trace.build(bursty_cfg.seed)));
  s6();
  s7();
  p1();
  p2();
  p3();
  p4();
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
