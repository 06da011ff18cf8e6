#pragma once

// Shared fixtures for the unit, property and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "infersim/catalog.hpp"
#include "infersim/cloudmodel.hpp"
#include "infersim/policies.hpp"
#include "infersim/simengine.hpp"
#include "infersim/workload.hpp"

#ifndef INFERSIM_DATA_DIR
#define INFERSIM_DATA_DIR "data"
#endif

namespace infersim::testing {

inline std::string data_path(const std::string& rel) { return std::string(INFERSIM_DATA_DIR) + "/" + rel; }

inline const RateCard& default_card() {
  static const RateCard card = load_rate_card(data_path("rate_card.json"));
  return card;
}

inline const Catalog& fixture_catalog() {
  static const Catalog catalog = load_catalog(data_path("catalog.json"));
  return catalog;
}

inline ModelProfile make_model(std::string name, double acc, Ms latency, int memory_mb = 512, int slots = 4) {
  ModelProfile m;
  m.name = std::move(name);
  m.accuracy_pct = acc;
  m.ref_latency_ms = latency;
  m.memory_mb = memory_mb;
  m.vm_slots["m4.large"] = slots;
  for (int mem : {512, 1024, 1536, 2048, 2560, 3008}) {
    if (mem >= memory_mb) m.serverless_latency_ms[mem] = latency;
  }
  return m;
}

// A:(70,100ms) B:(80,300ms) C:(90,700ms)
inline Catalog abc_catalog() {
  return {make_model("A", 70, 100), make_model("B", 80, 300), make_model("C", 90, 700)};
}

inline ConstraintSet acc_lat(double acc, Ms lat) {
  ConstraintSet c;
  c.accuracy_min_pct = acc;
  c.latency_max_ms = lat;
  return c;
}

inline std::vector<QuerySpec> uniform_queries(const ArrivalTrace& trace, const std::string& model, Ms budget,
                                              SloClass cls = SloClass::kRelaxed) {
  std::vector<QuerySpec> qs;
  qs.reserve(trace.arrivals_ms.size());
  for (std::size_t i = 0; i < trace.arrivals_ms.size(); ++i) {
    QuerySpec q;
    q.id = static_cast<std::uint32_t>(i);
    q.arrival_ms = trace.arrivals_ms[i];
    q.slo_class = cls;
    q.constraints.latency_max_ms = budget;
    q.constraints.accuracy_min_pct = 0;
    q.model_name = model;
    qs.push_back(q);
  }
  return qs;
}

// Exhaustive argmin matching select_model_paragon's contract: filter every
// present constraint, minimize the missing dimension, break ties by cost,
// then latency, then name.
inline std::optional<std::string> brute_force_select(const Catalog& catalog, const ConstraintSet& c,
                                                     const std::vector<Money>& costs) {
  std::optional<std::size_t> best;
  auto key = [&](std::size_t i) {
    const ModelProfile& m = catalog[i];
    double primary = 0;
    if (!c.latency_max_ms) primary = static_cast<double>(m.ref_latency_ms);
    else if (!c.accuracy_min_pct) primary = -m.accuracy_pct;
    return std::make_tuple(primary, costs[i], m.ref_latency_ms, m.name);
  };
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const ModelProfile& m = catalog[i];
    if (c.accuracy_min_pct && m.accuracy_pct < *c.accuracy_min_pct) continue;
    if (c.latency_max_ms && m.ref_latency_ms > *c.latency_max_ms) continue;
    if (c.cost_budget && costs[i] > *c.cost_budget) continue;
    if (!best || key(i) < key(*best)) best = i;
  }
  if (!best) return std::nullopt;
  return catalog[*best].name;
}

struct SelectionCase {
  Catalog catalog;
  std::vector<Money> costs;
  ConstraintSet constraints;
};

inline SelectionCase random_selection_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_models(1, 20);
  std::uniform_int_distribution<int> acc_pick(50, 95);
  std::uniform_int_distribution<int> lat_pick(1, 10);
  std::uniform_int_distribution<int> cost_pick(1, 8);
  SelectionCase sc;
  const int n = n_models(rng);
  for (int i = 0; i < n; ++i) {
    // Small value ranges so ties on every key happen often.
    sc.catalog.push_back(make_model("m" + std::to_string(i), acc_pick(rng), 100 * lat_pick(rng)));
    sc.costs.push_back(Money::from_units(cost_pick(rng)));
  }
  std::shuffle(sc.catalog.begin(), sc.catalog.end(), rng);
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0:
    case 1:
      sc.constraints = acc_lat(acc_pick(rng), 100 * lat_pick(rng));
      break;
    case 2:
      sc.constraints = acc_lat(acc_pick(rng), 100 * lat_pick(rng));
      sc.constraints.cost_budget = Money::from_units(cost_pick(rng));
      break;
    case 3:
      sc.constraints.accuracy_min_pct = acc_pick(rng);
      sc.constraints.cost_budget = Money::from_units(cost_pick(rng));
      break;
    default:
      sc.constraints.latency_max_ms = 100 * lat_pick(rng);
      sc.constraints.cost_budget = Money::from_units(cost_pick(rng));
      break;
  }
  return sc;
}

// Small randomized simulation for the conservation/determinism properties.
struct SimCase {
  RateCard card;
  Catalog catalog;
  ArrivalTrace trace;
  std::vector<QuerySpec> queries;
  PolicySpec policy;
  SimOptions options;
  std::uint64_t seed = 0;
};

inline SimCase random_sim_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SimCase sc;
  sc.seed = seed;
  sc.card = default_card();
  for (auto& [name, vm] : sc.card.vm_types) vm.provision_delay_s = pick(1, 60);
  sc.card.serverless.keep_alive_s = pick(1, 120);
  sc.card.vm_bill_from_launch = pick(0, 1) == 1;

  const int n_models = pick(1, 3);
  for (int i = 0; i < n_models; ++i) {
    const int mem = pick(0, 1) == 0 ? 512 : 1024;
    ModelProfile m = make_model("model" + std::to_string(i), uni(50, 95), pick(20, 600), mem, pick(1, 6));
    Ms lat = m.ref_latency_ms * 2;
    for (auto& [k, v] : m.serverless_latency_ms) {
      v = lat;
      lat = std::max<Ms>(1, lat - pick(0, 100));
    }
    sc.catalog.push_back(m);
  }

  const double duration = pick(20, 120);
  const double base = uni(0.5, 15);
  const double peak = base + uni(0, 30);
  const double start = std::floor(uni(0, duration / 2));
  const double len = std::floor(uni(1, duration - start));
  sc.trace = gen_burst(base, peak, start, len, duration, pick(0, 1) ? Jitter::kPoisson : Jitter::kNone, seed);

  const double strict_fraction = uni(0, 1);
  for (std::size_t i = 0; i < sc.trace.arrivals_ms.size(); ++i) {
    QuerySpec q;
    q.id = static_cast<std::uint32_t>(i);
    q.arrival_ms = sc.trace.arrivals_ms[i];
    q.slo_class = uni(0, 1) < strict_fraction ? SloClass::kStrict : SloClass::kRelaxed;
    q.constraints.accuracy_min_pct = 0;
    q.constraints.latency_max_ms = q.slo_class == SloClass::kStrict ? pick(50, 1500) : pick(2000, 8000);
    q.model_name = sc.catalog[static_cast<std::size_t>(pick(0, n_models - 1))].name;
    sc.queries.push_back(q);
  }

  sc.policy.kind = static_cast<PolicyKind>(pick(0, 4));
  sc.policy.theta = uni(0.3, 1.0);
  sc.policy.beta = uni(0, 0.6);
  sc.policy.tick_interval_s = pick(1, 15);
  sc.policy.idle_timeout_s = pick(1, 60);
  sc.policy.predictor_window_s = pick(5, 60);
  sc.policy.p2m_window_s = pick(10, 300);
  sc.policy.strict_priority = pick(0, 3) != 0;

  sc.options.initial_vms = pick(0, 2);
  sc.options.autoscale = pick(0, 5) != 0;
  // Without autoscaling the queue drains only through a fixed fleet.
  if (!sc.options.autoscale) sc.options.initial_vms = std::max(1, sc.options.initial_vms);
  sc.options.check_invariants = true;
  return sc;
}

inline MetricsReport run_case(const SimCase& sc) {
  return run(sc.trace, sc.queries, sc.policy, sc.card, sc.catalog, sc.seed, sc.options);
}

}  // namespace infersim::testing
