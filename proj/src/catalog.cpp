#include "infersim/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "infersim/errors.hpp"

namespace infersim {

using nlohmann::json;

void ConstraintSet::validate() const {
  if (present_count() < 2) {
    throw ValidationError("constraint set needs at least two of accuracy_min_pct, latency_max_ms, cost_budget");
  }
  if (accuracy_min_pct && (*accuracy_min_pct < 0 || *accuracy_min_pct > 100)) {
    throw ValidationError("accuracy_min_pct must be within [0, 100]");
  }
  if (latency_max_ms && *latency_max_ms <= 0) throw ValidationError("latency_max_ms must be positive");
  if (cost_budget && *cost_budget < Money{}) throw ValidationError("cost_budget must be non-negative");
}

std::string to_string(DeploymentHint h) {
  switch (h) {
    case DeploymentHint::kVm: return "vm";
    case DeploymentHint::kServerless: return "serverless";
    case DeploymentHint::kEither: return "either";
  }
  return "either";
}

void validate_profile(const ModelProfile& m) {
  const std::string who = "model '" + m.name + "': ";
  if (m.name.empty()) throw ValidationError("model with empty name");
  if (!(m.accuracy_pct > 0 && m.accuracy_pct <= 100)) throw ValidationError(who + "accuracy_pct must be in (0, 100]");
  if (m.ref_latency_ms <= 0) throw ValidationError(who + "ref_latency_ms must be positive");
  if (m.memory_mb <= 0) throw ValidationError(who + "memory_mb must be positive");
  if (m.vm_slots.empty()) throw ValidationError(who + "vm_slots is empty");
  for (const auto& [type, slots] : m.vm_slots) {
    if (slots < 1) throw ValidationError(who + "vm_slots for " + type + " must be >= 1");
  }
  Ms prev = 0;
  bool first = true;
  for (const auto& [mem, lat] : m.serverless_latency_ms) {
    if (mem < m.memory_mb) {
      throw ValidationError(who + "serverless latency given for " + std::to_string(mem) + " MB, below memory_mb");
    }
    if (lat <= 0) throw ValidationError(who + "serverless latency must be positive");
    if (!first && lat > prev) {
      throw ValidationError(who + "serverless latency must be non-increasing in memory (at " + std::to_string(mem) +
                            " MB)");
    }
    prev = lat;
    first = false;
  }
}

namespace {

const std::set<std::string> kProfileKeys = {"name",      "accuracy_pct", "ref_latency_ms",
                                            "memory_mb", "vm_slots",     "serverless_latency_ms"};

ModelProfile profile_from_json(const json& j, std::size_t index) {
  const std::string where = "catalog entry " + std::to_string(index);
  if (!j.is_object()) throw ValidationError(where + " is not an object");
  for (const auto& [key, _] : j.items()) {
    if (!kProfileKeys.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
  for (const auto& key : kProfileKeys) {
    if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  }
  ModelProfile m;
  try {
    m.name = j.at("name").get<std::string>();
    m.accuracy_pct = j.at("accuracy_pct").get<double>();
    m.ref_latency_ms = j.at("ref_latency_ms").get<Ms>();
    m.memory_mb = j.at("memory_mb").get<int>();
    for (const auto& [type, slots] : j.at("vm_slots").items()) m.vm_slots[type] = slots.get<int>();
    for (const auto& [mem, lat] : j.at("serverless_latency_ms").items()) {
      m.serverless_latency_ms[std::stoi(mem)] = lat.get<Ms>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw ValidationError(where + ": serverless_latency_ms keys must be integer MB");
  }
  validate_profile(m);
  return m;
}

}  // namespace

Catalog catalog_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("catalog must be a top-level list");
  if (j.empty()) throw ValidationError("catalog is empty");
  Catalog out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(profile_from_json(j[i], i));
    if (!names.insert(out.back().name).second) throw ValidationError("duplicate model name '" + out.back().name + "'");
  }
  return out;
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open catalog file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("catalog " + path + ": " + e.what(), 0);
  }
  return catalog_from_json(j);
}

nlohmann::ordered_json catalog_to_json(std::span<const ModelProfile> catalog) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& m : catalog) {
    nlohmann::ordered_json e;
    e["name"] = m.name;
    e["accuracy_pct"] = m.accuracy_pct;
    e["ref_latency_ms"] = m.ref_latency_ms;
    e["memory_mb"] = m.memory_mb;
    e["vm_slots"] = nlohmann::ordered_json::object();
    for (const auto& [t, s] : m.vm_slots) e["vm_slots"][t] = s;
    e["serverless_latency_ms"] = nlohmann::ordered_json::object();
    for (const auto& [mem, lat] : m.serverless_latency_ms) e["serverless_latency_ms"][std::to_string(mem)] = lat;
    out.push_back(std::move(e));
  }
  return out;
}

const ModelProfile& find_model(std::span<const ModelProfile> catalog, const std::string& name) {
  for (const auto& m : catalog) {
    if (m.name == name) return m;
  }
  throw ConfigError("unknown model '" + name + "'");
}

bool meets(const ModelProfile& m, const ConstraintSet& c, std::optional<Money> cost) {
  if (c.accuracy_min_pct && m.accuracy_pct < *c.accuracy_min_pct) return false;
  if (c.latency_max_ms && m.ref_latency_ms > *c.latency_max_ms) return false;
  if (c.cost_budget && cost && *cost > *c.cost_budget) return false;
  return true;
}

std::vector<ModelProfile> feasible_models(std::span<const ModelProfile> catalog, const ConstraintSet& c) {
  std::vector<ModelProfile> out;
  for (const auto& m : catalog) {
    if (meets(m, c, std::nullopt)) out.push_back(m);
  }
  return out;
}

ModelChoice select_model_paragon(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                                 const CostEstimator& cost) {
  if (catalog.empty()) throw ConfigError("model selection over an empty catalog");
  c.validate();

  enum class Objective { kCost, kLatency, kAccuracy };
  Objective objective = Objective::kCost;
  if (!c.latency_max_ms) objective = Objective::kLatency;
  else if (!c.accuracy_min_pct) objective = Objective::kAccuracy;

  const ModelProfile* best = nullptr;
  CostEstimate best_cost;
  // Lexicographic key, smaller is better.
  auto key = [&](const ModelProfile& m, const CostEstimate& e) {
    switch (objective) {
      case Objective::kLatency:
        return std::make_tuple(static_cast<double>(m.ref_latency_ms), e.cost_per_1M, 0.0, m.name);
      case Objective::kAccuracy:
        return std::make_tuple(-m.accuracy_pct, e.cost_per_1M, static_cast<double>(m.ref_latency_ms), m.name);
      case Objective::kCost:
        break;
    }
    return std::make_tuple(0.0, e.cost_per_1M, static_cast<double>(m.ref_latency_ms), m.name);
  };
  for (const auto& m : catalog) {
    const CostEstimate e = cost(m);
    if (!meets(m, c, e.cost_per_1M)) continue;
    if (best == nullptr || key(m, e) < key(*best, best_cost)) {
      best = &m;
      best_cost = e;
    }
  }
  ModelChoice choice;
  if (best == nullptr) return choice;
  choice.model_name = best->name;
  choice.deployment_hint = best_cost.hint;
  choice.estimated_cost_per_1M = best_cost.cost_per_1M;
  choice.satisfied = true;
  return choice;
}

ModelChoice select_model_paragon(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                                 const CostFn& cost_fn) {
  return select_model_paragon(catalog, c, [&](const ModelProfile& m) { return CostEstimate{cost_fn(m)}; });
}

ModelChoice select_model_naive(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                               const CostEstimator& cost) {
  if (catalog.empty()) throw ConfigError("model selection over an empty catalog");
  const ModelProfile* best = &catalog.front();
  for (const auto& m : catalog) {
    if (m.accuracy_pct > best->accuracy_pct || (m.accuracy_pct == best->accuracy_pct && m.name < best->name)) {
      best = &m;
    }
  }
  ModelChoice choice;
  choice.model_name = best->name;
  if (cost) {
    const CostEstimate e = cost(*best);
    choice.estimated_cost_per_1M = e.cost_per_1M;
    choice.deployment_hint = e.hint;
    choice.satisfied = meets(*best, c, e.cost_per_1M);
  } else {
    choice.satisfied = meets(*best, c, std::nullopt);
  }
  return choice;
}

ModelChoice select_model_naive(std::span<const ModelProfile> catalog, const ConstraintSet& c) {
  return select_model_naive(catalog, c, CostEstimator{});
}

}  // namespace infersim
