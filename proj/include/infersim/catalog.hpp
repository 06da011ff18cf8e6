#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infersim/money.hpp"

namespace infersim {

using Ms = std::int64_t;

// Offline profile of one inference model.
struct ModelProfile {
  std::string name;
  double accuracy_pct = 0;
  Ms ref_latency_ms = 0;  // on the profiling reference VM
  int memory_mb = 0;      // minimum to host one instance
  // vm type -> concurrent queries one VM serves within ref_latency_ms
  std::map<std::string, int> vm_slots;
  // serverless memory (MB) -> execution latency; keys >= memory_mb
  std::map<int, Ms> serverless_latency_ms;

  bool operator==(const ModelProfile&) const = default;
};

// Two of the three are required; selection optimizes whichever is left.
struct ConstraintSet {
  std::optional<double> accuracy_min_pct;
  std::optional<Ms> latency_max_ms;
  std::optional<Money> cost_budget;  // per million queries

  int present_count() const {
    return accuracy_min_pct.has_value() + latency_max_ms.has_value() + cost_budget.has_value();
  }
  void validate() const;
  bool operator==(const ConstraintSet&) const = default;
};

enum class DeploymentHint { kVm, kServerless, kEither };

struct ModelChoice {
  std::optional<std::string> model_name;
  DeploymentHint deployment_hint = DeploymentHint::kEither;
  Money estimated_cost_per_1M;
  bool satisfied = false;

  bool operator==(const ModelChoice&) const = default;
};

std::string to_string(DeploymentHint h);

// Cost of serving one million queries with a given model. Injected so the
// catalog stays independent of pricing.
using CostFn = std::function<Money(const ModelProfile&)>;

// Cost estimate plus the cheaper deployment route, for richer choices.
struct CostEstimate {
  Money cost_per_1M;
  DeploymentHint hint = DeploymentHint::kEither;
};
using CostEstimator = std::function<CostEstimate(const ModelProfile&)>;

using Catalog = std::vector<ModelProfile>;

// Throws ValidationError on a broken profile (non-monotone latency table,
// slots < 1, non-positive latency, serverless keys below memory_mb).
void validate_profile(const ModelProfile& m);

Catalog load_catalog(const std::string& path);
Catalog catalog_from_json(const nlohmann::json& j);
nlohmann::ordered_json catalog_to_json(std::span<const ModelProfile> catalog);
const ModelProfile& find_model(std::span<const ModelProfile> catalog, const std::string& name);

bool meets(const ModelProfile& m, const ConstraintSet& c, std::optional<Money> cost);

// Profiles passing the accuracy and latency constraints, catalog order kept.
std::vector<ModelProfile> feasible_models(std::span<const ModelProfile> catalog, const ConstraintSet& c);

// Cost-optimal selection among feasible models; ties on latency then name.
// When a constraint pair other than (accuracy, latency) is given, optimizes
// the missing dimension instead: latency for (accuracy, cost), accuracy for
// (latency, cost).
ModelChoice select_model_paragon(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                                 const CostEstimator& cost);
ModelChoice select_model_paragon(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                                 const CostFn& cost_fn);

// Constraint-oblivious baseline: global accuracy argmax (ties by name).
ModelChoice select_model_naive(std::span<const ModelProfile> catalog, const ConstraintSet& c,
                               const CostEstimator& cost);
ModelChoice select_model_naive(std::span<const ModelProfile> catalog, const ConstraintSet& c);

}  // namespace infersim
