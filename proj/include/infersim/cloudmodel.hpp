#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "infersim/catalog.hpp"
#include "infersim/money.hpp"

namespace infersim {

struct VmTypeRate {
  Money hourly_price;
  std::int64_t provision_delay_s = 0;
  double compute_units = 1;
};

struct ServerlessRates {
  Money per_invocation_fee;
  Money gb_second_rate;
  Ms billing_quantum_ms = 100;
  Ms cold_start_ms = 1000;
  Ms model_load_ms = 2000;
  std::int64_t keep_alive_s = 600;
  std::vector<int> memory_tiers_mb;
  std::vector<double> tier_speed_factors;  // >= 1, slowdown vs the fastest tier
  // Model load runs inside the function and is billed; container init is not.
  bool bill_cold_start = false;
  bool bill_model_load = true;
};

// Every price and timing constant of the simulated cloud. Loaded from a file;
// there are no built-in prices.
struct RateCard {
  std::map<std::string, VmTypeRate> vm_types;
  ServerlessRates serverless;
  std::int64_t billing_granularity_s = 1;
  bool vm_bill_from_launch = true;

  void validate() const;
  const VmTypeRate& vm(const std::string& type) const;
};

RateCard load_rate_card(const std::string& path);
RateCard rate_card_from_json(const nlohmann::json& j);
nlohmann::ordered_json rate_card_to_json(const RateCard& card);

// Slots one VM of vm_type offers for model. Falls back to linear scaling from
// the reference type by compute units, floored, minimum 1.
int vm_capacity(const std::string& vm_type, const ModelProfile& model, const RateCard& card,
                const std::string& reference_vm_type);

// ceil(billed / granularity) * granularity * hourly / 3600.
Money vm_cost(Ms billed_ms, const std::string& vm_type, const RateCard& card);

// Execution latency at a memory size: the profile table when it has the exact
// key, else ref latency scaled by the speed factor of the largest tier <= memory
// (rounded up to whole ms). Throws InfeasibleError below the model's memory.
Ms serverless_exec_latency(const ModelProfile& model, int memory_mb, const RateCard& card);

// fee + ceil(billed / quantum) * quantum [s] * memory [GB] * gb_second_rate.
Money serverless_invocation_cost(Ms billed_ms, int memory_mb, const RateCard& card);

// Billed duration of one invocation, adding cold overheads per the card.
Ms serverless_billed_ms(Ms exec_ms, bool cold, const RateCard& card);

// Memory sizes the function may be configured with for this model: card tiers
// and profiled sizes, at or above the model's minimum, ascending.
std::vector<int> serverless_memory_options(const ModelProfile& model, const RateCard& card);

// Smallest configured memory meeting the latency budget. Throws
// InfeasibleError carrying the fastest achievable latency otherwise.
int choose_serverless_memory(const ModelProfile& model, Ms latency_budget_ms, const RateCard& card,
                             bool include_model_load = false);

// Cheapest way to serve one million queries: VM slots at full utilization on
// vm_type, or serverless at the smallest memory option.
CostEstimate cost_per_million(const ModelProfile& model, const RateCard& card, const std::string& vm_type,
                              const std::string& reference_vm_type);

enum class VmState { kProvisioning, kActive, kDraining, kTerminated };
std::string to_string(VmState s);

struct VmInstance {
  std::uint32_t id = 0;
  std::string vm_type;
  VmState state = VmState::kProvisioning;
  Ms launch_ms = 0;
  Ms ready_ms = 0;
  Ms terminate_ms = -1;
  int busy_slots = 0;
  int total_slots = 0;
  Ms idle_since_ms = -1;  // -1 while serving
  bool prewarmed = false;

  int free_slots() const { return state == VmState::kActive ? total_slots - busy_slots : 0; }
};

// Warm containers for one (model, memory) function. Containers are
// single-occupancy; a container is reusable at t iff it finished within the
// keep-alive window before t.
class ServerlessPool {
 public:
  explicit ServerlessPool(int memory_mb = 0) : memory_mb_(memory_mb) {}

  int memory_mb() const { return memory_mb_; }
  // Consumes the most recently finished warm container, if any.
  bool take_warm(Ms now, Ms keep_alive_ms);
  void start(Ms finish_ms);

  std::size_t warm_count(Ms now, Ms keep_alive_ms) const;
  std::size_t in_flight(Ms now) const;

  std::int64_t invocations() const { return invocations_; }
  std::int64_t cold_starts() const { return cold_starts_; }
  // Sum of billed_ms * memory_mb over all invocations.
  std::int64_t billed_mb_ms() const { return billed_mb_ms_; }
  void record(Ms billed_ms, bool cold) {
    ++invocations_;
    cold_starts_ += cold ? 1 : 0;
    billed_mb_ms_ += billed_ms * memory_mb_;
  }

 private:
  void settle(Ms now, Ms keep_alive_ms);

  int memory_mb_;
  std::multiset<Ms> warm_;     // finish times of idle containers
  std::multiset<Ms> running_;  // finish times of busy containers
  std::int64_t invocations_ = 0;
  std::int64_t cold_starts_ = 0;
  std::int64_t billed_mb_ms_ = 0;
};

struct DispatchResult {
  Ms latency_ms = 0;
  Ms billed_ms = 0;
  Money cost;
  bool cold = false;
};

DispatchResult serverless_dispatch(ServerlessPool& pool, Ms now_ms, Ms exec_ms, const RateCard& card);

}  // namespace infersim
