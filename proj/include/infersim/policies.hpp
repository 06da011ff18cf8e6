#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "infersim/cloudmodel.hpp"
#include "infersim/workload.hpp"

namespace infersim {

enum class PolicyKind { kReactive, kUtilAware, kExascale, kMixed, kParagon };
PolicyKind policy_kind_from_string(const std::string& s);
std::string to_string(PolicyKind k);

struct PolicySpec {
  std::string name;  // table row label; defaults to the kind name
  PolicyKind kind = PolicyKind::kReactive;
  double theta = 0.8;  // utilization threshold
  double beta = 0.2;   // exascale headroom fraction
  std::int64_t predictor_window_s = 60;
  std::int64_t tick_interval_s = 10;
  std::int64_t idle_timeout_s = 60;
  // Reactive demand adds queue_length / backlog_drain_s to the arrival rate.
  std::int64_t backlog_drain_s = 60;
  double p2m_gate_pct = 50;
  std::int64_t p2m_window_s = 300;
  // Strict queries leave the queue before relaxed ones.
  bool strict_priority = true;
  // VM plan underneath paragon's routing: util_aware or reactive.
  PolicyKind paragon_vm_plan = PolicyKind::kUtilAware;

  void validate() const;
  const std::string& label() const;
};

nlohmann::ordered_json policy_to_json(const PolicySpec& p);
PolicySpec policy_from_json(const nlohmann::json& j);

struct PendingQuery {
  std::uint32_t index = 0;  // into the run's query list
  Ms arrival_ms = 0;
  Ms enqueue_ms = 0;
  SloClass slo_class = SloClass::kRelaxed;
};

// Everything a policy may look at. Owned and mutated by the event loop of a
// single run; policies only read it.
struct ClusterState {
  const ModelProfile* model = nullptr;
  std::string vm_type;
  int slots_per_vm = 1;
  Ms exec_ms = 0;  // VM execution time of the model

  std::vector<VmInstance> vms;  // index == id
  std::deque<PendingQuery> strict_queue;
  std::deque<PendingQuery> relaxed_queue;
  std::map<int, ServerlessPool> pools;  // by memory size
  std::vector<std::int64_t> per_second_arrivals;
  std::multiset<Ms> running_finish;  // finish times of VM-served queries

  std::int64_t arrivals_since_tick = 0;
  // Arrivals that found no free VM slot since the last tick.
  std::int64_t overflow_since_tick = 0;
  // Of those, sent to serverless instead of the queue.
  std::int64_t offloaded_since_tick = 0;

  int active_vms() const;
  int provisioning_vms() const;
  int busy_slots() const;
  int active_slots() const;
  // busy / active slots; 0 without active VMs.
  double utilization() const;
  std::size_t queue_length() const { return strict_queue.size() + relaxed_queue.size(); }
  std::optional<std::uint32_t> free_vm() const;  // lowest id with a free slot
  // Per-second counts of the last window_s complete seconds before now.
  std::span<const std::int64_t> recent_counts(Ms now, std::int64_t window_s) const;
};

struct ScalingDecision {
  std::map<std::string, int> launch;
  std::vector<std::uint32_t> terminate;
  bool empty() const { return launch.empty() && terminate.empty(); }
};

struct AssignVm {
  std::uint32_t vm_id = 0;
  int slot = 0;
};
struct SendServerless {
  int memory_mb = 0;
};
struct Enqueue {
  bool serverless_infeasible = false;  // wanted serverless, no memory size fits
};
using RoutingDecision = std::variant<AssignVm, SendServerless, Enqueue>;

// Peak-hold: max of the last window_s per-second counts. 0 for no history.
double predict_demand(std::span<const std::int64_t> history, std::int64_t window_s);

// ceil(rate * exec / 1000 / slots).
int required_vms(double rate_per_s, Ms exec_ms, int slots);

// Pops the next queued query: strict before relaxed, FIFO within a class.
// With strict priority off, plain FIFO by enqueue time.
std::optional<PendingQuery> dequeue_on_slot_free(const PolicySpec& spec, ClusterState& state, Ms now);

// Expected time until a slot could take the next strict query: the
// (queued strict + 1)-th capacity unit among running VM completions and
// provisioning VMs becoming ready. Infinite when none is in sight.
Ms estimate_strict_wait(const ClusterState& state, Ms now, bool strict_priority);

class ProcurementPolicy {
 public:
  ProcurementPolicy(PolicySpec spec, const RateCard& card) : spec_(std::move(spec)), card_(&card) {}
  virtual ~ProcurementPolicy() = default;

  const PolicySpec& spec() const { return spec_; }

  virtual ScalingDecision tick(const ClusterState& state, Ms now) const;
  virtual RoutingDecision route(const QuerySpec& query, const ClusterState& state, Ms now) const = 0;
  // Whether an idle VM past idle_timeout_s may be released right now.
  bool release_idle(const ClusterState& state, const VmInstance& vm, Ms now) const;

  // VM count the policy wants; launches make up the difference to active +
  // provisioning.
  virtual int target_vms(const ClusterState& state, Ms now) const = 0;
  // How many idle VMs may be released now.
  virtual int releasable(const ClusterState& state, Ms now) const = 0;

 protected:
  int reactive_target(const ClusterState& state) const;
  int util_target(const ClusterState& state) const;
  int util_releasable(const ClusterState& state) const;
  int exascale_target(const ClusterState& state, Ms now) const;
  RoutingDecision route_to_serverless(const QuerySpec& query, const ClusterState& state, Ms now) const;

  PolicySpec spec_;
  const RateCard* card_;
};

std::unique_ptr<ProcurementPolicy> make_policy(const PolicySpec& spec, const RateCard& card);

}  // namespace infersim
