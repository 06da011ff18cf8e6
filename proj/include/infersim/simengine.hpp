#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "infersim/catalog.hpp"
#include "infersim/cloudmodel.hpp"
#include "infersim/policies.hpp"
#include "infersim/workload.hpp"

namespace infersim {

// Declaration order is the same-instant priority: capacity becomes visible
// before new work arrives.
enum class EventKind : std::uint8_t { kVmReady, kRequestComplete, kArrival, kPolicyTick, kIdleCheck, kTraceEnd };
std::string to_string(EventKind k);

struct SimEvent {
  Ms time_ms = 0;
  EventKind kind = EventKind::kArrival;
  std::uint64_t seq = 0;
  std::uint32_t vm_id = 0;     // VmReady, RequestComplete (VM), IdleCheck
  std::uint32_t query = 0;     // Arrival, RequestComplete
  bool serverless = false;     // RequestComplete on a function
  Ms idle_since_ms = 0;        // IdleCheck
};

// Min-queue over (time, kind, seq). seq is unique per queue, so the order is
// strict and total; pushing a duplicate key throws.
class EventQueue {
 public:
  void push(SimEvent e);  // assigns seq
  SimEvent pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  std::uint64_t pushed() const { return next_seq_; }

  static bool before(const SimEvent& a, const SimEvent& b);

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const { return before(b, a); }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

enum class ResourceKind : std::uint8_t { kVm, kServerless };

struct RequestRecord {
  std::uint32_t query_id = 0;
  std::string model;
  SloClass slo_class = SloClass::kRelaxed;
  Ms arrival_ms = 0;
  Ms start_ms = 0;
  Ms finish_ms = 0;
  ResourceKind resource = ResourceKind::kVm;
  std::uint32_t vm_id = 0;  // when resource == kVm
  int memory_mb = 0;        // when resource == kServerless
  bool cold = false;
  Ms response_ms = 0;
  bool violated = false;
  bool operator==(const RequestRecord&) const = default;
};

struct InvocationRecord {
  std::uint32_t query_id = 0;
  std::string model;
  int memory_mb = 0;
  Ms exec_ms = 0;
  bool cold = false;
  bool operator==(const InvocationRecord&) const = default;
};

struct VmRecord {
  std::uint32_t id = 0;
  std::string model;
  std::string vm_type;
  Ms launch_ms = 0;
  Ms ready_ms = 0;
  Ms terminate_ms = 0;
  bool prewarmed = false;
  bool operator==(const VmRecord&) const = default;
};

// One policy tick, measured before the tick's decision is applied.
struct UtilizationSample {
  Ms t_ms = 0;
  int active_vms = 0;
  int provisioning_vms = 0;
  int busy_slots = 0;
  int total_slots = 0;
  double utilization = 0;
  std::int64_t queued = 0;
  int launched = 0;
  int terminated = 0;
  bool operator==(const UtilizationSample&) const = default;
};

struct SimOptions {
  std::string vm_type = "m4.large";
  std::string reference_vm_type = "m4.large";
  // Pre-warmed VMs per model pool, active at t = 0.
  int initial_vms = 0;
  // Instead: each pool pre-warms required_vms of its mean arrival rate over
  // the first warm_window_s seconds.
  bool initial_vms_auto = false;
  std::int64_t warm_window_s = 60;
  // Off: no launches or releases; the fleet stays at initial_vms.
  bool autoscale = true;
  bool keep_ledger = true;
  // Throw std::logic_error on any causality or slot-accounting breach.
  bool check_invariants = false;
  // Abort (runtime error) if draining runs this long past the trace end.
  Ms max_drain_ms = 24LL * 3600 * 1000;
};

nlohmann::ordered_json options_to_json(const SimOptions& o);

struct MetricsReport {
  PolicySpec policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string trace_hash;

  std::int64_t total_requests = 0;
  Money total_cost;
  Money vm_cost;
  Money serverless_cost;
  Ms vm_ms_provisioned = 0;
  std::int64_t violations = 0;
  double slo_violation_pct = 0;
  double mean_response_ms = 0;
  double p95_response_ms = 0;
  double p99_response_ms = 0;
  std::int64_t serverless_invocations = 0;
  std::int64_t cold_starts = 0;
  std::int64_t warnings = 0;  // serverless wanted but no memory size fit
  Ms end_ms = 0;

  std::vector<UtilizationSample> utilization;

  bool has_ledger = false;
  std::vector<VmRecord> vm_ledger;
  std::vector<InvocationRecord> invocations;
  std::vector<RequestRecord> requests;  // not serialized into the JSON report

  double vm_seconds_provisioned() const { return static_cast<double>(vm_ms_provisioned) / 1000.0; }
  double serverless_share_pct() const {
    return total_requests == 0 ? 0.0 : 100.0 * static_cast<double>(serverless_invocations) / total_requests;
  }
};

// Simulates one policy over the queries (aligned 1:1 with trace arrivals).
// Queries for different models are served by independent pools whose results
// are merged.
MetricsReport run(const ArrivalTrace& trace, std::span<const QuerySpec> queries, const PolicySpec& policy,
                  const RateCard& card, std::span<const ModelProfile> catalog, std::uint64_t seed,
                  const SimOptions& options = {});

// report / baseline provisioned VM-seconds.
double over_provision_ratio(const MetricsReport& report, const MetricsReport& baseline);

// Re-derives VM and serverless cost from the ledger with cloudmodel billing
// alone; true iff both match the report exactly.
bool replay_verify(const MetricsReport& report, const RateCard& card);

nlohmann::ordered_json report_to_json(const MetricsReport& report, const RateCard& card);
MetricsReport report_from_json(const nlohmann::json& j);
// Rate card echoed inside a serialized report.
RateCard report_rate_card(const nlohmann::json& j);

void write_request_csv(const MetricsReport& report, std::ostream& out);

}  // namespace infersim
