#include "infersim/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "infersim/errors.hpp"
#include "infersim/hash.hpp"

namespace infersim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::kVmReady: return "VmReady";
    case EventKind::kRequestComplete: return "RequestComplete";
    case EventKind::kArrival: return "Arrival";
    case EventKind::kPolicyTick: return "PolicyTick";
    case EventKind::kIdleCheck: return "IdleCheck";
    case EventKind::kTraceEnd: return "TraceEnd";
  }
  return "?";
}

bool EventQueue::before(const SimEvent& a, const SimEvent& b) {
  const auto ka = std::make_tuple(a.time_ms, static_cast<int>(a.kind), a.seq);
  const auto kb = std::make_tuple(b.time_ms, static_cast<int>(b.kind), b.seq);
  return ka < kb;
}

void EventQueue::push(SimEvent e) {
  e.seq = next_seq_++;
  heap_.push(e);
}

SimEvent EventQueue::pop() {
  SimEvent e = heap_.top();
  heap_.pop();
  if (!heap_.empty() && !before(e, heap_.top())) {
    throw std::logic_error("event queue order is not strict");
  }
  return e;
}

ordered_json options_to_json(const SimOptions& o) {
  ordered_json j;
  j["vm_type"] = o.vm_type;
  j["reference_vm_type"] = o.reference_vm_type;
  if (o.initial_vms_auto) {
    j["initial_vms"] = "auto";
    j["warm_window_s"] = o.warm_window_s;
  } else {
    j["initial_vms"] = o.initial_vms;
  }
  j["autoscale"] = o.autoscale;
  return j;
}

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("simulation invariant violated: ") + what);
}

struct PoolResult {
  Money vm_cost;
  Money serverless_cost;
  Ms vm_ms = 0;
  Ms end_ms = 0;
  std::int64_t serverless_invocations = 0;
  std::int64_t cold_starts = 0;
  std::int64_t warnings = 0;
  std::vector<VmRecord> vms;
  std::vector<InvocationRecord> invocations;
  std::vector<UtilizationSample> samples;
};

// One homogeneous serving pool: one model, one VM type, one policy instance.
class PoolSimulation {
 public:
  PoolSimulation(const ModelProfile& model, std::span<const QuerySpec> queries, std::span<const std::uint32_t> members,
                 Ms duration_ms, const ProcurementPolicy& policy, const RateCard& card, const SimOptions& options,
                 std::vector<RequestRecord>& records)
      : queries_(queries),
        members_(members),
        duration_ms_(duration_ms),
        policy_(policy),
        spec_(policy.spec()),
        card_(card),
        options_(options),
        records_(records) {
    state_.model = &model;
    state_.vm_type = options.vm_type;
    state_.slots_per_vm = vm_capacity(options.vm_type, model, card, options.reference_vm_type);
    state_.exec_ms = model.ref_latency_ms;
  }

  PoolResult run() {
    for (int i = 0; i < initial_vms(); ++i) {
      VmInstance& vm = new_vm(0);
      vm.prewarmed = true;
      vm.ready_ms = 0;
      vm.state = VmState::kActive;
      mark_idle(vm, 0);
    }
    for (std::uint32_t local = 0; local < members_.size(); ++local) {
      SimEvent e;
      e.time_ms = queries_[members_[local]].arrival_ms;
      e.kind = EventKind::kArrival;
      e.query = local;
      events_.push(e);
    }
    events_.push(SimEvent{duration_ms_, EventKind::kTraceEnd});
    events_.push(SimEvent{spec_.tick_interval_s * 1000, EventKind::kPolicyTick});

    Ms now = 0;
    while (!events_.empty()) {
      const SimEvent e = events_.pop();
      if (options_.check_invariants) check(e.time_ms >= now, "time went backwards");
      now = e.time_ms;
      switch (e.kind) {
        case EventKind::kArrival: on_arrival(e, now); break;
        case EventKind::kRequestComplete: on_complete(e, now); break;
        case EventKind::kVmReady: on_vm_ready(e, now); break;
        case EventKind::kPolicyTick: on_tick(now); break;
        case EventKind::kIdleCheck: on_idle_check(e, now); break;
        case EventKind::kTraceEnd: break;
      }
      if (options_.check_invariants) check_slots();
    }
    return finish(std::max(now, duration_ms_));
  }

 private:
  int initial_vms() const {
    if (!options_.initial_vms_auto) return options_.initial_vms;
    const Ms window_ms = options_.warm_window_s * 1000;
    std::int64_t n = 0;
    for (std::uint32_t q : members_) n += queries_[q].arrival_ms < window_ms ? 1 : 0;
    return required_vms(static_cast<double>(n) / static_cast<double>(options_.warm_window_s), state_.exec_ms,
                        state_.slots_per_vm);
  }

  VmInstance& new_vm(Ms now) {
    VmInstance vm;
    vm.id = static_cast<std::uint32_t>(state_.vms.size());
    vm.vm_type = state_.vm_type;
    vm.state = VmState::kProvisioning;
    vm.launch_ms = now;
    vm.ready_ms = now + card_.vm(state_.vm_type).provision_delay_s * 1000;
    vm.total_slots = state_.slots_per_vm;
    state_.vms.push_back(vm);
    return state_.vms.back();
  }

  void mark_idle(VmInstance& vm, Ms now) {
    vm.idle_since_ms = now;
    SimEvent e;
    e.time_ms = now + spec_.idle_timeout_s * 1000;
    e.kind = EventKind::kIdleCheck;
    e.vm_id = vm.id;
    e.idle_since_ms = now;
    events_.push(e);
  }

  void terminate(VmInstance& vm, Ms now) {
    if (options_.check_invariants) check(vm.busy_slots == 0, "terminating a busy VM");
    vm.state = VmState::kTerminated;
    vm.terminate_ms = now;
  }

  RequestRecord& record_for(std::uint32_t local) {
    return records_[queries_[members_[local]].id];
  }

  void start_on_vm(VmInstance& vm, std::uint32_t local, Ms now) {
    const QuerySpec& q = queries_[members_[local]];
    if (options_.check_invariants) {
      check(vm.state == VmState::kActive, "serving on an inactive VM");
      check(now >= vm.ready_ms, "serving before ready");
      check(now >= q.arrival_ms, "start before arrival");
      check(vm.busy_slots < vm.total_slots, "slot over-subscription");
    }
    ++vm.busy_slots;
    vm.idle_since_ms = -1;
    const Ms finish = now + state_.exec_ms;
    state_.running_finish.insert(finish);
    RequestRecord& r = record_for(local);
    r.start_ms = now;
    r.finish_ms = finish;
    r.resource = ResourceKind::kVm;
    r.vm_id = vm.id;
    r.cold = false;
    SimEvent e;
    e.time_ms = finish;
    e.kind = EventKind::kRequestComplete;
    e.vm_id = vm.id;
    e.query = local;
    events_.push(e);
  }

  void send_to_serverless(std::uint32_t local, int memory_mb, Ms now) {
    const QuerySpec& q = queries_[members_[local]];
    auto [it, _] = state_.pools.try_emplace(memory_mb, memory_mb);
    const Ms exec = serverless_exec_latency(*state_.model, memory_mb, card_);
    const DispatchResult d = serverless_dispatch(it->second, now, exec, card_);
    result_.serverless_cost += d.cost;
    ++result_.serverless_invocations;
    result_.cold_starts += d.cold ? 1 : 0;
    if (options_.keep_ledger) result_.invocations.push_back({q.id, state_.model->name, memory_mb, exec, d.cold});
    RequestRecord& r = record_for(local);
    r.start_ms = now;
    r.finish_ms = now + d.latency_ms;
    r.resource = ResourceKind::kServerless;
    r.memory_mb = memory_mb;
    r.cold = d.cold;
    ++serverless_in_flight_;
    SimEvent e;
    e.time_ms = r.finish_ms;
    e.kind = EventKind::kRequestComplete;
    e.query = local;
    e.serverless = true;
    events_.push(e);
  }

  void enqueue(std::uint32_t local, Ms now) {
    const QuerySpec& q = queries_[members_[local]];
    PendingQuery p{local, q.arrival_ms, now, q.slo_class};
    (q.slo_class == SloClass::kStrict ? state_.strict_queue : state_.relaxed_queue).push_back(p);
  }

  void on_arrival(const SimEvent& e, Ms now) {
    const QuerySpec& q = queries_[members_[e.query]];
    const auto sec = static_cast<std::size_t>(now / 1000);
    if (state_.per_second_arrivals.size() <= sec) state_.per_second_arrivals.resize(sec + 1, 0);
    ++state_.per_second_arrivals[sec];
    ++state_.arrivals_since_tick;

    RequestRecord& r = record_for(e.query);
    r.query_id = q.id;
    r.model = q.model_name;
    r.slo_class = q.slo_class;
    r.arrival_ms = q.arrival_ms;

    const RoutingDecision d = policy_.route(q, state_, now);
    if (const auto* a = std::get_if<AssignVm>(&d)) {
      start_on_vm(state_.vms.at(a->vm_id), e.query, now);
    } else if (const auto* s = std::get_if<SendServerless>(&d)) {
      ++state_.overflow_since_tick;
      ++state_.offloaded_since_tick;
      send_to_serverless(e.query, s->memory_mb, now);
    } else {
      ++state_.overflow_since_tick;
      if (std::get<Enqueue>(d).serverless_infeasible) ++result_.warnings;
      enqueue(e.query, now);
    }
  }

  void fill(VmInstance& vm, Ms now) {
    while (vm.state == VmState::kActive && vm.busy_slots < vm.total_slots) {
      const auto next = dequeue_on_slot_free(spec_, state_, now);
      if (!next) break;
      start_on_vm(vm, next->index, now);
    }
  }

  void on_complete(const SimEvent& e, Ms now) {
    if (e.serverless) {
      --serverless_in_flight_;
      return;
    }
    VmInstance& vm = state_.vms.at(e.vm_id);
    --vm.busy_slots;
    state_.running_finish.erase(state_.running_finish.find(now));
    if (vm.state == VmState::kDraining) {
      if (vm.busy_slots == 0) terminate(vm, now);
      return;
    }
    fill(vm, now);
    if (vm.busy_slots == 0) mark_idle(vm, now);
  }

  void on_vm_ready(const SimEvent& e, Ms now) {
    VmInstance& vm = state_.vms.at(e.vm_id);
    if (vm.state != VmState::kProvisioning) return;
    vm.state = VmState::kActive;
    fill(vm, now);
    if (vm.busy_slots == 0) mark_idle(vm, now);
  }

  void on_idle_check(const SimEvent& e, Ms now) {
    if (!options_.autoscale) return;
    VmInstance& vm = state_.vms.at(e.vm_id);
    if (vm.state != VmState::kActive || vm.busy_slots != 0 || vm.idle_since_ms != e.idle_since_ms) return;
    if (policy_.release_idle(state_, vm, now)) terminate(vm, now);
  }

  bool work_remaining() const {
    return state_.queue_length() > 0 || serverless_in_flight_ > 0 || !state_.running_finish.empty();
  }

  void on_tick(Ms now) {
    const auto sec = static_cast<std::size_t>(now / 1000);
    if (state_.per_second_arrivals.size() < sec) state_.per_second_arrivals.resize(sec, 0);

    UtilizationSample s;
    s.t_ms = now;
    s.active_vms = state_.active_vms();
    s.provisioning_vms = state_.provisioning_vms();
    s.busy_slots = state_.busy_slots();
    s.total_slots = state_.active_slots();
    s.utilization = state_.utilization();
    s.queued = static_cast<std::int64_t>(state_.queue_length());

    if (options_.autoscale) {
      const ScalingDecision d = policy_.tick(state_, now);
      for (const auto& [type, count] : d.launch) {
        for (int i = 0; i < count; ++i) {
          const VmInstance& vm = new_vm(now);
          SimEvent e;
          e.time_ms = vm.ready_ms;
          e.kind = EventKind::kVmReady;
          e.vm_id = vm.id;
          events_.push(e);
          ++s.launched;
        }
      }
      for (std::uint32_t id : d.terminate) {
        VmInstance& vm = state_.vms.at(id);
        if (vm.state != VmState::kActive || vm.busy_slots != 0) {
          throw std::logic_error("policy asked to terminate a VM that is not idle");
        }
        terminate(vm, now);
        ++s.terminated;
      }
    }
    result_.samples.push_back(s);
    state_.arrivals_since_tick = 0;
    state_.overflow_since_tick = 0;
    state_.offloaded_since_tick = 0;

    if (now + spec_.tick_interval_s * 1000 <= duration_ms_ || work_remaining()) {
      if (now > duration_ms_ + options_.max_drain_ms) {
        throw std::runtime_error("backlog never drained (no capacity to serve queued queries)");
      }
      events_.push(SimEvent{now + spec_.tick_interval_s * 1000, EventKind::kPolicyTick});
    }
  }

  void check_slots() const {
    int busy = 0;
    for (const auto& v : state_.vms) {
      check(v.busy_slots >= 0 && v.busy_slots <= v.total_slots, "slot accounting out of range");
      busy += v.busy_slots;
    }
    check(static_cast<std::size_t>(busy) == state_.running_finish.size(), "running set out of sync");
  }

  PoolResult finish(Ms end_ms) {
    result_.end_ms = end_ms;
    for (auto& vm : state_.vms) {
      if (vm.state != VmState::kTerminated) {
        vm.state = VmState::kTerminated;
        vm.terminate_ms = end_ms;
      }
      const Ms from = card_.vm_bill_from_launch ? vm.launch_ms : std::min(vm.ready_ms, vm.terminate_ms);
      result_.vm_cost += vm_cost(vm.terminate_ms - from, vm.vm_type, card_);
      result_.vm_ms += vm.terminate_ms - vm.launch_ms;
      if (options_.keep_ledger) {
        result_.vms.push_back(
            {vm.id, state_.model->name, vm.vm_type, vm.launch_ms, vm.ready_ms, vm.terminate_ms, vm.prewarmed});
      }
    }
    return std::move(result_);
  }

  std::span<const QuerySpec> queries_;
  std::span<const std::uint32_t> members_;
  Ms duration_ms_;
  const ProcurementPolicy& policy_;
  const PolicySpec& spec_;
  const RateCard& card_;
  const SimOptions& options_;
  std::vector<RequestRecord>& records_;

  ClusterState state_;
  EventQueue events_;
  std::int64_t serverless_in_flight_ = 0;
  PoolResult result_;
};

double nearest_rank(const std::vector<Ms>& sorted, double pct) {
  if (sorted.empty()) return 0;
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
  return static_cast<double>(sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1]);
}

std::string workload_hash(std::span<const QuerySpec> queries) {
  Fnv1a h;
  for (const auto& q : queries) {
    h.update_i64(q.id).update_i64(q.arrival_ms).update_i64(static_cast<int>(q.slo_class));
    h.update_i64(q.constraints.latency_max_ms.value_or(-1)).update(q.model_name).update(",");
  }
  return h.hex();
}

}  // namespace

MetricsReport run(const ArrivalTrace& trace, std::span<const QuerySpec> queries, const PolicySpec& policy,
                  const RateCard& card, std::span<const ModelProfile> catalog, std::uint64_t seed,
                  const SimOptions& options) {
  if (queries.size() != trace.arrivals_ms.size()) {
    throw ValidationError("queries must align 1:1 with trace arrivals");
  }
  card.validate();
  policy.validate();
  card.vm(options.vm_type);
  if (options.initial_vms < 0) throw ValidationError("initial_vms must be >= 0");
  if (options.warm_window_s < 1) throw ValidationError("warm_window_s must be >= 1");
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].id != i) throw ValidationError("query ids must be 0..n-1 in trace order");
    if (queries[i].arrival_ms != trace.arrivals_ms[i]) throw ValidationError("query arrival differs from trace");
  }

  // Partition by model, in catalog order.
  std::vector<std::vector<std::uint32_t>> members(catalog.size());
  for (const auto& q : queries) {
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const ModelProfile& m) { return m.name == q.model_name; });
    if (it == catalog.end()) throw ConfigError("query " + std::to_string(q.id) + " uses unknown model '" + q.model_name + "'");
    members[static_cast<std::size_t>(it - catalog.begin())].push_back(q.id);
  }

  MetricsReport report;
  report.policy = policy;
  report.seed = seed;
  report.trace_hash = trace.hash();
  report.total_requests = static_cast<std::int64_t>(queries.size());
  report.has_ledger = options.keep_ledger;
  report.requests.resize(queries.size());

  ordered_json echo;
  echo["policy"] = policy_to_json(policy);
  echo["rate_card"] = rate_card_to_json(card);
  ordered_json used = ordered_json::array();
  for (std::size_t m = 0; m < catalog.size(); ++m) {
    if (!members[m].empty()) used.push_back(catalog_to_json(std::span(&catalog[m], 1))[0]);
  }
  echo["models"] = used;
  echo["options"] = options_to_json(options);
  echo["seed"] = seed;
  echo["trace_hash"] = report.trace_hash;
  echo["workload_hash"] = workload_hash(queries);
  report.config_hash = fnv1a_hex(echo.dump());

  const auto impl = make_policy(policy, card);
  std::map<Ms, UtilizationSample> merged_samples;
  std::uint32_t vm_offset = 0;
  for (std::size_t m = 0; m < catalog.size(); ++m) {
    if (members[m].empty()) continue;
    PoolSimulation pool(catalog[m], queries, members[m], trace.duration_ms, *impl, card, options, report.requests);
    PoolResult r = pool.run();
    report.vm_cost += r.vm_cost;
    report.serverless_cost += r.serverless_cost;
    report.vm_ms_provisioned += r.vm_ms;
    report.serverless_invocations += r.serverless_invocations;
    report.cold_starts += r.cold_starts;
    report.warnings += r.warnings;
    report.end_ms = std::max(report.end_ms, r.end_ms);
    for (auto& v : r.vms) {
      v.id += vm_offset;
      report.vm_ledger.push_back(std::move(v));
    }
    for (auto& inv : r.invocations) report.invocations.push_back(std::move(inv));
    for (std::uint32_t q : members[m]) {
      if (report.requests[q].resource == ResourceKind::kVm) report.requests[q].vm_id += vm_offset;
    }
    vm_offset += static_cast<std::uint32_t>(r.vms.size());
    for (const auto& s : r.samples) {
      auto& t = merged_samples[s.t_ms];
      t.t_ms = s.t_ms;
      t.active_vms += s.active_vms;
      t.provisioning_vms += s.provisioning_vms;
      t.busy_slots += s.busy_slots;
      t.total_slots += s.total_slots;
      t.queued += s.queued;
      t.launched += s.launched;
      t.terminated += s.terminated;
    }
  }
  for (auto& [_, s] : merged_samples) {
    s.utilization = s.total_slots == 0 ? 0.0 : static_cast<double>(s.busy_slots) / s.total_slots;
    report.utilization.push_back(s);
  }
  std::sort(report.invocations.begin(), report.invocations.end(),
            [](const InvocationRecord& a, const InvocationRecord& b) { return a.query_id < b.query_id; });

  report.total_cost = report.vm_cost + report.serverless_cost;
  std::vector<Ms> responses;
  responses.reserve(report.requests.size());
  long double sum = 0;
  for (auto& r : report.requests) {
    r.response_ms = r.finish_ms - r.arrival_ms;
    r.violated = r.response_ms > queries[r.query_id].latency_budget_ms();
    report.violations += r.violated ? 1 : 0;
    responses.push_back(r.response_ms);
    sum += r.response_ms;
  }
  std::sort(responses.begin(), responses.end());
  if (!responses.empty()) {
    report.slo_violation_pct = 100.0 * static_cast<double>(report.violations) / static_cast<double>(responses.size());
    report.mean_response_ms = static_cast<double>(sum / static_cast<long double>(responses.size()));
    report.p95_response_ms = nearest_rank(responses, 95);
    report.p99_response_ms = nearest_rank(responses, 99);
  }
  if (!options.keep_ledger) {
    report.vm_ledger.clear();
    report.invocations.clear();
    report.requests.clear();
  }
  return report;
}

double over_provision_ratio(const MetricsReport& report, const MetricsReport& baseline) {
  if (report.trace_hash != baseline.trace_hash) {
    throw ComparisonError("reports come from different traces (" + report.trace_hash + " vs " + baseline.trace_hash +
                          ")");
  }
  if (baseline.vm_ms_provisioned == 0) throw ComparisonError("baseline provisioned no VM time");
  return static_cast<double>(report.vm_ms_provisioned) / static_cast<double>(baseline.vm_ms_provisioned);
}

bool replay_verify(const MetricsReport& report, const RateCard& card) {
  if (!report.has_ledger) throw VerificationError("report has no ledger to replay");
  Money vm;
  for (const auto& v : report.vm_ledger) {
    const Ms from = card.vm_bill_from_launch ? v.launch_ms : std::min(v.ready_ms, v.terminate_ms);
    vm += vm_cost(v.terminate_ms - from, v.vm_type, card);
  }
  Money serverless;
  for (const auto& inv : report.invocations) {
    serverless += serverless_invocation_cost(serverless_billed_ms(inv.exec_ms, inv.cold, card), inv.memory_mb, card);
  }
  return vm == report.vm_cost && serverless == report.serverless_cost && vm + serverless == report.total_cost;
}

ordered_json report_to_json(const MetricsReport& r, const RateCard& card) {
  ordered_json j;
  j["policy"] = policy_to_json(r.policy);
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["trace_hash"] = r.trace_hash;
  j["total_requests"] = r.total_requests;
  j["total_cost"] = r.total_cost.to_string();
  j["vm_cost"] = r.vm_cost.to_string();
  j["serverless_cost"] = r.serverless_cost.to_string();
  j["vm_seconds_provisioned"] = r.vm_seconds_provisioned();
  j["vm_ms_provisioned"] = r.vm_ms_provisioned;
  j["slo_violations"] = r.violations;
  j["slo_violation_pct"] = r.slo_violation_pct;
  j["mean_response_ms"] = r.mean_response_ms;
  j["p95_response_ms"] = r.p95_response_ms;
  j["p99_response_ms"] = r.p99_response_ms;
  j["serverless_invocations"] = r.serverless_invocations;
  j["cold_starts"] = r.cold_starts;
  j["warnings"] = r.warnings;
  j["end_ms"] = r.end_ms;
  ordered_json util = ordered_json::array();
  for (const auto& s : r.utilization) {
    util.push_back({s.t_ms, s.active_vms, s.provisioning_vms, s.busy_slots, s.total_slots, s.utilization, s.queued,
                    s.launched, s.terminated});
  }
  j["utilization_columns"] = {"t_ms",    "active_vms", "provisioning_vms", "busy_slots", "total_slots",
                              "utilization", "queued", "launched",        "terminated"};
  j["utilization"] = std::move(util);
  j["rate_card"] = rate_card_to_json(card);
  if (r.has_ledger) {
    ordered_json vms = ordered_json::array();
    for (const auto& v : r.vm_ledger) {
      vms.push_back({v.id, v.model, v.vm_type, v.launch_ms, v.ready_ms, v.terminate_ms, v.prewarmed});
    }
    ordered_json inv = ordered_json::array();
    for (const auto& i : r.invocations) inv.push_back({i.query_id, i.model, i.memory_mb, i.exec_ms, i.cold});
    j["ledger"] = {{"vm_columns", {"id", "model", "vm_type", "launch_ms", "ready_ms", "terminate_ms", "prewarmed"}},
                   {"vms", std::move(vms)},
                   {"invocation_columns", {"query_id", "model", "memory_mb", "exec_ms", "cold"}},
                   {"invocations", std::move(inv)}};
  }
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  try {
    r.policy = policy_from_json(j.at("policy"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.trace_hash = j.at("trace_hash").get<std::string>();
    r.total_requests = j.at("total_requests").get<std::int64_t>();
    r.total_cost = Money::from_json(j.at("total_cost"));
    r.vm_cost = Money::from_json(j.at("vm_cost"));
    r.serverless_cost = Money::from_json(j.at("serverless_cost"));
    r.vm_ms_provisioned = j.at("vm_ms_provisioned").get<Ms>();
    r.violations = j.at("slo_violations").get<std::int64_t>();
    r.slo_violation_pct = j.at("slo_violation_pct").get<double>();
    r.mean_response_ms = j.at("mean_response_ms").get<double>();
    r.p95_response_ms = j.at("p95_response_ms").get<double>();
    r.p99_response_ms = j.at("p99_response_ms").get<double>();
    r.serverless_invocations = j.at("serverless_invocations").get<std::int64_t>();
    r.cold_starts = j.at("cold_starts").get<std::int64_t>();
    r.warnings = j.at("warnings").get<std::int64_t>();
    r.end_ms = j.at("end_ms").get<Ms>();
    for (const auto& s : j.at("utilization")) {
      r.utilization.push_back({s[0].get<Ms>(), s[1].get<int>(), s[2].get<int>(), s[3].get<int>(), s[4].get<int>(),
                               s[5].get<double>(), s[6].get<std::int64_t>(), s[7].get<int>(), s[8].get<int>()});
    }
    if (j.contains("ledger")) {
      r.has_ledger = true;
      for (const auto& v : j["ledger"].at("vms")) {
        r.vm_ledger.push_back({v[0].get<std::uint32_t>(), v[1].get<std::string>(), v[2].get<std::string>(),
                               v[3].get<Ms>(), v[4].get<Ms>(), v[5].get<Ms>(), v[6].get<bool>()});
      }
      for (const auto& i : j["ledger"].at("invocations")) {
        r.invocations.push_back(
            {i[0].get<std::uint32_t>(), i[1].get<std::string>(), i[2].get<int>(), i[3].get<Ms>(), i[4].get<bool>()});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

RateCard report_rate_card(const json& j) {
  if (!j.contains("rate_card")) throw ValidationError("report carries no rate card");
  return rate_card_from_json(j["rate_card"]);
}

void write_request_csv(const MetricsReport& report, std::ostream& out) {
  out << "query_id,model,class,arrival_ms,start_ms,finish_ms,resource,cold,response_ms,violated\n";
  for (const auto& r : report.requests) {
    out << r.query_id << ',' << r.model << ',' << to_string(r.slo_class) << ',' << r.arrival_ms << ',' << r.start_ms
        << ',' << r.finish_ms << ','
        << (r.resource == ResourceKind::kVm ? "vm:" + std::to_string(r.vm_id)
                                            : "serverless:" + std::to_string(r.memory_mb))
        << ',' << (r.cold ? 1 : 0) << ',' << r.response_ms << ',' << (r.violated ? 1 : 0) << '\n';
  }
}

}  // namespace infersim
