#include "infersim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "infersim/errors.hpp"

namespace infersim {

using nlohmann::json;

namespace {

constexpr Ms kNever = std::numeric_limits<Ms>::max();

}  // namespace

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "reactive") return PolicyKind::kReactive;
  if (s == "util_aware") return PolicyKind::kUtilAware;
  if (s == "exascale") return PolicyKind::kExascale;
  if (s == "mixed") return PolicyKind::kMixed;
  if (s == "paragon") return PolicyKind::kParagon;
  throw ValidationError("unknown policy kind '" + s + "'");
}

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kReactive: return "reactive";
    case PolicyKind::kUtilAware: return "util_aware";
    case PolicyKind::kExascale: return "exascale";
    case PolicyKind::kMixed: return "mixed";
    case PolicyKind::kParagon: return "paragon";
  }
  return "reactive";
}

void PolicySpec::validate() const {
  const std::string who = "policy '" + label() + "': ";
  if (!(theta > 0 && theta <= 1)) throw ValidationError(who + "theta must be in (0, 1]");
  if (!(beta >= 0)) throw ValidationError(who + "beta must be >= 0");
  if (predictor_window_s < 1) throw ValidationError(who + "predictor_window_s must be >= 1");
  if (tick_interval_s < 1) throw ValidationError(who + "tick_interval_s must be >= 1");
  if (idle_timeout_s < 0) throw ValidationError(who + "idle_timeout_s must be >= 0");
  if (!(p2m_gate_pct >= 0 && p2m_gate_pct <= 100)) throw ValidationError(who + "p2m_gate_pct must be in [0, 100]");
  if (backlog_drain_s < 1) throw ValidationError(who + "backlog_drain_s must be >= 1");
  if (p2m_window_s < 1) throw ValidationError(who + "p2m_window_s must be >= 1");
  if (paragon_vm_plan != PolicyKind::kUtilAware && paragon_vm_plan != PolicyKind::kReactive) {
    throw ValidationError(who + "paragon_vm_plan must be util_aware or reactive");
  }
}

const std::string& PolicySpec::label() const {
  static const std::string kNames[] = {"reactive", "util_aware", "exascale", "mixed", "paragon"};
  return name.empty() ? kNames[static_cast<int>(kind)] : name;
}

nlohmann::ordered_json policy_to_json(const PolicySpec& p) {
  nlohmann::ordered_json j;
  j["name"] = p.label();
  j["kind"] = to_string(p.kind);
  j["theta"] = p.theta;
  j["beta"] = p.beta;
  j["predictor_window_s"] = p.predictor_window_s;
  j["tick_interval_s"] = p.tick_interval_s;
  j["idle_timeout_s"] = p.idle_timeout_s;
  j["backlog_drain_s"] = p.backlog_drain_s;
  j["p2m_gate_pct"] = p.p2m_gate_pct;
  j["p2m_window_s"] = p.p2m_window_s;
  j["strict_priority"] = p.strict_priority;
  j["paragon_vm_plan"] = to_string(p.paragon_vm_plan);
  return j;
}

PolicySpec policy_from_json(const json& j) {
  static const std::set<std::string> kKeys = {"name",           "kind",          "theta",          "beta",
                                              "predictor_window_s", "tick_interval_s", "idle_timeout_s", "backlog_drain_s",
                                              "p2m_gate_pct",   "p2m_window_s",  "strict_priority", "paragon_vm_plan"};
  if (!j.is_object()) throw ValidationError("policy entry must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.contains(k)) throw ValidationError("policy: unknown key '" + k + "'");
  }
  if (!j.contains("kind")) throw ValidationError("policy: missing 'kind'");
  PolicySpec p;
  try {
    p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
    p.name = j.value("name", std::string());
    p.theta = j.value("theta", p.theta);
    p.beta = j.value("beta", p.beta);
    p.predictor_window_s = j.value("predictor_window_s", p.predictor_window_s);
    p.tick_interval_s = j.value("tick_interval_s", p.tick_interval_s);
    p.idle_timeout_s = j.value("idle_timeout_s", p.idle_timeout_s);
    p.backlog_drain_s = j.value("backlog_drain_s", p.backlog_drain_s);
    p.p2m_gate_pct = j.value("p2m_gate_pct", p.p2m_gate_pct);
    p.p2m_window_s = j.value("p2m_window_s", p.p2m_window_s);
    p.strict_priority = j.value("strict_priority", p.strict_priority);
    if (j.contains("paragon_vm_plan")) p.paragon_vm_plan = policy_kind_from_string(j["paragon_vm_plan"]);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("policy: ") + e.what());
  }
  p.validate();
  return p;
}

int ClusterState::active_vms() const {
  return static_cast<int>(std::count_if(vms.begin(), vms.end(), [](const VmInstance& v) {
    return v.state == VmState::kActive || v.state == VmState::kDraining;
  }));
}

int ClusterState::provisioning_vms() const {
  return static_cast<int>(
      std::count_if(vms.begin(), vms.end(), [](const VmInstance& v) { return v.state == VmState::kProvisioning; }));
}

int ClusterState::busy_slots() const {
  int n = 0;
  for (const auto& v : vms) n += v.busy_slots;
  return n;
}

int ClusterState::active_slots() const {
  int n = 0;
  for (const auto& v : vms) {
    if (v.state == VmState::kActive || v.state == VmState::kDraining) n += v.total_slots;
  }
  return n;
}

double ClusterState::utilization() const {
  const int slots = active_slots();
  return slots == 0 ? 0.0 : static_cast<double>(busy_slots()) / slots;
}

std::optional<std::uint32_t> ClusterState::free_vm() const {
  for (const auto& v : vms) {
    if (v.state == VmState::kActive && v.busy_slots < v.total_slots) return v.id;
  }
  return std::nullopt;
}

std::span<const std::int64_t> ClusterState::recent_counts(Ms now, std::int64_t window_s) const {
  const auto end = std::min<std::size_t>(per_second_arrivals.size(), static_cast<std::size_t>(std::max<Ms>(now, 0) / 1000));
  const auto begin = end > static_cast<std::size_t>(window_s) ? end - static_cast<std::size_t>(window_s) : 0;
  return std::span(per_second_arrivals).subspan(begin, end - begin);
}

double predict_demand(std::span<const std::int64_t> history, std::int64_t window_s) {
  if (history.empty() || window_s <= 0) return 0;
  const std::size_t n = std::min(history.size(), static_cast<std::size_t>(window_s));
  return static_cast<double>(*std::max_element(history.end() - static_cast<std::ptrdiff_t>(n), history.end()));
}

int required_vms(double rate_per_s, Ms exec_ms, int slots) {
  if (exec_ms <= 0 || slots < 1) throw ValidationError("required_vms needs exec_ms > 0 and slots >= 1");
  if (!(rate_per_s > 0)) return 0;
  const double slot_load = rate_per_s * static_cast<double>(exec_ms) / 1000.0;
  // Tolerate representation error so exact multiples don't round up.
  return static_cast<int>(std::ceil(slot_load / slots - 1e-9));
}

std::optional<PendingQuery> dequeue_on_slot_free(const PolicySpec& spec, ClusterState& state, Ms /*now*/) {
  auto pop = [](std::deque<PendingQuery>& q) {
    PendingQuery p = q.front();
    q.pop_front();
    return p;
  };
  if (state.strict_queue.empty() && state.relaxed_queue.empty()) return std::nullopt;
  if (state.strict_queue.empty()) return pop(state.relaxed_queue);
  if (state.relaxed_queue.empty() || spec.strict_priority) return pop(state.strict_queue);
  const auto& s = state.strict_queue.front();
  const auto& r = state.relaxed_queue.front();
  const bool strict_first = std::tie(s.enqueue_ms, s.index) < std::tie(r.enqueue_ms, r.index);
  return pop(strict_first ? state.strict_queue : state.relaxed_queue);
}

Ms estimate_strict_wait(const ClusterState& state, Ms now, bool strict_priority) {
  const std::size_t ahead = strict_priority ? state.strict_queue.size() : state.queue_length();
  std::vector<std::pair<Ms, int>> ready;  // provisioning VMs: (ready, slots)
  for (const auto& v : state.vms) {
    if (v.state == VmState::kProvisioning) ready.emplace_back(v.ready_ms, v.total_slots);
  }
  std::sort(ready.begin(), ready.end());
  std::size_t units = 0;
  auto it = state.running_finish.begin();
  std::size_t r = 0;
  while (it != state.running_finish.end() || r < ready.size()) {
    Ms t = 0;
    if (r >= ready.size() || (it != state.running_finish.end() && *it <= ready[r].first)) {
      t = *it++;
      units += 1;
    } else {
      t = ready[r].first;
      units += static_cast<std::size_t>(ready[r++].second);
    }
    if (units > ahead) return std::max<Ms>(0, t - now);
  }
  return kNever;
}

ScalingDecision ProcurementPolicy::tick(const ClusterState& state, Ms now) const {
  ScalingDecision d;
  const int have = state.active_vms() + state.provisioning_vms();
  const int want = target_vms(state, now);
  if (want > have) d.launch[state.vm_type] = want - have;

  int budget = releasable(state, now);
  const Ms idle_ms = spec_.idle_timeout_s * 1000;
  // Newest instances go first; lowest ids keep receiving work.
  for (auto v = state.vms.rbegin(); v != state.vms.rend() && budget > 0; ++v) {
    if (v->state == VmState::kActive && v->busy_slots == 0 && v->idle_since_ms >= 0 &&
        now - v->idle_since_ms >= idle_ms) {
      d.terminate.push_back(v->id);
      --budget;
    }
  }
  return d;
}

bool ProcurementPolicy::release_idle(const ClusterState& state, const VmInstance& vm, Ms now) const {
  if (vm.state != VmState::kActive || vm.busy_slots != 0 || vm.idle_since_ms < 0) return false;
  if (now - vm.idle_since_ms < spec_.idle_timeout_s * 1000) return false;
  return releasable(state, now) > 0;
}

int ProcurementPolicy::reactive_target(const ClusterState& state) const {
  if (state.queue_length() == 0 && state.overflow_since_tick == 0) return 0;
  // Offloaded queries are the backlog a queue-only plan would have seen.
  const std::int64_t backlog = static_cast<std::int64_t>(state.queue_length()) + state.offloaded_since_tick;
  const double rate = static_cast<double>(state.arrivals_since_tick) / static_cast<double>(spec_.tick_interval_s) +
                      static_cast<double>(backlog) / static_cast<double>(spec_.backlog_drain_s);
  return required_vms(rate, state.exec_ms, state.slots_per_vm);
}

int ProcurementPolicy::util_target(const ClusterState& state) const {
  if (state.active_vms() == 0) {
    // Nothing to measure yet: bootstrap one VM for pending work.
    return state.queue_length() > 0 && state.provisioning_vms() == 0 ? 1 : 0;
  }
  if (state.utilization() < spec_.theta) return 0;
  return static_cast<int>(std::ceil(state.busy_slots() / (spec_.theta * state.slots_per_vm) - 1e-9));
}

int ProcurementPolicy::util_releasable(const ClusterState& state) const {
  const int busy = state.busy_slots();
  int slots = state.active_slots();
  int count = state.active_vms() + state.provisioning_vms();
  const int keep = std::max(1, static_cast<int>(std::ceil(busy / (spec_.theta * state.slots_per_vm) - 1e-9)));
  int n = 0;
  // Hysteresis: shrink only while utilization stays below theta / 2.
  while (count > keep && slots > 0 && static_cast<double>(busy) / slots < spec_.theta / 2) {
    slots -= state.slots_per_vm;
    --count;
    ++n;
  }
  return n;
}

int ProcurementPolicy::exascale_target(const ClusterState& state, Ms now) const {
  const double predicted = predict_demand(state.recent_counts(now, spec_.predictor_window_s), spec_.predictor_window_s);
  const int planned = required_vms(predicted * (1 + spec_.beta), state.exec_ms, state.slots_per_vm);
  return std::max(planned, reactive_target(state));
}

RoutingDecision ProcurementPolicy::route_to_serverless(const QuerySpec& query, const ClusterState& state,
                                                       Ms now) const {
  const Ms budget = query.latency_budget_ms() - (now - query.arrival_ms);
  try {
    return SendServerless{choose_serverless_memory(*state.model, budget, *card_)};
  } catch (const InfeasibleError&) {
    return Enqueue{true};
  }
}

namespace {

RoutingDecision vm_or_queue(const ClusterState& state) {
  if (auto id = state.free_vm()) return AssignVm{*id, state.vms[*id].busy_slots};
  return Enqueue{};
}

class ReactivePolicy : public ProcurementPolicy {
 public:
  using ProcurementPolicy::ProcurementPolicy;
  RoutingDecision route(const QuerySpec&, const ClusterState& state, Ms) const override { return vm_or_queue(state); }
  int target_vms(const ClusterState& state, Ms) const override { return reactive_target(state); }
  int releasable(const ClusterState&, Ms) const override { return std::numeric_limits<int>::max(); }
};

class UtilAwarePolicy : public ProcurementPolicy {
 public:
  using ProcurementPolicy::ProcurementPolicy;
  RoutingDecision route(const QuerySpec&, const ClusterState& state, Ms) const override { return vm_or_queue(state); }
  int target_vms(const ClusterState& state, Ms) const override { return util_target(state); }
  int releasable(const ClusterState& state, Ms) const override { return util_releasable(state); }
};

class ExascalePolicy : public ProcurementPolicy {
 public:
  using ProcurementPolicy::ProcurementPolicy;
  RoutingDecision route(const QuerySpec&, const ClusterState& state, Ms) const override { return vm_or_queue(state); }
  int target_vms(const ClusterState& state, Ms now) const override { return exascale_target(state, now); }
  int releasable(const ClusterState& state, Ms now) const override {
    return std::max(0, state.active_vms() + state.provisioning_vms() - exascale_target(state, now));
  }
};

// Reactive VM plan; overflow goes to serverless while VMs boot.
class MixedPolicy : public ReactivePolicy {
 public:
  using ReactivePolicy::ReactivePolicy;
  RoutingDecision route(const QuerySpec& query, const ClusterState& state, Ms now) const override {
    if (auto id = state.free_vm()) return AssignVm{*id, state.vms[*id].busy_slots};
    return route_to_serverless(query, state, now);
  }
};

class ParagonPolicy : public ProcurementPolicy {
 public:
  using ProcurementPolicy::ProcurementPolicy;

  RoutingDecision route(const QuerySpec& query, const ClusterState& state, Ms now) const override {
    if (auto id = state.free_vm()) return AssignVm{*id, state.vms[*id].busy_slots};
    if (query.slo_class == SloClass::kRelaxed) return Enqueue{};
    const Ms remaining = query.latency_budget_ms() - state.exec_ms - (now - query.arrival_ms);
    if (remaining < estimate_strict_wait(state, now, spec_.strict_priority)) {
      return route_to_serverless(query, state, now);
    }
    return Enqueue{};
  }

  int target_vms(const ClusterState& state, Ms now) const override {
    if (steady(state, now)) return exascale_target(state, now);
    return spec_.paragon_vm_plan == PolicyKind::kReactive ? reactive_target(state) : util_target(state);
  }

  int releasable(const ClusterState& state, Ms now) const override {
    if (steady(state, now)) {
      return std::max(0, state.active_vms() + state.provisioning_vms() - exascale_target(state, now));
    }
    if (spec_.paragon_vm_plan == PolicyKind::kReactive) return std::numeric_limits<int>::max();
    return util_releasable(state);
  }

 private:
  // Low peak-to-median over the recent window: offload will not pay, buy VMs.
  bool steady(const ClusterState& state, Ms now) const {
    const auto counts = state.recent_counts(now, spec_.p2m_window_s);
    if (counts.empty()) return false;
    return peak_to_median(counts) < spec_.p2m_gate_pct;
  }
};

}  // namespace

std::unique_ptr<ProcurementPolicy> make_policy(const PolicySpec& spec, const RateCard& card) {
  spec.validate();
  switch (spec.kind) {
    case PolicyKind::kReactive: return std::make_unique<ReactivePolicy>(spec, card);
    case PolicyKind::kUtilAware: return std::make_unique<UtilAwarePolicy>(spec, card);
    case PolicyKind::kExascale: return std::make_unique<ExascalePolicy>(spec, card);
    case PolicyKind::kMixed: return std::make_unique<MixedPolicy>(spec, card);
    case PolicyKind::kParagon: return std::make_unique<ParagonPolicy>(spec, card);
  }
  throw ValidationError("unknown policy kind");
}

}  // namespace infersim
