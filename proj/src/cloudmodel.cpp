#include "infersim/cloudmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "infersim/errors.hpp"

namespace infersim {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

const json& required(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return j.at(key);
}

Ms ceil_div(Ms a, Ms b) { return (a + b - 1) / b; }

}  // namespace

void RateCard::validate() const {
  if (vm_types.empty()) throw ValidationError("rate card has no vm_types");
  for (const auto& [name, vm] : vm_types) {
    if (vm.hourly_price < Money{}) throw ValidationError("vm type " + name + ": negative hourly_price");
    if (vm.provision_delay_s < 0) throw ValidationError("vm type " + name + ": negative provision_delay_s");
    if (!(vm.compute_units > 0)) throw ValidationError("vm type " + name + ": compute_units must be positive");
  }
  const auto& s = serverless;
  if (s.per_invocation_fee < Money{} || s.gb_second_rate < Money{}) {
    throw ValidationError("serverless prices must be non-negative");
  }
  if (s.billing_quantum_ms <= 0) throw ValidationError("billing_quantum_ms must be positive");
  if (s.cold_start_ms < 0 || s.model_load_ms < 0 || s.keep_alive_s < 0) {
    throw ValidationError("serverless timing constants must be non-negative");
  }
  if (s.memory_tiers_mb.empty()) throw ValidationError("memory_tiers_mb is empty");
  if (s.memory_tiers_mb.size() != s.tier_speed_factors.size()) {
    throw ValidationError("tier_speed_factors must have one entry per memory tier");
  }
  for (std::size_t i = 0; i < s.memory_tiers_mb.size(); ++i) {
    if (s.memory_tiers_mb[i] <= 0) throw ValidationError("memory tiers must be positive");
    if (i > 0 && s.memory_tiers_mb[i] <= s.memory_tiers_mb[i - 1]) {
      throw ValidationError("memory_tiers_mb must be strictly ascending");
    }
    if (s.tier_speed_factors[i] < 1) throw ValidationError("tier speed factors must be >= 1");
    if (i > 0 && s.tier_speed_factors[i] > s.tier_speed_factors[i - 1]) {
      throw ValidationError("tier_speed_factors must be non-increasing");
    }
  }
  if (billing_granularity_s <= 0) throw ValidationError("billing_granularity_s must be positive");
}

const VmTypeRate& RateCard::vm(const std::string& type) const {
  auto it = vm_types.find(type);
  if (it == vm_types.end()) throw ConfigError("unknown vm type '" + type + "'");
  return it->second;
}

RateCard rate_card_from_json(const json& j) {
  reject_unknown(j, {"vm_types", "serverless", "billing_granularity_s", "vm_bill_from_launch"}, "rate card");
  RateCard card;
  try {
    for (const auto& [name, v] : required(j, "vm_types", "rate card").items()) {
      const std::string where = "vm type " + name;
      reject_unknown(v, {"hourly_price", "provision_delay_s", "compute_units"}, where);
      VmTypeRate r;
      r.hourly_price = Money::from_json(required(v, "hourly_price", where));
      r.provision_delay_s = required(v, "provision_delay_s", where).get<std::int64_t>();
      r.compute_units = required(v, "compute_units", where).get<double>();
      card.vm_types[name] = r;
    }
    const json& s = required(j, "serverless", "rate card");
    reject_unknown(s,
                   {"per_invocation_fee", "gb_second_rate", "billing_quantum_ms", "cold_start_ms", "model_load_ms",
                    "keep_alive_s", "memory_tiers_mb", "tier_speed_factors", "bill_cold_start", "bill_model_load"},
                   "serverless");
    auto& sr = card.serverless;
    sr.per_invocation_fee = Money::from_json(required(s, "per_invocation_fee", "serverless"));
    sr.gb_second_rate = Money::from_json(required(s, "gb_second_rate", "serverless"));
    sr.billing_quantum_ms = required(s, "billing_quantum_ms", "serverless").get<Ms>();
    sr.cold_start_ms = required(s, "cold_start_ms", "serverless").get<Ms>();
    sr.model_load_ms = required(s, "model_load_ms", "serverless").get<Ms>();
    sr.keep_alive_s = required(s, "keep_alive_s", "serverless").get<std::int64_t>();
    sr.memory_tiers_mb = required(s, "memory_tiers_mb", "serverless").get<std::vector<int>>();
    sr.tier_speed_factors = required(s, "tier_speed_factors", "serverless").get<std::vector<double>>();
    sr.bill_cold_start = s.value("bill_cold_start", false);
    sr.bill_model_load = s.value("bill_model_load", true);
    card.billing_granularity_s = j.value("billing_granularity_s", std::int64_t{1});
    card.vm_bill_from_launch = j.value("vm_bill_from_launch", true);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("rate card: ") + e.what());
  }
  card.validate();
  return card;
}

RateCard load_rate_card(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open rate card file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("rate card " + path + ": " + e.what(), 0);
  }
  return rate_card_from_json(j);
}

nlohmann::ordered_json rate_card_to_json(const RateCard& card) {
  nlohmann::ordered_json j;
  j["vm_types"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : card.vm_types) {
    j["vm_types"][name] = {{"hourly_price", v.hourly_price.to_string()},
                           {"provision_delay_s", v.provision_delay_s},
                           {"compute_units", v.compute_units}};
  }
  const auto& s = card.serverless;
  j["serverless"] = {{"per_invocation_fee", s.per_invocation_fee.to_string()},
                     {"gb_second_rate", s.gb_second_rate.to_string()},
                     {"billing_quantum_ms", s.billing_quantum_ms},
                     {"cold_start_ms", s.cold_start_ms},
                     {"model_load_ms", s.model_load_ms},
                     {"keep_alive_s", s.keep_alive_s},
                     {"memory_tiers_mb", s.memory_tiers_mb},
                     {"tier_speed_factors", s.tier_speed_factors},
                     {"bill_cold_start", s.bill_cold_start},
                     {"bill_model_load", s.bill_model_load}};
  j["billing_granularity_s"] = card.billing_granularity_s;
  j["vm_bill_from_launch"] = card.vm_bill_from_launch;
  return j;
}

int vm_capacity(const std::string& vm_type, const ModelProfile& model, const RateCard& card,
                const std::string& reference_vm_type) {
  const VmTypeRate& target = card.vm(vm_type);
  if (auto it = model.vm_slots.find(vm_type); it != model.vm_slots.end()) return it->second;
  auto ref = model.vm_slots.find(reference_vm_type);
  if (ref == model.vm_slots.end()) {
    throw ConfigError("model '" + model.name + "' has no slot profile for " + vm_type + " or reference " +
                      reference_vm_type);
  }
  const double scaled = ref->second * target.compute_units / card.vm(reference_vm_type).compute_units;
  // The epsilon keeps exact products like 4 * 2.0 from flooring to 7.
  return std::max(1, static_cast<int>(std::floor(scaled + 1e-9)));
}

Money vm_cost(Ms billed_ms, const std::string& vm_type, const RateCard& card) {
  if (billed_ms < 0) throw ValidationError("billed time must be non-negative");
  const Ms granularity_ms = card.billing_granularity_s * 1000;
  const Ms units = ceil_div(billed_ms, granularity_ms);
  const Money::Rep billed_s = static_cast<Money::Rep>(units) * card.billing_granularity_s;
  return card.vm(vm_type).hourly_price.mul_div(billed_s, 3600);
}

Ms serverless_exec_latency(const ModelProfile& model, int memory_mb, const RateCard& card) {
  if (memory_mb < model.memory_mb) {
    throw InfeasibleError("model '" + model.name + "' needs " + std::to_string(model.memory_mb) + " MB, got " +
                              std::to_string(memory_mb),
                          std::numeric_limits<double>::infinity());
  }
  if (auto it = model.serverless_latency_ms.find(memory_mb); it != model.serverless_latency_ms.end()) {
    return it->second;
  }
  const auto& tiers = card.serverless.memory_tiers_mb;
  const auto& factors = card.serverless.tier_speed_factors;
  std::size_t tier = 0;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    if (tiers[i] <= memory_mb) tier = i;
  }
  return static_cast<Ms>(std::ceil(static_cast<double>(model.ref_latency_ms) * factors[tier] - 1e-9));
}

Money serverless_invocation_cost(Ms billed_ms, int memory_mb, const RateCard& card) {
  if (billed_ms <= 0) throw ValidationError("serverless execution time must be positive");
  const auto& s = card.serverless;
  const Ms quantized = ceil_div(billed_ms, s.billing_quantum_ms) * s.billing_quantum_ms;
  // rate * (ms / 1000) * (MB / 1024)
  const Money compute = s.gb_second_rate.mul_div(static_cast<Money::Rep>(quantized) * memory_mb, 1000 * 1024);
  return s.per_invocation_fee + compute;
}

Ms serverless_billed_ms(Ms exec_ms, bool cold, const RateCard& card) {
  Ms billed = exec_ms;
  if (cold) {
    if (card.serverless.bill_model_load) billed += card.serverless.model_load_ms;
    if (card.serverless.bill_cold_start) billed += card.serverless.cold_start_ms;
  }
  return billed;
}

std::vector<int> serverless_memory_options(const ModelProfile& model, const RateCard& card) {
  std::set<int> opts;
  for (int t : card.serverless.memory_tiers_mb) {
    if (t >= model.memory_mb) opts.insert(t);
  }
  for (const auto& [mem, _] : model.serverless_latency_ms) opts.insert(mem);
  return {opts.begin(), opts.end()};
}

int choose_serverless_memory(const ModelProfile& model, Ms latency_budget_ms, const RateCard& card,
                             bool include_model_load) {
  const std::vector<int> options = serverless_memory_options(model, card);
  Ms fastest = std::numeric_limits<Ms>::max();
  for (int mem : options) {
    Ms lat = serverless_exec_latency(model, mem, card);
    if (include_model_load) lat += card.serverless.model_load_ms;
    fastest = std::min(fastest, lat);
    if (latency_budget_ms > 0 && lat <= latency_budget_ms) return mem;
  }
  throw InfeasibleError("no serverless memory size meets a " + std::to_string(latency_budget_ms) + " ms budget for '" +
                            model.name + "' (fastest " + std::to_string(fastest) + " ms)",
                        static_cast<double>(fastest));
}

CostEstimate cost_per_million(const ModelProfile& model, const RateCard& card, const std::string& vm_type,
                              const std::string& reference_vm_type) {
  constexpr Money::Rep kMillion = 1'000'000;
  const int slots = vm_capacity(vm_type, model, card, reference_vm_type);
  // One query holds a slot for ref_latency_ms: price per slot-ms times 1M.
  const Money vm = card.vm(vm_type).hourly_price.mul_div(kMillion * model.ref_latency_ms,
                                                         static_cast<Money::Rep>(3600) * 1000 * slots);
  const auto options = serverless_memory_options(model, card);
  const int mem = options.front();
  const Money serverless = serverless_invocation_cost(serverless_exec_latency(model, mem, card), mem, card) * kMillion;
  if (vm < serverless) return {vm, DeploymentHint::kVm};
  if (serverless < vm) return {serverless, DeploymentHint::kServerless};
  return {vm, DeploymentHint::kEither};
}

std::string to_string(VmState s) {
  switch (s) {
    case VmState::kProvisioning: return "provisioning";
    case VmState::kActive: return "active";
    case VmState::kDraining: return "draining";
    case VmState::kTerminated: return "terminated";
  }
  return "terminated";
}

void ServerlessPool::settle(Ms now, Ms keep_alive_ms) {
  while (!running_.empty() && *running_.begin() <= now) {
    warm_.insert(*running_.begin());
    running_.erase(running_.begin());
  }
  while (!warm_.empty() && now - *warm_.begin() > keep_alive_ms) warm_.erase(warm_.begin());
}

bool ServerlessPool::take_warm(Ms now, Ms keep_alive_ms) {
  settle(now, keep_alive_ms);
  if (warm_.empty()) return false;
  warm_.erase(std::prev(warm_.end()));
  return true;
}

void ServerlessPool::start(Ms finish_ms) { running_.insert(finish_ms); }

std::size_t ServerlessPool::warm_count(Ms now, Ms keep_alive_ms) const {
  std::size_t n = 0;
  for (Ms f : warm_) n += (f <= now && now - f <= keep_alive_ms) ? 1 : 0;
  for (Ms f : running_) n += (f <= now && now - f <= keep_alive_ms) ? 1 : 0;
  return n;
}

std::size_t ServerlessPool::in_flight(Ms now) const {
  return static_cast<std::size_t>(std::count_if(running_.begin(), running_.end(), [now](Ms f) { return f > now; }));
}

DispatchResult serverless_dispatch(ServerlessPool& pool, Ms now_ms, Ms exec_ms, const RateCard& card) {
  const auto& s = card.serverless;
  DispatchResult r;
  r.cold = !pool.take_warm(now_ms, s.keep_alive_s * 1000);
  r.latency_ms = exec_ms + (r.cold ? s.cold_start_ms + s.model_load_ms : 0);
  r.billed_ms = serverless_billed_ms(exec_ms, r.cold, card);
  r.cost = serverless_invocation_cost(r.billed_ms, pool.memory_mb(), card);
  pool.start(now_ms + r.latency_ms);
  pool.record(r.billed_ms, r.cold);
  return r;
}

}  // namespace infersim
