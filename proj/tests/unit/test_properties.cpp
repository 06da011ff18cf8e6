#include <gtest/gtest.h>

#include "infersim/simengine.hpp"
#include "testing.hpp"

using namespace infersim;
using namespace infersim::testing;

namespace {

bool vm_only(PolicyKind k) {
  return k == PolicyKind::kReactive || k == PolicyKind::kUtilAware || k == PolicyKind::kExascale;
}

MetricsReport run_constant(PolicyKind kind, double rate, double duration_s, std::uint64_t seed = 1) {
  const Catalog catalog = {make_model("m", 76, 200, 1024, 4)};
  const ArrivalTrace t = gen_constant(rate, duration_s, Jitter::kNone, 0);
  PolicySpec p;
  p.kind = kind;
  return run(t, uniform_queries(t, "m", 500), p, default_card(), catalog, seed);
}

}  // namespace

// Random configurations: every query is served exactly once, records are
// causal, costs replay from the ledger, and reruns are byte-identical.
TEST(SimProperties, ConservationAndDeterminism) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SimCase sc = random_sim_case(seed);
    const MetricsReport r = run_case(sc);
    const std::string where = "seed " + std::to_string(seed) + " policy " + to_string(sc.policy.kind);
    ASSERT_EQ(r.total_requests, static_cast<std::int64_t>(sc.trace.arrivals_ms.size())) << where;
    ASSERT_EQ(r.requests.size(), sc.trace.arrivals_ms.size()) << where;
    std::int64_t on_vm = 0, on_serverless = 0;
    for (std::size_t i = 0; i < r.requests.size(); ++i) {
      const RequestRecord& q = r.requests[i];
      ASSERT_EQ(q.arrival_ms, sc.trace.arrivals_ms[i]) << where;
      ASSERT_GE(q.start_ms, q.arrival_ms) << where;
      ASSERT_GT(q.finish_ms, q.start_ms) << where;
      if (q.resource == ResourceKind::kVm) {
        ++on_vm;
        const VmRecord& v = r.vm_ledger.at(q.vm_id);
        ASSERT_GE(q.start_ms, v.ready_ms) << where;
        ASSERT_LE(q.finish_ms, v.terminate_ms) << where;
      } else {
        ++on_serverless;
      }
    }
    ASSERT_EQ(on_vm + on_serverless, r.total_requests) << where;
    ASSERT_EQ(on_serverless, r.serverless_invocations) << where;
    ASSERT_EQ(r.total_cost, r.vm_cost + r.serverless_cost) << where;
    ASSERT_TRUE(replay_verify(r, sc.card)) << where;
    if (vm_only(sc.policy.kind)) ASSERT_EQ(on_serverless, 0) << where;
    ASSERT_EQ(report_to_json(r, sc.card).dump(), report_to_json(run_case(sc), sc.card).dump()) << where;
  }
}

TEST(SimProperties, ParagonOffloadsStrictQueriesOnly) {
  int offloaded = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    SimCase sc = random_sim_case(seed);
    sc.policy.kind = PolicyKind::kParagon;
    const MetricsReport r = run_case(sc);
    for (std::size_t i = 0; i < r.requests.size(); ++i) {
      if (r.requests[i].resource != ResourceKind::kServerless) continue;
      ++offloaded;
      ASSERT_EQ(sc.queries[i].slo_class, SloClass::kStrict) << "seed " << seed << " query " << i;
    }
  }
  EXPECT_GT(offloaded, 0);
}

TEST(SimProperties, UtilAwareLaunchesOnlyAtThreshold) {
  int launches = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    SimCase sc = random_sim_case(seed);
    // Samples merge all pools; only a single pool shows the policy's own view.
    if (sc.catalog.size() != 1) continue;
    sc.policy.kind = PolicyKind::kUtilAware;
    const MetricsReport r = run_case(sc);
    for (const auto& s : r.utilization) {
      if (s.launched == 0 || s.active_vms == 0) continue;
      ++launches;
      ASSERT_GE(s.utilization, sc.policy.theta) << "seed " << seed << " t " << s.t_ms;
    }
  }
  EXPECT_GT(launches, 0);
}

TEST(SimProperties, ExascaleNeverProvisionsLessThanReactive) {
  for (double rate : {5.0, 20.0, 60.0}) {
    for (auto jitter : {Jitter::kNone, Jitter::kPoisson}) {
      const Catalog catalog = {make_model("m", 76, 200, 1024, 4)};
      const ArrivalTrace t = gen_burst(rate, rate * 4, 120, 60, 400, jitter, 5);
      const auto qs = uniform_queries(t, "m", 500);
      PolicySpec reactive, exascale;
      exascale.kind = PolicyKind::kExascale;
      const auto a = run(t, qs, reactive, default_card(), catalog, 1);
      const auto b = run(t, qs, exascale, default_card(), catalog, 1);
      EXPECT_GE(b.vm_ms_provisioned, a.vm_ms_provisioned) << "rate " << rate;
    }
  }
}

TEST(SimProperties, DoublingLoadNeverLowersCost) {
  for (auto kind : {PolicyKind::kReactive, PolicyKind::kUtilAware, PolicyKind::kExascale, PolicyKind::kMixed,
                    PolicyKind::kParagon}) {
    for (double rate : {2.0, 5.0, 10.0, 25.0, 50.0}) {
      const MetricsReport lo = run_constant(kind, rate, 300);
      const MetricsReport hi = run_constant(kind, 2 * rate, 300);
      EXPECT_GE(hi.total_cost, lo.total_cost) << to_string(kind) << " rate " << rate;
    }
  }
}

TEST(SimProperties, FixedFleetNeverScales) {
  const Catalog catalog = {make_model("m", 76, 200, 1024, 4)};
  SimOptions opt;
  opt.autoscale = false;
  opt.initial_vms = 3;
  PolicySpec p;
  Money first;
  for (double rate : {1.0, 10.0, 40.0}) {
    const ArrivalTrace t = gen_constant(rate, 200, Jitter::kNone, 0);
    const MetricsReport r = run(t, uniform_queries(t, "m", 500), p, default_card(), catalog, 1, opt);
    EXPECT_EQ(r.serverless_invocations, 0);
    EXPECT_EQ(r.vm_ledger.size(), 3u);
    if (rate == 1.0) first = r.total_cost;
    // Three VMs held to the trace end (plus any idle tail).
    EXPECT_GE(r.total_cost, first);
  }
}
