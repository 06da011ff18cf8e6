#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "infersim/catalog.hpp"
#include "infersim/cloudmodel.hpp"
#include "infersim/grid.hpp"
#include "infersim/workload.hpp"

using namespace infersim;

namespace {

struct Fixture {
  RateCard card = load_rate_card(std::string(INFERSIM_DATA_DIR) + "/rate_card.json");
  Catalog catalog = load_catalog(std::string(INFERSIM_DATA_DIR) + "/catalog.json");
  ArrivalTrace trace = gen_burst(40, 160, 600, 300, 1800, Jitter::kPoisson, 1);
  std::vector<QuerySpec> queries;
  std::vector<GridJob> jobs;

  Fixture() {
    MixSpec mix;
    mix.strict_accuracy_min_pct = 76;
    mix.relaxed_accuracy_min_pct = 76;
    mix.rng_seed = 1;
    queries = assign_constraints(trace, mix, catalog, SelectionMode::kParagon, [&](const ModelProfile& m) {
      return cost_per_million(m, card, "m4.large", "m4.large");
    });
    for (auto kind : {PolicyKind::kReactive, PolicyKind::kUtilAware, PolicyKind::kExascale, PolicyKind::kMixed,
                      PolicyKind::kParagon}) {
      for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        PolicySpec p;
        p.kind = kind;
        jobs.push_back({&trace, queries, p, seed});
      }
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_GridSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_grid_serial(f.jobs, f.card, f.catalog, SimOptions{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.jobs.size()));
}

void BM_GridParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_grid_parallel(f.jobs, f.card, f.catalog, SimOptions{}, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.jobs.size()));
}

}  // namespace

BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GridParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
