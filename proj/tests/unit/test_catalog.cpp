#include <gtest/gtest.h>

#include <random>

#include "infersim/catalog.hpp"
#include "infersim/errors.hpp"
#include "testing.hpp"

using namespace infersim;
using namespace infersim::testing;

namespace {

std::vector<std::string> names(const std::vector<ModelProfile>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.name);
  return out;
}

CostFn cost_table(std::map<std::string, int> units) {
  return [units](const ModelProfile& m) { return Money::from_units(units.at(m.name)); };
}

}  // namespace

TEST(Catalog, FixtureLoads) {
  const Catalog& c = fixture_catalog();
  ASSERT_EQ(c.size(), 7u);
  EXPECT_EQ(c.front().name, "squeezenet");
  EXPECT_EQ(c.back().name, "nasnet_large");
  const Catalog again = catalog_from_json(nlohmann::json::parse(catalog_to_json(c).dump()));
  EXPECT_EQ(again, c);
}

TEST(Catalog, RejectsUnknownKeysAndBrokenProfiles) {
  auto entry = nlohmann::json::parse(R"({"name":"x","accuracy_pct":70,"ref_latency_ms":100,"memory_mb":512,
      "vm_slots":{"m4.large":2},"serverless_latency_ms":{"512":300,"1024":200}})");
  EXPECT_NO_THROW(catalog_from_json(nlohmann::json::array({entry})));

  auto extra = entry;
  extra["gpu"] = true;
  EXPECT_THROW(catalog_from_json(nlohmann::json::array({extra})), ValidationError);

  auto rising = entry;
  rising["serverless_latency_ms"]["1024"] = 400;
  EXPECT_THROW(catalog_from_json(nlohmann::json::array({rising})), ValidationError);

  auto zero_slots = entry;
  zero_slots["vm_slots"]["m4.large"] = 0;
  EXPECT_THROW(catalog_from_json(nlohmann::json::array({zero_slots})), ValidationError);

  auto below = entry;
  below["serverless_latency_ms"]["256"] = 500;
  EXPECT_THROW(catalog_from_json(nlohmann::json::array({below})), ValidationError);

  EXPECT_THROW(catalog_from_json(nlohmann::json::array({entry, entry})), ValidationError);
  EXPECT_THROW(catalog_from_json(nlohmann::json::array()), ValidationError);
}

TEST(Catalog, ConstraintSetNeedsTwoFields) {
  ConstraintSet c;
  c.accuracy_min_pct = 80;
  EXPECT_THROW(c.validate(), ValidationError);
  c.latency_max_ms = 500;
  EXPECT_NO_THROW(c.validate());
  c.latency_max_ms = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(FeasibleModels, LatencyUnder500OnFixture) {
  ConstraintSet c;
  c.latency_max_ms = 500;
  EXPECT_EQ(names(feasible_models(fixture_catalog(), c)),
            (std::vector<std::string>{"squeezenet", "mobilenet_v2", "resnet50", "inception_v3"}));
}

TEST(FeasibleModels, VacuousAccuracyKeepsAll) {
  ConstraintSet c;
  c.accuracy_min_pct = 0;
  EXPECT_EQ(feasible_models(fixture_catalog(), c).size(), fixture_catalog().size());
}

TEST(FeasibleModels, AccAndLatOnAbc) {
  EXPECT_EQ(names(feasible_models(abc_catalog(), acc_lat(80, 500))), std::vector<std::string>{"B"});
}

TEST(SelectParagon, AbcFixturePicksB) {
  const ModelChoice ch = select_model_paragon(abc_catalog(), acc_lat(80, 500), cost_table({{"A", 1}, {"B", 2}, {"C", 5}}));
  ASSERT_TRUE(ch.model_name);
  EXPECT_EQ(*ch.model_name, "B");
  EXPECT_TRUE(ch.satisfied);
  EXPECT_EQ(ch.estimated_cost_per_1M, Money::from_units(2));
}

TEST(SelectParagon, SingleModel) {
  const Catalog one = {make_model("only", 85, 200)};
  const ModelChoice ch = select_model_paragon(one, acc_lat(80, 500), cost_table({{"only", 3}}));
  EXPECT_EQ(ch.model_name, "only");
}

TEST(SelectParagon, EqualCostPrefersLowerLatency) {
  const Catalog two = {make_model("slow", 85, 400), make_model("fast", 85, 200)};
  const ModelChoice ch = select_model_paragon(two, acc_lat(80, 500), cost_table({{"slow", 1}, {"fast", 1}}));
  EXPECT_EQ(ch.model_name, "fast");
}

TEST(SelectParagon, EqualCostAndLatencyPrefersName) {
  const Catalog two = {make_model("zeta", 85, 200), make_model("alpha", 85, 200)};
  EXPECT_EQ(select_model_paragon(two, acc_lat(80, 500), cost_table({{"zeta", 1}, {"alpha", 1}})).model_name, "alpha");
}

TEST(SelectParagon, InfeasibleReportsNoModel) {
  const ModelChoice ch = select_model_paragon(abc_catalog(), acc_lat(95, 500), cost_table({{"A", 1}, {"B", 2}, {"C", 5}}));
  EXPECT_FALSE(ch.model_name);
  EXPECT_FALSE(ch.satisfied);
}

TEST(SelectParagon, EmptyCatalogIsConfigError) {
  EXPECT_THROW(select_model_paragon(Catalog{}, acc_lat(80, 500), cost_table({})), ConfigError);
}

TEST(SelectParagon, OtherConstraintPairsOptimizeTheMissingDimension) {
  const auto costs = cost_table({{"A", 1}, {"B", 2}, {"C", 5}});
  ConstraintSet acc_cost;
  acc_cost.accuracy_min_pct = 70;
  acc_cost.cost_budget = Money::from_units(5);
  EXPECT_EQ(select_model_paragon(abc_catalog(), acc_cost, costs).model_name, "A");  // fastest

  ConstraintSet lat_cost;
  lat_cost.latency_max_ms = 1000;
  lat_cost.cost_budget = Money::from_units(2);
  EXPECT_EQ(select_model_paragon(abc_catalog(), lat_cost, costs).model_name, "B");  // most accurate within budget
}

TEST(SelectNaive, AbcPicksCUnsatisfied) {
  const ModelChoice ch = select_model_naive(abc_catalog(), acc_lat(80, 500));
  EXPECT_EQ(ch.model_name, "C");
  EXPECT_FALSE(ch.satisfied);
}

TEST(SelectNaive, SingleModel) {
  const Catalog one = {make_model("only", 60, 900)};
  EXPECT_EQ(select_model_naive(one, acc_lat(80, 500)).model_name, "only");
}

TEST(SelectNaive, AccuracyTieByName) {
  const Catalog two = {make_model("vgg", 90, 300), make_model("resnet", 90, 300)};
  EXPECT_EQ(select_model_naive(two, acc_lat(80, 500)).model_name, "resnet");
}

// Randomized checks of the selection contract.

TEST(SelectionProperties, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const SelectionCase sc = random_selection_case(rng);
    std::map<std::string, Money> by_name;
    for (std::size_t k = 0; k < sc.catalog.size(); ++k) by_name[sc.catalog[k].name] = sc.costs[k];
    const ModelChoice ch =
        select_model_paragon(sc.catalog, sc.constraints, [&](const ModelProfile& m) { return by_name.at(m.name); });
    ASSERT_EQ(ch.model_name, brute_force_select(sc.catalog, sc.constraints, sc.costs)) << "case " << i;
  }
}

TEST(SelectionProperties, SatisfiedChoiceMeetsEveryConstraint) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const SelectionCase sc = random_selection_case(rng);
    std::map<std::string, Money> by_name;
    for (std::size_t k = 0; k < sc.catalog.size(); ++k) by_name[sc.catalog[k].name] = sc.costs[k];
    const ModelChoice ch =
        select_model_paragon(sc.catalog, sc.constraints, [&](const ModelProfile& m) { return by_name.at(m.name); });
    if (!ch.satisfied) continue;
    const ModelProfile& m = find_model(sc.catalog, *ch.model_name);
    EXPECT_TRUE(meets(m, sc.constraints, by_name.at(m.name)));
  }
}

TEST(SelectionProperties, RelaxingNeverRaisesCost) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    SelectionCase sc = random_selection_case(rng);
    sc.constraints = acc_lat(std::uniform_int_distribution<int>(50, 95)(rng),
                             100 * std::uniform_int_distribution<int>(1, 10)(rng));
    std::map<std::string, Money> by_name;
    for (std::size_t k = 0; k < sc.catalog.size(); ++k) by_name[sc.catalog[k].name] = sc.costs[k];
    const CostFn fn = [&](const ModelProfile& m) { return by_name.at(m.name); };
    const ModelChoice tight = select_model_paragon(sc.catalog, sc.constraints, fn);
    if (!tight.model_name) continue;
    ConstraintSet looser = sc.constraints;
    looser.accuracy_min_pct = *looser.accuracy_min_pct - 5;
    looser.latency_max_ms = *looser.latency_max_ms + 200;
    const ModelChoice loose = select_model_paragon(sc.catalog, looser, fn);
    ASSERT_TRUE(loose.model_name);
    EXPECT_LE(loose.estimated_cost_per_1M, tight.estimated_cost_per_1M);
    EXPECT_EQ(select_model_paragon(sc.catalog, sc.constraints, fn), tight);
  }
}
