#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "infersim/errors.hpp"
#include "infersim/money.hpp"

using infersim::Money;

TEST(Money, ParseAndCanonicalForm) {
  EXPECT_EQ(Money::parse("0.096").to_string(), "0.096000000000000000");
  EXPECT_EQ(Money::parse("-3").to_string(), "-3.000000000000000000");
  EXPECT_EQ(Money::parse("12.5").atto(), Money::from_units(25).atto() / 2);
  EXPECT_EQ(Money::parse("0.0000166667").atto(), static_cast<Money::Rep>(16'666'700'000'000));
  EXPECT_EQ(Money::parse("1.5e-05"), Money::parse("0.000015"));
}

TEST(Money, RejectsMalformedAndOverPrecise) {
  EXPECT_THROW(Money::parse(""), infersim::ValidationError);
  EXPECT_THROW(Money::parse("1.2.3"), infersim::ValidationError);
  EXPECT_THROW(Money::parse("abc"), infersim::ValidationError);
  EXPECT_THROW(Money::parse("0.0000000000000000001"), infersim::ValidationError);
  EXPECT_EQ(Money::parse("0.1000000000000000000"), Money::parse("0.1"));
}

TEST(Money, FromJsonUsesShortestDecimal) {
  EXPECT_EQ(Money::from_json(nlohmann::json(0.096)), Money::parse("0.096"));
  EXPECT_EQ(Money::from_json(nlohmann::json(2)), Money::from_units(2));
  EXPECT_EQ(Money::from_json(nlohmann::json("0.0000002")), Money::parse("0.0000002"));
  EXPECT_THROW(Money::from_json(nlohmann::json::array()), infersim::ValidationError);
}

TEST(Money, MulDivRoundsHalfAwayFromZero) {
  EXPECT_EQ(Money::from_atto(5).mul_div(1, 2).atto(), 3);
  EXPECT_EQ(Money::from_atto(-5).mul_div(1, 2).atto(), -3);
  EXPECT_EQ(Money::from_atto(4).mul_div(1, 3).atto(), 1);
  EXPECT_EQ(Money::parse("0.096").mul_div(3600, 3600), Money::parse("0.096"));
}

TEST(Money, ToFixed) {
  EXPECT_EQ(Money::parse("3.533334").to_fixed(9), "3.533334000");
  EXPECT_EQ(Money::parse("0.0000000005").to_fixed(9), "0.000000001");
  EXPECT_EQ(Money::parse("-1.25").to_fixed(1), "-1.3");
  EXPECT_EQ(Money::parse("7.4").to_fixed(0), "7");
}

TEST(Money, SummationOrderDoesNotMatter) {
  std::mt19937_64 rng(3);
  std::vector<Money> parts;
  for (int i = 0; i < 1000; ++i) parts.push_back(Money::from_atto(static_cast<Money::Rep>(rng() >> 8)));
  Money forward;
  for (auto m : parts) forward += m;
  std::shuffle(parts.begin(), parts.end(), rng);
  Money shuffled;
  for (auto m : parts) shuffled += m;
  EXPECT_EQ(forward, shuffled);
}
