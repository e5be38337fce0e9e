#include <gtest/gtest.h>

#include "paxoslease/sim/model_check.hpp"

using namespace paxoslease;
using namespace paxoslease::sim;

namespace {

ModelBounds small() {
  ModelBounds b;
  b.horizon = 3;
  b.acquires = 1;
  b.extends = 0;
  b.releases = 0;
  b.acceptorCrashes = 0;
  b.duplicates = 0;
  b.maxInFlight = 4;
  return b;
}

}  // namespace

TEST(ModelCheck, SmallBoundsExhaustWithoutViolation) {
  const auto r = model_check(small());
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.states, 100000u);
  EXPECT_TRUE(r.counterexample.empty());
}

TEST(ModelCheck, StateCountIsDeterministic) {
  auto b = small();
  b.horizon = 2;
  const auto x = model_check(b), y = model_check(b);
  EXPECT_EQ(x.states, y.states);
  EXPECT_EQ(x.transitions, y.transitions);
}

TEST(ModelCheck, ReleaseExhaustsWithoutViolation) {
  auto b = small();
  b.horizon = 2;
  b.releases = 1;
  const auto r = model_check(b);
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.violations, 0u);
}

TEST(ModelCheck, ExpiryDisabledIsCaught) {
  auto b = small();
  b.acceptorHold = false;
  b.stopAtFirstViolation = true;
  const auto r = model_check(b);
  EXPECT_EQ(r.violations, 1u);
  EXPECT_FALSE(r.complete);
  ASSERT_FALSE(r.counterexample.empty());
  EXPECT_EQ(r.counterexample.front(), "init");
}

TEST(ModelCheck, ZeroRejoinGateIsCaught) {
  auto b = small();
  b.acceptorCrashes = 1;
  b.rejoinGate = Duration{0};
  b.stopAtFirstViolation = true;
  const auto r = model_check(b);
  EXPECT_EQ(r.violations, 1u);
  bool crashed = false;
  for (const auto& step : r.counterexample) crashed |= step.find("crash") != std::string::npos;
  EXPECT_TRUE(crashed);
}

TEST(ModelCheck, StateLimitLeavesSearchIncomplete) {
  auto b = small();
  b.stateLimit = 1000;
  const auto r = model_check(b);
  EXPECT_FALSE(r.complete);
  EXPECT_LE(r.states, 1000u);
}
