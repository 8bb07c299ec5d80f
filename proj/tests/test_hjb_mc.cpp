#include <gtest/gtest.h>

#include <cmath>

#include "invlab/catalog.hpp"
#include "invlab/errors.hpp"
#include "invlab/hjb_mc.hpp"
#include "invlab/numerics.hpp"
#include "support.hpp"

using namespace invlab;
using invlab::testing::vec;

namespace {

DiscountedProblem circle_problem() {
  return default_problem(catalog::system("circle").system, catalog::set("disk", 2));
}

}  // namespace

TEST(DiscountedProblem, DefaultsAndValidation) {
  auto p = circle_problem();
  EXPECT_EQ(p.discount, 1.0);
  EXPECT_EQ(p.horizon, 10.0);
  EXPECT_NEAR(p.tail(), std::exp(-10.0), 1e-18);
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.cost(vec({0.5, 0})), 0.0);
  EXPECT_NEAR(p.cost(vec({1.5, 0})), 0.5, 1e-12);
  EXPECT_EQ(p.cost(vec({5, 0})), 1.0);
  EXPECT_EQ(p.bound(vec({5, 0})), 1.0);
  EXPECT_EQ(p.bound(vec({0.2, 0})), 0.0);
  p.discount = 0.5;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.discount = 1.0;
  p.horizon = 5.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(DiscountedProblem, CostDominatedByIndicator) {
  const auto p = circle_problem();
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    const Vec x = invlab::testing::gaussian(2, rng, 2.0);
    EXPECT_LE(p.cost(x), p.discount * p.bound(x));
    EXPECT_GE(p.cost(x), 0.0);
    EXPECT_LE(p.cost(x), 1.0);
  }
}

TEST(CostEstimate, UnitCostIsDeterministicIntegral) {
  auto p = default_problem(invlab::testing::drift_only(2, [](const Vec&) { return Vec(Vec::Zero(2)); }),
                           catalog::set("disk", 2));
  p.cost = [](const Vec&) { return 1.0; };
  const auto r = discounted_cost_estimate(p, vec({0, 0}), constant_policy(Vec()), 10, 1e-3, 2);
  EXPECT_NEAR(r.estimate, 1 - std::exp(-10.0), 1e-6);
  EXPECT_LE(r.std_error, 1e-15);
}

TEST(CostEstimate, ConstantPathOutsideK) {
  const auto p = default_problem(invlab::testing::drift_only(2, [](const Vec&) { return Vec(Vec::Zero(2)); }),
                                 catalog::set("disk", 2));
  const Vec x0 = vec({1.3, 0});
  const auto r = discounted_cost_estimate(p, x0, constant_policy(Vec()), 4, 1e-3, 3);
  EXPECT_NEAR(r.estimate, p.cost(x0) * (1 - std::exp(-10.0)), 1e-6);
}

TEST(CostEstimate, InvariantStartHasNoCost) {
  const auto e = catalog::system("inward-drift");
  const auto p = default_problem(e.system, catalog::set(e.default_set, 2));
  for (const auto& np : constant_policies(e.system)) {
    const auto r = discounted_cost_estimate(p, vec({0.6, 0.8}), np.policy, 5, 1e-3, 4);
    EXPECT_LE(r.estimate, 1e-6 + r.tail) << np.name;
  }
}

TEST(CostEstimate, DiscountMonotone) {
  auto p = default_problem(catalog::system("halfspace-crossing").system, catalog::set("halfspace", 2));
  double prev = 1e300;
  for (double c : {1.0, 2.0, 4.0}) {
    p.discount = c;
    const auto r = discounted_cost_estimate(p, vec({0, 0}), constant_policy(vec({0})), 50, 1e-2, 5, 4);
    EXPECT_LE(r.estimate, prev);
    EXPECT_GE(r.estimate, 0.0);
    EXPECT_LE(r.estimate, 1.0 / c + 0.02);
    prev = r.estimate;
  }
}

TEST(CostEstimate, BoundedByObservedDistance) {
  // Same seeds as the estimator: path i runs on rng_split(seed, i).
  const auto p = circle_problem();
  const double dt = 1e-2;
  const std::uint64_t seed = 6;
  const std::size_t n = 20;
  double delta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto path = euler_maruyama(p.sys, vec({1, 0}), constant_policy(Vec()),
                                     NoiseBundle::sample(1, TimeGrid(p.horizon, dt), numerics::rng_split(seed, i)));
    for (std::size_t k = 0; k < path.grid.nodes(); ++k) delta = std::max(delta, p.set.distance(path.state(k)));
  }
  const auto r = discounted_cost_estimate(p, vec({1, 0}), constant_policy(Vec()), n, dt, seed);
  EXPECT_LE(r.estimate, delta / p.discount + r.tail);
}

TEST(CostEstimate, ThreadsAndValidation) {
  const auto p = circle_problem();
  const auto a = discounted_cost_estimate(p, vec({1, 0}), constant_policy(Vec()), 8, 1e-2, 7, 1);
  const auto b = discounted_cost_estimate(p, vec({1, 0}), constant_policy(Vec()), 8, 1e-2, 7, 4);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_THROW(discounted_cost_estimate(p, vec({1, 0}), constant_policy(Vec()), 1, 1e-2, 7), InvalidArgument);
}

TEST(ConstantPolicies, NamesEveryControl) {
  const auto sys = catalog::system("sphere-3").system;
  const auto ps = constant_policies(sys);
  ASSERT_EQ(ps.size(), sys.controls.size());
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i].policy(0.0, Vec::Zero(3)), sys.controls[i]);
  EXPECT_EQ(constant_policies(catalog::system("circle").system)[0].name, "u=()");
}

TEST(ValueBound, CircleHolds) {
  const auto p = circle_problem();
  const auto r = value_bound_check(p, {vec({1, 0}), vec({0, -1})}, constant_policies(p.sys), 50, 1e-3, 8, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.estimates.size(), 2u);
}

TEST(ValueBound, CrossingFails) {
  const auto p = default_problem(catalog::system("halfspace-crossing").system, catalog::set("halfspace", 2));
  const auto r = value_bound_check(p, {vec({0, 0})}, constant_policies(p.sys), 50, 1e-3, 9, 4);
  EXPECT_FALSE(r.pass);
  for (std::size_t j = 0; j < r.policies.size(); ++j) EXPECT_GE(r.estimates[0][j] - 3 * r.stderrs[0][j], 0.05);
}

TEST(ValueBound, InwardDriftTight) {
  const auto e = catalog::system("inward-drift");
  const auto p = default_problem(e.system, catalog::set(e.default_set, 2));
  const auto r = value_bound_check(p, {vec({1, 0}), vec({0.2, 0.1})}, constant_policies(p.sys), 5, 1e-3, 10);
  EXPECT_TRUE(r.pass);
  for (const auto& row : r.estimates)
    for (double v : row) EXPECT_LE(v, 1e-6 + r.tail);
}

TEST(ValueBound, StartsMustLieInK) {
  const auto p = circle_problem();
  EXPECT_THROW(value_bound_check(p, {vec({2, 0})}, constant_policies(p.sys), 5, 1e-2, 11), InvalidArgument);
}
