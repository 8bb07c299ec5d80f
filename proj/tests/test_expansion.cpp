#include <gtest/gtest.h>

#include <cmath>

#include "invlab/catalog.hpp"
#include "invlab/errors.hpp"
#include "invlab/expansion.hpp"
#include "invlab/numerics.hpp"
#include "support.hpp"

using namespace invlab;
using invlab::testing::vec;

namespace {

std::vector<RemainderSample> synthetic(double t, double r, std::size_t n) {
  return std::vector<RemainderSample>(n, RemainderSample{t, r, 0});
}

TaylorCoefficients from_A(const Mat& a, Vec alpha, double delta) {
  Mat gamma = a;
  gamma.diagonal().setZero();
  return make_coefficients(std::move(alpha), 0.5 * a.diagonal(), gamma, delta);
}

ControlSystem unit_noise_line() {
  return invlab::testing::constant_noise([](const Vec&) { return Vec(Vec::Zero(1)); }, Mat::Ones(1, 1));
}

}  // namespace

TEST(TaylorCoefficients, CircleOnBoundaryVanishes) {
  const auto sys = catalog::system("circle").system;
  const TestFunction g = test_function_from_set(catalog::set("disk", 2));
  const auto c = taylor_coefficients(sys, g, vec({1, 0}), Vec());
  EXPECT_EQ(c.d(), 1);
  EXPECT_NEAR(c.alpha(0), 0.0, 1e-15);
  EXPECT_NEAR(c.beta(0), 0.0, 1e-15);
  EXPECT_EQ(c.gamma, Mat::Zero(1, 1));
  EXPECT_NEAR(c.delta, 0.0, 1e-15);
  EXPECT_NEAR(assemble_A(c)(0, 0), 0.0, 1e-15);
}

TEST(TaylorCoefficients, NoNoise) {
  const auto sys = invlab::testing::drift_only(2, [](const Vec& x) { return vec({x(1), 2.0}); });
  const TestFunction phi = invlab::testing::quadratic(Mat::Identity(2, 2), vec({1, -1}));
  const Vec x = vec({0.5, 0.25});
  const auto c = taylor_coefficients(sys, phi, x, Vec());
  EXPECT_EQ(c.alpha, Vec::Zero(1));
  EXPECT_EQ(c.beta, Vec::Zero(1));
  EXPECT_EQ(c.gamma, Mat::Zero(1, 1));
  EXPECT_DOUBLE_EQ(c.delta, sys.drift(x, Vec()).dot(phi.grad(x)));
}

TEST(TaylorCoefficients, AdditiveUnitNoise) {
  const TestFunction id = invlab::testing::quadratic(Mat::Zero(1, 1), vec({1}));
  const auto c = taylor_coefficients(unit_noise_line(), id, vec({0}), Vec());
  EXPECT_EQ(c.alpha, vec({1}));
  EXPECT_EQ(c.beta, vec({0}));
  EXPECT_EQ(c.delta, 0.0);
}

TEST(TaylorCoefficients, ValidatesRawInput) {
  EXPECT_NO_THROW(make_coefficients(vec({0, 0}), vec({0, 0}), Mat::Zero(2, 2), 0));
  EXPECT_THROW(make_coefficients(vec({0, 0}), vec({0}), Mat::Zero(2, 2), 0), InvalidArgument);
  EXPECT_THROW(make_coefficients(vec({0, 0}), vec({0, 0}), Mat::Identity(2, 2), 0), InvalidArgument);
  EXPECT_THROW(make_coefficients(vec({0}), vec({0}), Mat::Zero(1, 1), std::nan("")), InvalidArgument);
}

TEST(AssembleA, Examples) {
  EXPECT_EQ(assemble_A(make_coefficients(vec({0}), vec({-1}), Mat::Zero(1, 1), 0)), Mat::Constant(1, 1, -2));
  const Mat g = (Mat(2, 2) << 0, 1, 1, 0).finished();
  const auto c = make_coefficients(vec({0, 0}), vec({0, 0}), g, 0);
  EXPECT_EQ(assemble_A(c), g);
  const auto v = lemma_conclusion_check(c, 1e-12);
  EXPECT_TRUE(v.gamma_symmetric);
  EXPECT_FALSE(v.A_nsd);
  EXPECT_NEAR(v.lambda_max, 1.0, 1e-12);
}

TEST(AssembleA, MatchesGeneratorMatrixOnCatalog) {
  std::mt19937_64 rng(31);
  for (const auto& name : catalog::system_names()) {
    const auto sys = catalog::system(name).system;
    for (int k = 0; k < 10; ++k) {
      const TestFunction phi = invlab::testing::quadratic(
          invlab::testing::gaussian(sys.n * sys.n, rng).reshaped(sys.n, sys.n), invlab::testing::gaussian(sys.n, rng));
      const Vec x = invlab::testing::gaussian(sys.n, rng);
      for (const Vec& u : sys.controls) {
        const Mat a = assemble_A(taylor_coefficients(sys, phi, x, u));
        EXPECT_LE((a - assemble_A_matrix(sys, phi, x, u)).cwiseAbs().maxCoeff(), 1e-8) << name;
      }
    }
  }
}

TEST(LemmaConclusions, Examples) {
  EXPECT_TRUE(lemma_conclusion_check(make_coefficients(vec({0}), vec({-1}), Mat::Zero(1, 1), -1), 1e-12).all());
  const auto a = lemma_conclusion_check(make_coefficients(vec({1, 0}), vec({0, 0}), Mat::Zero(2, 2), 0), 1e-12);
  EXPECT_FALSE(a.alpha_zero);
  EXPECT_EQ(a.max_alpha, 1.0);
  const auto g = lemma_conclusion_check(
      make_coefficients(vec({0, 0}), vec({0, 0}), (Mat(2, 2) << 0, 1, -1, 0).finished(), 0), 1e-12);
  EXPECT_FALSE(g.gamma_symmetric);
  EXPECT_EQ(g.gamma_asymmetry, 2.0);
  EXPECT_FALSE(lemma_conclusion_check(make_coefficients(vec({0}), vec({0}), Mat::Zero(1, 1), 0.5), 1e-12)
                   .delta_nonpositive);
}

TEST(LemmaConclusions, ToleranceIsMonotone) {
  const auto c = make_coefficients(vec({1e-6, 0}), vec({1e-7, 0}), (Mat(2, 2) << 0, 1e-5, 0, 0).finished(), 1e-9);
  bool prev = false;
  for (double tol : {0.0, 1e-9, 1e-7, 1e-6, 1e-5, 1e-3}) {
    const bool now = lemma_conclusion_check(c, tol).all();
    EXPECT_TRUE(now || !prev);
    prev = now;
  }
  EXPECT_TRUE(prev);
}

TEST(Falsifier, SignedNoise) {
  const auto r = lemma_falsifier(make_coefficients(vec({1}), vec({0}), Mat::Zero(1, 1), 0), {0.01}, 4000, 41, 4);
  EXPECT_GE(r.probabilities[0], 0.45);
  EXPECT_LE(r.probabilities[0], 0.55);
}

TEST(Falsifier, NegativeQuadratic) {
  const auto r = lemma_falsifier(make_coefficients(vec({0}), vec({-1}), Mat::Zero(1, 1), -1), {0.01, 0.1, 1}, 1000, 42, 4);
  for (double p : r.probabilities) EXPECT_LE(p, 0.01);
}

TEST(Falsifier, PositiveDrift) {
  const auto r = lemma_falsifier(make_coefficients(vec({0, 0}), vec({0, 0}), Mat::Zero(2, 2), 1), {0.01, 0.1, 1}, 1000, 43);
  for (double p : r.probabilities) EXPECT_EQ(p, 1.0);
  EXPECT_EQ(r.max_probability, 1.0);
  EXPECT_EQ(r.samples, 1000u);
}

TEST(Falsifier, SymmetricReduction) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat m = invlab::testing::gaussian(9, rng).reshaped(3, 3);
    const Mat a = -m * m.transpose();
    const double delta = -std::abs(invlab::testing::gaussian(1, rng)(0));
    const auto c = from_A(a, Vec::Zero(3), delta);
    ASSERT_TRUE(lemma_conclusion_check(c, 1e-10).all());
    const auto r = lemma_falsifier(c, {0.01, 0.1, 1}, 1000, numerics::rng_split(44, trial), 4);
    EXPECT_LE(r.max_probability, 0.02);
  }
}

TEST(Falsifier, AntisymmetricDetected) {
  const auto c = make_coefficients(vec({0, 0}), vec({0, 0}), (Mat(2, 2) << 0, 1, -1, 0).finished(), 0);
  const auto r = lemma_falsifier(c, {1}, 1000, 45, 4);
  EXPECT_GE(r.probabilities[0], 0.3);
}

TEST(Falsifier, StatisticMatchesDirectFormula) {
  const auto b = NoiseBundle::sample(2, TimeGrid(0.5, 0.5 / kFalsifierSteps), 46);
  const auto c = make_coefficients(vec({0.3, -1}), vec({2, -0.5}), (Mat(2, 2) << 0, 0.7, -0.2, 0).finished(), 1.5);
  const std::size_t k = b.grid().steps();
  const Vec w = b.w(k);
  const double expected = 0.3 * w(0) - w(1) + 2 * w(0) * w(0) - 0.5 * w(1) * w(1) + 0.7 * b.iterated(0, 1, k) -
                          0.2 * b.iterated(1, 0, k) + 1.5 * 0.5;
  EXPECT_NEAR(lemma_statistic(c, b), expected, 1e-12);
}

TEST(Falsifier, ThreadCountDoesNotChangeResult) {
  const auto c = make_coefficients(vec({0.1}), vec({-1}), Mat::Zero(1, 1), 0.01);
  const auto a = lemma_falsifier(c, {0.01, 0.1}, 1000, 47, 1);
  const auto b = lemma_falsifier(c, {0.01, 0.1}, 1000, 47, 4);
  EXPECT_EQ(a.probabilities, b.probabilities);
  EXPECT_THROW(lemma_falsifier(c, {0.1}, 999, 47), InvalidArgument);
  EXPECT_THROW(lemma_falsifier(c, {}, 1000, 47), InvalidArgument);
}

TEST(Remainder, ExactForLinearTestFunction) {
  const TestFunction id = invlab::testing::quadratic(Mat::Zero(1, 1), vec({1}));
  for (const auto& s : taylor_remainder_samples(unit_noise_line(), id, vec({0}), Vec(), 0.1, 50, 51))
    EXPECT_LE(std::abs(s.r), 1e-10);

  const auto push = invlab::testing::drift_only(2, [](const Vec&) { return vec({1, -2}); });
  const TestFunction aff = invlab::testing::quadratic(Mat::Zero(2, 2), vec({3, 1}));
  for (const auto& s : taylor_remainder_samples(push, aff, vec({0.5, 0.5}), Vec(), 0.05, 10, 52))
    EXPECT_LE(std::abs(s.r), 1e-10);

}

TEST(Remainder, StepCount) {
  EXPECT_EQ(remainder_steps(1.0), 1000u);
  EXPECT_EQ(remainder_steps(0.1), 1000u);
  EXPECT_EQ(remainder_steps(0.05), 2000u);
  EXPECT_EQ(remainder_steps(0.025), 4000u);
}

TEST(Remainder, SamplesAreSeeded) {
  const auto sys = catalog::system("circle").system;
  const TestFunction g = test_function_from_set(catalog::set("disk", 2));
  const auto a = taylor_remainder_samples(sys, g, vec({1, 0}), Vec(), 0.1, 20, 54, 1);
  const auto b = taylor_remainder_samples(sys, g, vec({1, 0}), Vec(), 0.1, 20, 54, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].r, b[i].r);
    EXPECT_EQ(a[i].seed, numerics::rng_split(54, i));
    EXPECT_EQ(a[i].t, 0.1);
  }
}

TEST(Remainder, CircleQuantileDecays) {
  const auto sys = catalog::system("circle").system;
  const TestFunction g = test_function_from_set(catalog::set("disk", 2));
  auto q90 = [&](double t) {
    std::vector<double> v;
    for (const auto& s : taylor_remainder_samples(sys, g, vec({1, 0}), Vec(), t, 400, 55, 4)) v.push_back(std::abs(s.r) / t);
    return numerics::quantile(v, 0.9);
  };
  EXPECT_GT(q90(0.1), q90(0.025));
}

TEST(DecayTest, SyntheticCases) {
  const auto zero = remainder_decay_test({synthetic(0.1, 0, 500), synthetic(0.05, 0, 500), synthetic(0.025, 0, 500)}, 0.1);
  EXPECT_TRUE(zero.pass);
  for (double p : zero.probabilities) EXPECT_EQ(p, 0.0);
  EXPECT_NEAR(zero.slack, 2 / std::sqrt(500.0), 1e-15);

  const auto linear =
      remainder_decay_test({synthetic(0.1, 0.1, 500), synthetic(0.05, 0.05, 500), synthetic(0.025, 0.025, 500)}, 0.5);
  EXPECT_FALSE(linear.pass);
  for (double p : linear.probabilities) EXPECT_EQ(p, 1.0);
}

TEST(DecayTest, RejectsBadInput) {
  EXPECT_THROW(remainder_decay_test({synthetic(0.1, 0, 500), synthetic(0.05, 0, 500)}, 0.1), InvalidArgument);
  EXPECT_THROW(remainder_decay_test({synthetic(0.1, 0, 500), synthetic(0.05, 0, 499), synthetic(0.02, 0, 500)}, 0.1),
               InvalidArgument);
  EXPECT_THROW(remainder_decay_test({synthetic(0.1, 0, 500), synthetic(0.1, 0, 500), synthetic(0.02, 0, 500)}, 0.1),
               InvalidArgument);
}

TEST(DecayTest, CircleRemainderPasses) {
  const auto sys = catalog::system("circle").system;
  const TestFunction g = test_function_from_set(catalog::set("disk", 2));
  std::vector<std::vector<RemainderSample>> groups;
  const std::vector<double> times = {0.1, 0.05, 0.025};
  for (std::size_t k = 0; k < times.size(); ++k)
    groups.push_back(taylor_remainder_samples(sys, g, vec({1, 0}), Vec(), times[k], 1000, numerics::rng_split(56, k), 4));
  EXPECT_TRUE(remainder_decay_test(groups, 0.1).pass);
}
