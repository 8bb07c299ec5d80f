#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "invlab/expr_models.hpp"
#include "invlab/exprlang.hpp"
#include "invlab/sde_core.hpp"

using namespace invlab;
using namespace invlab::expr;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

std::vector<Variable> all_x(int n) {
  std::vector<Variable> w;
  for (int i = 0; i < n; ++i) w.push_back(Variable::x(i));
  return w;
}

// Random expressions that are smooth on all of R^n (no abs, guarded log,
// sqrt, division and pow), built directly as source text.
class Generator {
 public:
  Generator(int n, int k, std::uint64_t seed) : n_(n), k_(k), rng_(seed) {}

  std::string operator()(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf();
    const std::string a = (*this)(depth - 1);
    switch (pick(14)) {
      case 0: return a + " + " + (*this)(depth - 1);
      case 1: return a + " - " + (*this)(depth - 1);
      case 2: return "(" + a + ") * (" + (*this)(depth - 1) + ")";
      case 3: return "(" + a + ") / (2 + sin(" + (*this)(depth - 1) + "))";
      case 4: return "-(" + a + ")";
      case 5: return "(" + a + ")^" + std::to_string(1 + pick(3));
      case 6: return "sin(" + a + ")";
      case 7: return "cos(" + a + ")";
      case 8: return "exp(tanh(" + a + "))";
      case 9: return "log(1 + (" + a + ")^2)";
      case 10: return "sqrt(1 + (" + a + ")^2)";
      case 11: return "tanh(" + a + ")";
      case 12: return "pow(1 + (" + a + ")^2, 0.5 * tanh(" + (*this)(depth - 1) + "))";
      default: return "(" + a + ") * x1";
    }
  }

 private:
  int pick(int m) { return std::uniform_int_distribution<int>(0, m - 1)(rng_); }

  std::string leaf() {
    switch (pick(3)) {
      case 0: return "x" + std::to_string(1 + pick(n_));
      case 1: return k_ > 0 ? "u" + std::to_string(1 + pick(k_)) : "x1";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", std::uniform_real_distribution<double>(-2, 2)(rng_));
        return buf;
      }
    }
  }

  int n_, k_;
  std::mt19937_64 rng_;
};

}  // namespace

TEST(Parse, TreeShapes) {
  EXPECT_EQ(parse("x1 + 2*x2", {2, 0}).tree(), "Add(x1, Mul(2, x2))");
  EXPECT_EQ(parse("-x2", {2, 0}).tree(), "Neg(x2)");
  EXPECT_EQ(parse("-x1^2", {2, 0}).tree(), "Neg(Pow(x1, 2))");
}

TEST(Parse, Associativity) {
  EXPECT_EQ(parse("x1 - x2 - 1", {2, 0}).tree(), "Sub(Sub(x1, x2), 1)");
  EXPECT_EQ(parse("x1 / x2 * 3", {2, 0}).tree(), "Mul(Div(x1, x2), 3)");
  EXPECT_EQ(parse("x1 ^ x2 ^ 2", {2, 0}).tree(), "Pow(x1, Pow(x2, 2))");
  EXPECT_EQ(parse("x1^-2", {1, 0}).tree(), "Pow(x1, Neg(2))");
  EXPECT_EQ(parse("2 + 3 * x1", {1, 0}).tree(), "Add(2, Mul(3, x1))");
}

TEST(Parse, WhitespaceInsensitive) {
  EXPECT_TRUE(parse(" x1+\n2 *\tx2 ", {2, 0}).structurally_equal(parse("x1+2*x2", {2, 0})));
}

TEST(Parse, UnknownIdentifierAtOffsetZero) {
  try {
    parse("x3", {2, 0});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_EQ(std::string(e.what()).rfind("1:1: ", 0), 0u) << e.what();
    EXPECT_NE(std::string(e.what()).find("x3"), std::string::npos);
  }
}

TEST(Parse, ErrorsCarryPositions) {
  try {
    parse("x1 +\n  * 2", {1, 0});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 2);
    EXPECT_EQ(e.pos().col, 3);
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("", {1, 0}), ParseError);
  EXPECT_THROW(parse("sin x1", {1, 0}), ParseError);
  EXPECT_THROW(parse("u1", {1, 0}), ParseError);
  EXPECT_THROW(parse("x0", {1, 0}), ParseError);
  EXPECT_THROW(parse("foo(x1)", {1, 0}), ParseError);
  EXPECT_THROW(parse("pow(x1)", {1, 0}), ParseError);
  EXPECT_THROW(parse("(x1", {1, 0}), ParseError);
  EXPECT_THROW(parse("x1 x1", {1, 0}), ParseError);
  EXPECT_THROW(parse("x99999999999999999999", {1, 0}), ParseError);
}

TEST(Parse, ErrorMessagesAreDeterministic) {
  std::string first, second;
  try { parse("x1 + )", {1, 0}); } catch (const ParseError& e) { first = e.what(); }
  try { parse("x1 + )", {1, 0}); } catch (const ParseError& e) { second = e.what(); }
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, second);
}

TEST(Parse, DepthLimit) {
  std::string deep(300, '(');
  deep += "x1";
  deep += std::string(300, ')');
  EXPECT_THROW(parse(deep, {1, 0}), ParseError);
  std::string ok(100, '(');
  ok += "x1" + std::string(100, ')');
  EXPECT_NO_THROW(parse(ok, {1, 0}));
}

TEST(Eval, Examples) {
  const Expr sq = parse("x1*x1", {1, 0});
  const auto d = eval_dual(sq, Vec::Constant(1, 3.0), Vec(), all_x(1));
  EXPECT_EQ(d.value, 9.0);
  EXPECT_EQ(d.partials[0], 6.0);
  const auto s = eval_dual(parse("sin(x1)", {1, 0}), Vec::Zero(1), Vec(), all_x(1));
  EXPECT_EQ(s.value, 0.0);
  EXPECT_EQ(s.partials[0], 1.0);
}

TEST(Eval, ControlsAndFunctions) {
  const Expr e = parse("u1 * exp(x1) + pow(x2, 3) - abs(u2) + sqrt(4) + log(exp(1)) + tanh(0) + cos(0)", {2, 2});
  const Vec x = v2(0.5, 2.0), u = v2(3.0, -1.5);
  EXPECT_NEAR(eval(e, x, u), 3.0 * std::exp(0.5) + 8.0 - 1.5 + 2.0 + 1.0 + 0.0 + 1.0, 1e-14);
  const auto d = eval_dual(e, x, u, {Variable::x(0), Variable::x(1), Variable::u(0), Variable::u(1)});
  EXPECT_NEAR(d.partials[0], 3.0 * std::exp(0.5), 1e-14);
  EXPECT_NEAR(d.partials[1], 12.0, 1e-13);
  EXPECT_NEAR(d.partials[2], std::exp(0.5), 1e-14);
  EXPECT_NEAR(d.partials[3], 1.0, 1e-14);
}

TEST(Eval, DomainErrorsNameSubexpression) {
  try {
    eval(parse("x1 + log(x1 - 1)", {1, 0}), Vec::Constant(1, 1.0), Vec());
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.pos().offset, 5u);
    EXPECT_EQ(std::string(e.what()).rfind("1:6: ", 0), 0u) << e.what();
  }
  EXPECT_THROW(eval(parse("1 / x1", {1, 0}), Vec::Zero(1), Vec()), DomainError);
  EXPECT_THROW(eval(parse("sqrt(x1)", {1, 0}), Vec::Constant(1, -1.0), Vec()), DomainError);
  EXPECT_THROW(eval(parse("pow(x1, 0.5)", {1, 0}), Vec::Constant(1, -1.0), Vec()), DomainError);
  EXPECT_THROW(eval(parse("x1", {1, 0}), Vec::Constant(1, std::nan("")), Vec()), Error);
}

TEST(Eval, ValueMatchesDualBitForBit) {
  Generator gen(3, 2, 11);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  for (int i = 0; i < 300; ++i) {
    const Expr e = parse(gen(5), {3, 2});
    const Vec x = (Vec(3) << n(rng), n(rng), n(rng)).finished();
    const Vec u = v2(n(rng), n(rng));
    EXPECT_EQ(eval(e, x, u), eval_dual(e, x, u, all_x(3)).value) << e.source();
    EXPECT_EQ(eval(e, x, u), eval_second_order(e, x, u).value) << e.source();
  }
}

TEST(Eval, DualPartialsMatchFiniteDifferences) {
  Generator gen(3, 1, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n;
  const double h = 1e-6;
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Expr e = parse(gen(6), {3, 1});
    const Vec x = (Vec(3) << n(rng), n(rng), n(rng)).finished();
    const Vec u = Vec::Constant(1, n(rng));
    const auto d = eval_dual(e, x, u, {Variable::x(0), Variable::x(1), Variable::x(2), Variable::u(0)});
    if (std::abs(d.value) > 1e6) continue;
    for (int j = 0; j < 4; ++j) {
      Vec xp = x, xm = x, up = u, um = u;
      if (j < 3) {
        xp(j) += h;
        xm(j) -= h;
      } else {
        up(0) += h;
        um(0) -= h;
      }
      const double fd = (eval(e, xp, up) - eval(e, xm, um)) / (2 * h);
      const double p = d.partials[static_cast<std::size_t>(j)];
      EXPECT_LE(std::abs(fd - p) / std::max(1.0, std::abs(p)), 1e-5) << e.source() << " j=" << j;
    }
    ++checked;
  }
  EXPECT_GE(checked, 950);
}

TEST(Eval, SecondOrderMatchesFiniteDifferences) {
  Generator gen(2, 0, 31);
  std::mt19937_64 rng(32);
  std::normal_distribution<double> n;
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(gen(4), {2, 0});
    const Vec x = v2(n(rng), n(rng));
    const SecondOrder s = eval_second_order(e, x, Vec());
    if (std::abs(s.value) > 1e4) continue;
    EXPECT_LE((s.hessian - s.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, s.hessian.norm()));
    for (int j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const Vec gp = eval_second_order(e, xp, Vec()).gradient;
      const Vec gm = eval_second_order(e, xm, Vec()).gradient;
      const Vec fd = (gp - gm) / (2 * h);
      EXPECT_LE((fd - s.hessian.col(j)).cwiseAbs().maxCoeff() / std::max(1.0, s.hessian.cwiseAbs().maxCoeff()), 1e-5)
          << e.source();
    }
  }
}

TEST(Print, ParsePrintParseIdempotent) {
  Generator gen(3, 2, 41);
  for (int i = 0; i < 500; ++i) {
    const Expr a = parse(gen(6), {3, 2});
    const Expr b = parse(a.print(), {3, 2});
    EXPECT_TRUE(a.structurally_equal(b)) << a.source() << "  ->  " << a.print();
    EXPECT_EQ(a.print(), b.print());
  }
}

TEST(Print, ConstantsRoundTrip) {
  const Expr a = parse("0.1 + 1e-300 * x1 - 3.0000000000000004", {1, 0});
  EXPECT_TRUE(a.structurally_equal(parse(a.print(), {1, 0})));
}

TEST(ExpressionModels, CircleDiffusionJacobian) {
  SystemSource src;
  src.n = 2;
  src.d = 1;
  src.drift = {"-x1/2", "-x2/2"};
  src.diffusion = {{"-x2"}, {"x1"}};
  const ControlSystem sys = expression_system(src);
  const Vec x = v2(0.6, 0.8);
  const Vec u;
  const Vec s = eval_diffusion(sys, x, sys.controls[0]).col(0);
  const Vec ds = eval_diffusion_jacobian(sys, x, sys.controls[0], 0) * s;
  EXPECT_NEAR(ds(0), -0.6, 1e-15);
  EXPECT_NEAR(ds(1), -0.8, 1e-15);
}

TEST(ExpressionModels, AbsRejectedInDiffusionAndSet) {
  SystemSource src;
  src.n = 1;
  src.d = 1;
  src.drift = {"abs(x1)"};
  src.diffusion = {{"abs(x1)"}};
  EXPECT_THROW(expression_system(src), InvalidArgument);
  src.diffusion = {{"1"}};
  EXPECT_NO_THROW(expression_system(src));
  EXPECT_THROW(expression_set("s", 1, "abs(x1) - 1"), InvalidArgument);
  EXPECT_EQ(expression_scalar(1, "abs(x1)")(Vec::Constant(1, -2.0)), 2.0);
}

TEST(Parse, TreeDepthLimit) {
  std::string chain = "x1";
  for (int i = 0; i < 300; ++i) chain += " + x1";
  EXPECT_THROW(parse(chain, {1, 0}), ParseError);
  std::string negs(300, '-');
  EXPECT_THROW(parse(negs + "x1", {1, 0}), ParseError);
  EXPECT_LE(parse(std::string(200, '-') + "x1", {1, 0}).depth(), kMaxDepth);
}
