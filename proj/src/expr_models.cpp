#include "invlab/expr_models.hpp"

#include <memory>

namespace invlab {
namespace {

std::vector<expr::Variable> state_variables(int n) {
  std::vector<expr::Variable> wrt;
  for (int i = 0; i < n; ++i) wrt.push_back(expr::Variable::x(i));
  return wrt;
}

}  // namespace

ControlSystem expression_system(const SystemSource& src) {
  if (src.n <= 0 || src.d <= 0 || src.k < 0) {
    throw InvalidArgument("expression system needs n >= 1, d >= 1, k >= 0");
  }
  if (static_cast<int>(src.drift.size()) != src.n) {
    throw InvalidArgument("drift has " + std::to_string(src.drift.size()) + " entries, expected n = " +
                          std::to_string(src.n));
  }
  if (static_cast<int>(src.diffusion.size()) != src.n) {
    throw InvalidArgument("diffusion has " + std::to_string(src.diffusion.size()) +
                          " rows, expected n = " + std::to_string(src.n));
  }
  const expr::Dims dims{src.n, src.k};
  auto drift = std::make_shared<std::vector<expr::Expr>>();
  auto diffusion = std::make_shared<std::vector<std::vector<expr::Expr>>>();
  for (const auto& s : src.drift) drift->push_back(expr::parse(s, dims));
  for (std::size_t r = 0; r < src.diffusion.size(); ++r) {
    const auto& row = src.diffusion[r];
    if (static_cast<int>(row.size()) != src.d) {
      throw InvalidArgument("diffusion row " + std::to_string(r) + " has " +
                            std::to_string(row.size()) + " entries, expected d = " +
                            std::to_string(src.d));
    }
    std::vector<expr::Expr> parsed;
    for (const auto& s : row) {
      parsed.push_back(expr::parse(s, dims));
      if (parsed.back().uses(expr::Op::kAbs)) {
        throw InvalidArgument("diffusion entry '" + s +
                              "' uses abs, which is not allowed where derivatives are required");
      }
    }
    diffusion->push_back(std::move(parsed));
  }

  ControlSystem sys;
  sys.name = src.name;
  sys.n = src.n;
  sys.d = src.d;
  sys.k = src.k;
  sys.analytic_derivatives = false;
  sys.drift = [drift](const Vec& x, const Vec& u) -> Vec {
    Vec b(static_cast<Eigen::Index>(drift->size()));
    for (std::size_t i = 0; i < drift->size(); ++i) {
      b(static_cast<Eigen::Index>(i)) = expr::eval((*drift)[i], x, u);
    }
    return b;
  };
  const int n = src.n;
  const int d = src.d;
  sys.diffusion = [diffusion, n, d](const Vec& x, const Vec& u) -> Mat {
    Mat m(n, d);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) {
        m(r, c) = expr::eval((*diffusion)[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], x, u);
      }
    }
    return m;
  };
  const auto wrt = state_variables(n);
  sys.diffusion_jacobian = [diffusion, n, wrt](const Vec& x, const Vec& u, int i) -> Mat {
    Mat j(n, n);
    for (int r = 0; r < n; ++r) {
      const auto dual = expr::eval_dual(
          (*diffusion)[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)], x, u, wrt);
      for (int c = 0; c < n; ++c) j(r, c) = dual.partials[static_cast<std::size_t>(c)];
    }
    return j;
  };
  sys.controls = src.controls.empty() ? std::vector<Vec>{Vec::Zero(src.k)} : src.controls;
  sys.validate();
  return sys;
}

ClosedSet expression_set(const std::string& name, int n, const std::string& g,
                         double sample_radius) {
  auto e = std::make_shared<expr::Expr>(expr::parse(g, expr::Dims{n, 0}));
  if (e->uses(expr::Op::kAbs)) {
    throw InvalidArgument("set function '" + g +
                          "' uses abs, which is not allowed where derivatives are required");
  }
  const Vec none(0);
  ClosedSet k;
  k.name = name;
  k.n = n;
  k.g = [e, none](const Vec& x) { return expr::eval(*e, x, none); };
  k.dg = [e, none](const Vec& x) -> Vec { return expr::eval_second_order(*e, x, none).gradient; };
  k.d2g = [e, none](const Vec& x) -> Mat { return expr::eval_second_order(*e, x, none).hessian; };
  k.sample_radius = sample_radius;
  return k;
}

TestFunction expression_test_function(int n, const std::string& source) {
  auto e = std::make_shared<expr::Expr>(expr::parse(source, expr::Dims{n, 0}));
  const Vec none(0);
  return TestFunction{
      [e, none](const Vec& x) { return expr::eval(*e, x, none); },
      [e, none](const Vec& x) -> Vec { return expr::eval_second_order(*e, x, none).gradient; },
      [e, none](const Vec& x) -> Mat { return expr::eval_second_order(*e, x, none).hessian; }};
}

std::function<double(const Vec&)> expression_scalar(int n, const std::string& source) {
  auto e = std::make_shared<expr::Expr>(expr::parse(source, expr::Dims{n, 0}));
  const Vec none(0);
  return [e, none](const Vec& x) { return expr::eval(*e, x, none); };
}

}  // namespace invlab
