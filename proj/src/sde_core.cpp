#include "invlab/sde_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "invlab/errors.hpp"

namespace invlab {

std::string format_point(const Vec& x) {
  std::string out = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x(i));
    out += (i ? ", " : "") + std::string(buf);
  }
  return out + ")";
}

void ControlSystem::validate() const {
  if (n <= 0 || d <= 0 || k < 0) {
    throw InvalidArgument("system '" + name + "': dimensions must satisfy n >= 1, d >= 1, k >= 0");
  }
  if (!drift || !diffusion || !diffusion_jacobian) {
    throw InvalidArgument("system '" + name + "': missing evaluator");
  }
  if (controls.empty()) {
    throw InvalidArgument("system '" + name + "': control sample is empty");
  }
  for (const Vec& u : controls) {
    if (u.size() != k) {
      throw InvalidArgument("system '" + name + "': control point of size " +
                            std::to_string(u.size()) + ", expected " + std::to_string(k));
    }
  }
}

double ClosedSet::distance(const Vec& x) const {
  if (exact_distance) return exact_distance(x);
  return projected_distance(*this, x);
}

TestFunction test_function_from_set(const ClosedSet& set) {
  return TestFunction{set.g, set.dg, set.d2g};
}

namespace {

void require_finite(bool ok, const char* what, const ControlSystem& sys, const Vec& x) {
  if (!ok) {
    throw EvaluationError("system '" + sys.name + "': non-finite " + what + " at x = " +
                          format_point(x));
  }
}

void require_column(const ControlSystem& sys, int i) {
  if (i < 0 || i >= sys.d) {
    throw InvalidArgument("noise column index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(sys.d) + ")");
  }
}

}  // namespace

Vec eval_drift(const ControlSystem& sys, const Vec& x, const Vec& u) {
  Vec b = sys.drift(x, u);
  require_finite(b.size() == sys.n && b.allFinite(), "drift", sys, x);
  return b;
}

Mat eval_diffusion(const ControlSystem& sys, const Vec& x, const Vec& u) {
  Mat s = sys.diffusion(x, u);
  require_finite(s.rows() == sys.n && s.cols() == sys.d && s.allFinite(), "diffusion", sys, x);
  return s;
}

Mat eval_diffusion_jacobian(const ControlSystem& sys, const Vec& x, const Vec& u, int i) {
  require_column(sys, i);
  Mat j = sys.diffusion_jacobian(x, u, i);
  require_finite(j.rows() == sys.n && j.cols() == sys.n && j.allFinite(),
                 "diffusion Jacobian", sys, x);
  return j;
}

Vec stratonovich_drift(const ControlSystem& sys, const Vec& x, const Vec& u) {
  Vec out = eval_drift(sys, x, u);
  const Mat s = eval_diffusion(sys, x, u);
  Vec correction = Vec::Zero(sys.n);
  for (int i = 0; i < sys.d; ++i) {
    correction += eval_diffusion_jacobian(sys, x, u, i) * s.col(i);
  }
  out -= 0.5 * correction;
  return out;
}

double generator_second_order(const ControlSystem& sys, const TestFunction& phi,
                              const Vec& x, const Vec& u) {
  const Vec b = eval_drift(sys, x, u);
  const Mat s = eval_diffusion(sys, x, u);
  const Vec grad = phi.grad(x);
  const Mat hess = phi.hess(x);
  const double value = b.dot(grad) + 0.5 * (hess * s * s.transpose()).trace();
  require_finite(std::isfinite(value), "second-order generator", sys, x);
  return value;
}

double generator_first_order(const ControlSystem& sys, const TestFunction& phi,
                             const Vec& x, const Vec& u) {
  const double value = stratonovich_drift(sys, x, u).dot(phi.grad(x));
  require_finite(std::isfinite(value), "first-order generator", sys, x);
  return value;
}

double sigma_apply(const ControlSystem& sys, const TestFunction& phi, const Vec& x,
                   const Vec& u, int i) {
  require_column(sys, i);
  return eval_diffusion(sys, x, u).col(i).dot(phi.grad(x));
}

double sigma_second_apply(const ControlSystem& sys, const TestFunction& phi,
                          const Vec& x, const Vec& u, int i, int j) {
  require_column(sys, i);
  require_column(sys, j);
  const Mat s = eval_diffusion(sys, x, u);
  const Vec grad = phi.grad(x);
  const Vec d_sigma_j_phi =
      eval_diffusion_jacobian(sys, x, u, j).transpose() * grad + phi.hess(x) * s.col(j);
  return s.col(i).dot(d_sigma_j_phi);
}

Mat assemble_A_matrix(const ControlSystem& sys, const TestFunction& phi, const Vec& x,
                      const Vec& u) {
  const Mat s = eval_diffusion(sys, x, u);
  const Vec grad = phi.grad(x);
  const Mat hess = phi.hess(x);
  // Column j holds D<sigma^j, Dphi>; row i projects it on sigma^i.
  Mat derivs(sys.n, sys.d);
  for (int j = 0; j < sys.d; ++j) {
    derivs.col(j) = eval_diffusion_jacobian(sys, x, u, j).transpose() * grad + hess * s.col(j);
  }
  Mat a = s.transpose() * derivs;
  require_finite(a.allFinite(), "A matrix", sys, x);
  return a;
}

ConsistencyReport check_diffusion_jacobian(const ControlSystem& sys,
                                           std::span<const Vec> probes, double tol,
                                           double h) {
  ConsistencyReport report;
  for (const Vec& u : sys.controls) {
    for (const Vec& x : probes) {
      for (int i = 0; i < sys.d; ++i) {
        const Mat jac = eval_diffusion_jacobian(sys, x, u, i);
        for (int c = 0; c < sys.n; ++c) {
          Vec xp = x;
          Vec xm = x;
          xp(c) += h;
          xm(c) -= h;
          const Vec fd = (eval_diffusion(sys, xp, u).col(i) - eval_diffusion(sys, xm, u).col(i)) /
                         (2.0 * h);
          const double err = (fd - jac.col(c)).cwiseAbs().maxCoeff() /
                             std::max(1.0, jac.col(c).cwiseAbs().maxCoeff());
          report.max_error = std::max(report.max_error, err);
        }
      }
    }
  }
  report.pass = report.max_error <= tol;
  return report;
}

ConsistencyReport check_test_function(const TestFunction& phi, std::span<const Vec> probes,
                                      double tol, double h) {
  ConsistencyReport report;
  for (const Vec& x : probes) {
    const Vec grad = phi.grad(x);
    const Mat hess = phi.hess(x);
    const double asym = (hess - hess.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) report.max_error = std::max(report.max_error, asym);
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      Vec xp = x;
      Vec xm = x;
      xp(c) += h;
      xm(c) -= h;
      const double fd = (phi.value(xp) - phi.value(xm)) / (2.0 * h);
      report.max_error = std::max(report.max_error,
                                  std::abs(fd - grad(c)) / std::max(1.0, std::abs(grad(c))));
      const Vec fd_col = (phi.grad(xp) - phi.grad(xm)) / (2.0 * h);
      report.max_error =
          std::max(report.max_error, (fd_col - hess.col(c)).cwiseAbs().maxCoeff() /
                                         std::max(1.0, hess.col(c).cwiseAbs().maxCoeff()));
    }
  }
  report.pass = report.max_error <= tol;
  return report;
}

LipschitzSample sample_lipschitz(const ControlSystem& sys, std::span<const Vec> a,
                                 std::span<const Vec> b) {
  LipschitzSample out;
  const std::size_t pairs = std::min(a.size(), b.size());
  for (const Vec& u : sys.controls) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const double dx = (a[p] - b[p]).norm();
      if (dx == 0.0) continue;
      out.drift = std::max(out.drift, (eval_drift(sys, a[p], u) - eval_drift(sys, b[p], u)).norm() / dx);
      out.diffusion = std::max(
          out.diffusion, (eval_diffusion(sys, a[p], u) - eval_diffusion(sys, b[p], u)).norm() / dx);
      for (int i = 0; i < sys.d; ++i) {
        out.jacobian = std::max(out.jacobian, (eval_diffusion_jacobian(sys, a[p], u, i) -
                                               eval_diffusion_jacobian(sys, b[p], u, i))
                                                      .norm() /
                                                  dx);
      }
    }
  }
  return out;
}

Projection newton_project(const ClosedSet& set, const Vec& x0, int max_iterations) {
  Projection p{x0, 0, false};
  for (; p.iterations < max_iterations; ++p.iterations) {
    const double gv = set.g(p.x);
    if (!std::isfinite(gv)) return p;
    if (gv == 0.0) {
      p.converged = true;
      return p;
    }
    const Vec grad = set.dg(p.x);
    const double g2 = grad.squaredNorm();
    if (!(g2 > 0.0) || !std::isfinite(g2)) return p;
    const Vec step = (gv / g2) * grad;
    p.x -= step;
    if (step.norm() <= 1e-15 * std::max(1.0, p.x.norm())) {
      ++p.iterations;
      p.converged = true;
      return p;
    }
  }
  return p;
}

double projected_distance(const ClosedSet& set, const Vec& x) {
  if (set.g(x) <= 0.0) return 0.0;
  Projection p = newton_project(set, x);
  if (!p.converged) {
    throw EvaluationError("set '" + set.name + "': cannot project " + format_point(x) +
                          " onto the boundary");
  }
  Vec y = p.x;
  for (int it = 0; it < 200; ++it) {
    const Vec grad = set.dg(y);
    const double gn = grad.norm();
    if (!(gn > 0.0)) break;
    const Vec normal = grad / gn;
    const Vec r = x - y;
    const Vec tangent = r - r.dot(normal) * normal;
    if (tangent.norm() <= 1e-12 * std::max(1.0, r.norm())) break;
    Projection next = newton_project(set, y + tangent);
    if (!next.converged) break;
    y = next.x;
  }
  return (x - y).norm();
}

}  // namespace invlab
