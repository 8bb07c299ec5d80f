#pragma once

// Controlled diffusions dX = b(X,u) dt + sigma(X,u) dW, closed sets given as
// sublevel sets K = {g <= 0}, and the differential operators acting on C^2
// test functions.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invlab/types.hpp"

namespace invlab {

struct ControlSystem {
  std::string name;
  int n = 0;  // state dimension
  int d = 0;  // noise dimension
  int k = 0;  // control dimension (0 for uncontrolled systems)

  std::function<Vec(const Vec& x, const Vec& u)> drift;      // n
  std::function<Mat(const Vec& x, const Vec& u)> diffusion;  // n x d
  // Jacobian in x of column i of the diffusion (zero-based i), n x n.
  std::function<Mat(const Vec& x, const Vec& u, int i)> diffusion_jacobian;

  // Finite sample of the compact control set U; suprema over U are maxima here.
  std::vector<Vec> controls;

  // True when all derivatives are analytic; false for dual-number models.
  bool analytic_derivatives = true;

  /// Throws InvalidArgument on inconsistent dimensions or an empty control list.
  void validate() const;
};

struct ClosedSet {
  std::string name;
  int n = 0;
  std::function<double(const Vec&)> g;
  std::function<Vec(const Vec&)> dg;
  std::function<Mat(const Vec&)> d2g;
  // Analytic distance to K when available; otherwise projected descent is used.
  std::function<double(const Vec&)> exact_distance;
  // Scale of ambient samples used when scanning the boundary.
  double sample_radius = 2.0;

  bool contains(const Vec& x) const { return g(x) <= 0.0; }
  /// d_K(x); zero exactly when g(x) <= 0.
  double distance(const Vec& x) const;
};

struct TestFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

/// The canonical test function phi = g, maximal (= 0) over K at boundary points.
TestFunction test_function_from_set(const ClosedSet& set);

// --- evaluators with finiteness checks -------------------------------------

Vec eval_drift(const ControlSystem& sys, const Vec& x, const Vec& u);
Mat eval_diffusion(const ControlSystem& sys, const Vec& x, const Vec& u);
Mat eval_diffusion_jacobian(const ControlSystem& sys, const Vec& x, const Vec& u, int i);

// --- operators ---------------------------------------------------------------

/// b~(x,u) = b(x,u) - 1/2 sum_i Dsigma^i(x,u) sigma^i(x,u).
Vec stratonovich_drift(const ControlSystem& sys, const Vec& x, const Vec& u);

/// L phi = <b, Dphi> + 1/2 tr(D^2 phi sigma sigma^T).
double generator_second_order(const ControlSystem& sys, const TestFunction& phi,
                              const Vec& x, const Vec& u);

/// L' phi = <b~, Dphi>.
double generator_first_order(const ControlSystem& sys, const TestFunction& phi,
                             const Vec& x, const Vec& u);

/// sigma^i phi = <sigma^i, Dphi>, zero-based column i.
double sigma_apply(const ControlSystem& sys, const TestFunction& phi,
                   const Vec& x, const Vec& u, int i);

/// sigma^i sigma^j phi = <sigma^i, (Dsigma^j)^T Dphi + D^2 phi sigma^j>.
double sigma_second_apply(const ControlSystem& sys, const TestFunction& phi,
                          const Vec& x, const Vec& u, int i, int j);

/// A[i][j] = sigma^i sigma^j phi, left unsymmetrized.
Mat assemble_A_matrix(const ControlSystem& sys, const TestFunction& phi,
                      const Vec& x, const Vec& u);

// --- consistency checks ------------------------------------------------------

struct ConsistencyReport {
  double max_error = 0.0;
  bool pass = false;
};

/// Central differences of sigma columns against diffusion_jacobian.
ConsistencyReport check_diffusion_jacobian(const ControlSystem& sys,
                                           std::span<const Vec> probes,
                                           double tol = 1e-5, double h = 1e-6);

/// Gradient and Hessian of phi against central differences, plus Hessian symmetry.
ConsistencyReport check_test_function(const TestFunction& phi,
                                      std::span<const Vec> probes,
                                      double tol = 1e-5, double h = 1e-5);

/// Max Lipschitz quotients of b, sigma and Dsigma over sampled point pairs,
/// maximized over the control sample.
struct LipschitzSample {
  double drift = 0.0;
  double diffusion = 0.0;
  double jacobian = 0.0;
};
LipschitzSample sample_lipschitz(const ControlSystem& sys,
                                 std::span<const Vec> a, std::span<const Vec> b);

// --- set geometry --------------------------------------------------------------

struct Projection {
  Vec x;
  int iterations = 0;
  bool converged = false;
};

/// Newton projection x <- x - g(x) Dg / |Dg|^2 onto {g = 0}.
Projection newton_project(const ClosedSet& set, const Vec& x0, int max_iterations = 100);

/// Distance to K by alternating tangent moves and Newton projections until the
/// KKT condition x - y || Dg(y) holds. Used when no analytic distance exists.
double projected_distance(const ClosedSet& set, const Vec& x);

std::string format_point(const Vec& x);

}  // namespace invlab
