#pragma once

// Small builders shared by the test suites.

#include <functional>
#include <random>
#include <vector>

#include "invlab/sde_core.hpp"

namespace invlab::testing {

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// System with x-independent control sample {()} and the given fields.
inline ControlSystem make_system(int n, int d, std::function<Vec(const Vec&)> b,
                                 std::function<Mat(const Vec&)> s,
                                 std::function<Mat(const Vec&, int)> ds) {
  ControlSystem sys;
  sys.name = "test";
  sys.n = n;
  sys.d = d;
  sys.k = 0;
  sys.drift = [b](const Vec& x, const Vec&) { return b(x); };
  sys.diffusion = [s](const Vec& x, const Vec&) { return s(x); };
  sys.diffusion_jacobian = [ds](const Vec& x, const Vec&, int i) { return ds(x, i); };
  sys.controls = {Vec()};
  return sys;
}

// sigma == 0 with d = 1.
inline ControlSystem drift_only(int n, std::function<Vec(const Vec&)> b) {
  return make_system(
      n, 1, std::move(b), [n](const Vec&) { return Mat(Mat::Zero(n, 1)); },
      [n](const Vec&, int) { return Mat(Mat::Zero(n, n)); });
}

// Constant diffusion matrix.
inline ControlSystem constant_noise(std::function<Vec(const Vec&)> b, Mat sigma) {
  const int n = static_cast<int>(sigma.rows());
  const int d = static_cast<int>(sigma.cols());
  return make_system(
      n, d, std::move(b), [sigma](const Vec&) { return sigma; },
      [n](const Vec&, int) { return Mat(Mat::Zero(n, n)); });
}

// phi(x) = 1/2 x^T Q x + c^T x.
inline TestFunction quadratic(Mat q, Vec c) {
  const Mat qs = 0.5 * (q + q.transpose());
  return TestFunction{[qs, c](const Vec& x) { return 0.5 * x.dot(qs * x) + c.dot(x); },
                      [qs, c](const Vec& x) -> Vec { return qs * x + c; },
                      [qs](const Vec&) -> Mat { return qs; }};
}

inline Vec gaussian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * g(rng);
  return v;
}

// Half-space {x1 <= 0} in R^2.
inline ClosedSet halfspace() {
  ClosedSet s;
  s.name = "halfspace";
  s.n = 2;
  s.g = [](const Vec& x) { return x(0); };
  s.dg = [](const Vec&) { return vec({1.0, 0.0}); };
  s.d2g = [](const Vec&) { return Mat(Mat::Zero(2, 2)); };
  s.exact_distance = [](const Vec& x) { return std::max(x(0), 0.0); };
  return s;
}

}  // namespace invlab::testing
