#pragma once

// Monte-Carlo estimates of the discounted cost E int_0^inf e^{-Cs} g(X_s) ds
// for fixed policies, truncated at T_trunc with the tail bounded separately.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "invlab/paths.hpp"
#include "invlab/sde_core.hpp"

namespace invlab {

struct DiscountedProblem {
  ControlSystem sys;
  ClosedSet set;
  std::function<double(const Vec&)> cost;  // values in [0, 1], zero exactly on K
  double discount = 1.0;                   // C >= 1
  double horizon = 10.0;                   // T_trunc

  /// f(x) = 1 - 1_K(x).
  double bound(const Vec& x) const { return set.contains(x) ? 0.0 : 1.0; }
  /// e^{-C T_trunc} / C.
  double tail() const;
  void validate() const;
};

/// g_cost = min(d_K, 1), C = 1, T_trunc = 10.
DiscountedProblem default_problem(ControlSystem sys, ClosedSet set);

struct CostEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail = 0.0;
  std::size_t paths = 0;
};

/// Trapezoid quadrature of e^{-Cs} g_cost(X_s) along Euler paths; path i uses
/// rng_split(seed, i). Throws DivergenceError if a path blows up.
CostEstimate discounted_cost_estimate(const DiscountedProblem& prob, const Vec& x0,
                                      const Policy& policy, std::size_t N, double dt,
                                      std::uint64_t seed, int threads = 1);

struct NamedPolicy {
  std::string name;
  Policy policy;
};

/// One named constant policy per control in the sample of U.
std::vector<NamedPolicy> constant_policies(const ControlSystem& sys);

struct ValueBoundReport {
  std::vector<Vec> starts;
  std::vector<std::string> policies;
  std::vector<std::vector<double>> estimates;  // [start][policy]
  std::vector<std::vector<double>> stderrs;
  double tail = 0.0;
  double slack = 0.02;
  double worst = 0.0;  // max of estimate - 3 stderr - tail
  bool pass = false;
};

/// Passes iff max over starts and policies of (estimate - 3 stderr - tail) <= slack.
/// Starts must lie in K. Start s, policy p uses seed rng_split(seed, s * P + p).
ValueBoundReport value_bound_check(const DiscountedProblem& prob, const std::vector<Vec>& starts,
                                   const std::vector<NamedPolicy>& policies, std::size_t N,
                                   double dt, std::uint64_t seed, int threads = 1,
                                   double slack = 0.02);

}  // namespace invlab
