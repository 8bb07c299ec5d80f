#pragma once

// Second-order stochastic Taylor expansion of phi(X_t) for a constant control,
//
//   phi(X_t) = phi(x) + sum_i alpha_i W^i_t + sum_i beta_i (W^i_t)^2
//            + sum_{i != j} gamma_ij int_0^t W^i dW^j + delta t + R_t,
//
// and the quadratic-form inequality built from the same coefficients.

#include <cstdint>
#include <vector>

#include "invlab/paths.hpp"
#include "invlab/sde_core.hpp"

namespace invlab {

struct TaylorCoefficients {
  Vec alpha;     // sigma^i phi
  Vec beta;      // 1/2 sigma^i sigma^i phi
  Mat gamma;     // sigma^i sigma^j phi off the diagonal, zero diagonal
  double delta = 0.0;  // L' phi

  int d() const { return static_cast<int>(alpha.size()); }
};

/// Coefficients at (x, u). gamma(i, j) multiplies int W^i dW^j and equals
/// sigma_second_apply(i, j), so assemble_A reproduces assemble_A_matrix.
TaylorCoefficients taylor_coefficients(const ControlSystem& sys, const TestFunction& phi,
                                       const Vec& x, const Vec& u);

/// Builds coefficients from raw values; gamma's diagonal must be zero.
TaylorCoefficients make_coefficients(Vec alpha, Vec beta, Mat gamma, double delta);

struct RemainderSample {
  double t = 0.0;
  double r = 0.0;
  std::uint64_t seed = 0;
};

/// Euler grid used for remainder samples at time t: at least 1000 steps and
/// dt <= t^2 / 100, so the scheme's contribution to R_t / t shrinks with t.
std::size_t remainder_steps(double t);

/// N samples of R_t. Sample i uses the stream rng_split(seed, i).
std::vector<RemainderSample> taylor_remainder_samples(const ControlSystem& sys,
                                                      const TestFunction& phi,
                                                      const Vec& x, const Vec& u,
                                                      double t, std::size_t N,
                                                      std::uint64_t seed, int threads = 1);

struct DecayReport {
  std::vector<double> times;
  std::vector<double> probabilities;  // P[|R_t| / t > eps]
  double epsilon = 0.0;
  double slack = 0.0;                 // 2 / sqrt(min N)
  double p_max = 0.0;
  bool pass = false;
};

/// groups[k] holds the samples for times[k]; times strictly decreasing.
/// Passes when the exceedance probabilities are nonincreasing within
/// 2/sqrt(N) and the last one is at most p_max.
DecayReport remainder_decay_test(const std::vector<std::vector<RemainderSample>>& groups,
                                 double epsilon, double p_max = 0.05);

/// A_ii = 2 beta_i, A_ij = gamma_ij.
Mat assemble_A(const TaylorCoefficients& c);

struct LemmaVerdict {
  bool alpha_zero = false;
  bool gamma_symmetric = false;
  bool A_nsd = false;
  bool delta_nonpositive = false;
  double max_alpha = 0.0;
  double gamma_asymmetry = 0.0;
  double lambda_max = 0.0;

  bool all() const { return alpha_zero && gamma_symmetric && A_nsd && delta_nonpositive; }
};

LemmaVerdict lemma_conclusion_check(const TaylorCoefficients& c, double tol);

struct FalsifierReport {
  std::vector<double> times;
  std::vector<double> probabilities;  // estimates of P[S_t > 0]
  double max_probability = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Steps per sample path on [0, t] used by the falsifier.
inline constexpr std::size_t kFalsifierSteps = 1000;

/// Monte-Carlo estimate of P[S_t > 0] with
/// S_t = sum alpha_i W^i_t + sum beta_i (W^i_t)^2 + sum gamma_ij I_ij(t) + delta t.
/// Sample i at time index k uses rng_split(rng_split(seed, k), i).
FalsifierReport lemma_falsifier(const TaylorCoefficients& c, const std::vector<double>& times,
                                std::size_t N, std::uint64_t seed, int threads = 1);

/// S_t on one driver path.
double lemma_statistic(const TaylorCoefficients& c, const NoiseBundle& bundle);

}  // namespace invlab
