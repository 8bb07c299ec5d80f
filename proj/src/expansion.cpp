#include "invlab/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "invlab/errors.hpp"
#include "invlab/numerics.hpp"

namespace invlab {

TaylorCoefficients taylor_coefficients(const ControlSystem& sys, const TestFunction& phi,
                                       const Vec& x, const Vec& u) {
  TaylorCoefficients c;
  const Mat a = assemble_A_matrix(sys, phi, x, u);
  c.alpha.resize(sys.d);
  c.beta.resize(sys.d);
  for (int i = 0; i < sys.d; ++i) {
    c.alpha(i) = sigma_apply(sys, phi, x, u, i);
    c.beta(i) = 0.5 * a(i, i);
  }
  c.gamma = a;
  c.gamma.diagonal().setZero();
  c.delta = generator_first_order(sys, phi, x, u);
  return c;
}

TaylorCoefficients make_coefficients(Vec alpha, Vec beta, Mat gamma, double delta) {
  const auto d = alpha.size();
  if (beta.size() != d || gamma.rows() != d || gamma.cols() != d) {
    throw InvalidArgument("coefficient shapes disagree: alpha, beta need length d and gamma d x d");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (gamma(i, i) != 0.0) throw InvalidArgument("gamma must have a zero diagonal");
  }
  if (!alpha.allFinite() || !beta.allFinite() || !gamma.allFinite() || !std::isfinite(delta)) {
    throw InvalidArgument("coefficients must be finite");
  }
  return TaylorCoefficients{std::move(alpha), std::move(beta), std::move(gamma), delta};
}

double lemma_statistic(const TaylorCoefficients& c, const NoiseBundle& bundle) {
  const std::size_t k = bundle.grid().steps();
  const Vec w = bundle.w(k);
  double s = c.delta * bundle.grid().horizon();
  for (int i = 0; i < c.d(); ++i) {
    s += c.alpha(i) * w(i) + c.beta(i) * w(i) * w(i);
    for (int j = 0; j < c.d(); ++j) {
      if (i != j && c.gamma(i, j) != 0.0) s += c.gamma(i, j) * bundle.iterated(i, j, k);
    }
  }
  return s;
}

std::size_t remainder_steps(double t) {
  if (!(t > 0.0)) throw InvalidArgument("remainder time must be positive");
  return std::max<std::size_t>(1000, static_cast<std::size_t>(std::ceil(100.0 / t)));
}

std::vector<RemainderSample> taylor_remainder_samples(const ControlSystem& sys,
                                                      const TestFunction& phi,
                                                      const Vec& x, const Vec& u,
                                                      double t, std::size_t N,
                                                      std::uint64_t seed, int threads) {
  if (N == 0) throw InvalidArgument("need at least one remainder sample");
  const TaylorCoefficients c = taylor_coefficients(sys, phi, x, u);
  const double phi0 = phi.value(x);
  const TimeGrid grid(t, t / static_cast<double>(remainder_steps(t)));
  const Policy policy = constant_policy(u);
  std::vector<RemainderSample> out(N);
  numerics::parallel_for(N, threads, [&](std::size_t i) {
    const std::uint64_t s = numerics::rng_split(seed, i);
    const NoiseBundle bundle = NoiseBundle::sample(sys.d, grid, s);
    const SamplePath path = euler_maruyama(sys, x, policy, bundle);
    const double r = phi.value(path.final_state()) - phi0 - lemma_statistic(c, bundle);
    if (!std::isfinite(r)) throw EvaluationError("non-finite remainder at sample " + std::to_string(i));
    out[i] = RemainderSample{t, r, s};
  });
  return out;
}

DecayReport remainder_decay_test(const std::vector<std::vector<RemainderSample>>& groups,
                                 double epsilon, double p_max) {
  if (groups.size() < 3) throw InvalidArgument("decay test needs at least three times");
  DecayReport rep;
  rep.epsilon = epsilon;
  rep.p_max = p_max;
  std::size_t min_n = groups.front().size();
  for (const auto& g : groups) {
    if (g.size() < 500) {
      throw InvalidArgument("decay test needs N >= 500 samples per time, got " +
                            std::to_string(g.size()));
    }
    min_n = std::min(min_n, g.size());
    const double t = g.front().t;
    if (!rep.times.empty() && !(t < rep.times.back())) {
      throw InvalidArgument("decay test times must be strictly decreasing");
    }
    std::size_t hits = 0;
    for (const auto& s : g) {
      if (s.t != t) throw InvalidArgument("mixed times within one sample group");
      if (std::abs(s.r) / t > epsilon) ++hits;
    }
    rep.times.push_back(t);
    rep.probabilities.push_back(static_cast<double>(hits) / static_cast<double>(g.size()));
  }
  rep.slack = 2.0 / std::sqrt(static_cast<double>(min_n));
  bool monotone = true;
  for (std::size_t k = 1; k < rep.probabilities.size(); ++k) {
    if (rep.probabilities[k] > rep.probabilities[k - 1] + rep.slack) monotone = false;
  }
  rep.pass = monotone && rep.probabilities.back() <= p_max;
  return rep;
}

Mat assemble_A(const TaylorCoefficients& c) {
  Mat a = c.gamma;
  for (int i = 0; i < c.d(); ++i) a(i, i) = 2.0 * c.beta(i);
  return a;
}

LemmaVerdict lemma_conclusion_check(const TaylorCoefficients& c, double tol) {
  LemmaVerdict v;
  v.max_alpha = c.d() > 0 ? c.alpha.cwiseAbs().maxCoeff() : 0.0;
  v.gamma_asymmetry = c.d() > 0 ? (c.gamma - c.gamma.transpose()).cwiseAbs().maxCoeff() : 0.0;
  v.lambda_max = numerics::symmetric_eigenvalues(assemble_A(c)).max();
  v.alpha_zero = v.max_alpha <= tol;
  v.gamma_symmetric = v.gamma_asymmetry <= tol;
  v.A_nsd = v.lambda_max <= tol;
  v.delta_nonpositive = c.delta <= tol;
  return v;
}

FalsifierReport lemma_falsifier(const TaylorCoefficients& c, const std::vector<double>& times,
                                std::size_t N, std::uint64_t seed, int threads) {
  if (times.empty()) throw InvalidArgument("falsifier needs at least one time");
  if (N < 1000) throw InvalidArgument("falsifier needs N >= 1000, got " + std::to_string(N));
  if (c.d() < 1) throw InvalidArgument("falsifier needs d >= 1");
  FalsifierReport rep;
  rep.times = times;
  rep.samples = N;
  rep.seed = seed;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t > 0.0)) throw InvalidArgument("falsifier times must be positive");
    const TimeGrid grid(t, t / static_cast<double>(kFalsifierSteps));
    const std::uint64_t time_seed = numerics::rng_split(seed, k);
    std::vector<char> positive(N, 0);
    numerics::parallel_for(N, threads, [&](std::size_t i) {
      const NoiseBundle b = NoiseBundle::sample(c.d(), grid, numerics::rng_split(time_seed, i));
      positive[i] = lemma_statistic(c, b) > 0.0 ? 1 : 0;
    });
    const auto hits = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
    rep.probabilities.push_back(hits / static_cast<double>(N));
    rep.max_probability = std::max(rep.max_probability, rep.probabilities.back());
  }
  return rep;
}

}  // namespace invlab
