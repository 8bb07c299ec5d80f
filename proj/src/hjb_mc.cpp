#include "invlab/hjb_mc.hpp"

#include <algorithm>
#include <cmath>

#include "invlab/errors.hpp"
#include "invlab/numerics.hpp"

namespace invlab {

double DiscountedProblem::tail() const { return std::exp(-discount * horizon) / discount; }

void DiscountedProblem::validate() const {
  sys.validate();
  if (set.n != sys.n) throw InvalidArgument("set dimension does not match the system");
  if (!cost) throw InvalidArgument("discounted problem has no running cost");
  if (!(discount >= 1.0)) throw InvalidArgument("discount C must be >= 1");
  if (!(horizon > 0.0)) throw InvalidArgument("truncation horizon must be positive");
  if (tail() > 1e-4) {
    throw InvalidArgument("truncation horizon too short: tail e^{-C T}/C = " +
                          std::to_string(tail()) + " exceeds 1e-4");
  }
}

DiscountedProblem default_problem(ControlSystem sys, ClosedSet set) {
  DiscountedProblem p{std::move(sys), std::move(set), {}, 1.0, 10.0};
  p.cost = [s = p.set](const Vec& x) { return std::min(s.distance(x), 1.0); };
  return p;
}

CostEstimate discounted_cost_estimate(const DiscountedProblem& prob, const Vec& x0,
                                      const Policy& policy, std::size_t N, double dt,
                                      std::uint64_t seed, int threads) {
  prob.validate();
  if (N < 2) throw InvalidArgument("discounted cost estimate needs N >= 2");
  const TimeGrid grid(prob.horizon, dt);
  std::vector<double> values(N);
  numerics::parallel_for(N, threads, [&](std::size_t i) {
    const NoiseBundle bundle = NoiseBundle::sample(prob.sys.d, grid, numerics::rng_split(seed, i));
    const SamplePath path = euler_maruyama(prob.sys, x0, policy, bundle);
    double acc = 0.0;
    double prev = prob.cost(path.state(0));
    for (std::size_t k = 1; k < grid.nodes(); ++k) {
      const double next = std::exp(-prob.discount * grid.time(k)) * prob.cost(path.state(k));
      acc += 0.5 * grid.dt() * (prev + next);
      prev = next;
    }
    values[i] = acc;
  });
  CostEstimate est;
  est.paths = N;
  est.tail = prob.tail();
  est.estimate = numerics::mean(values);
  est.std_error = std::sqrt(numerics::sample_variance(values) / static_cast<double>(N));
  return est;
}

std::vector<NamedPolicy> constant_policies(const ControlSystem& sys) {
  std::vector<NamedPolicy> out;
  for (const Vec& u : sys.controls) {
    out.push_back({u.size() == 0 ? "u=()" : "u=" + format_point(u), constant_policy(u)});
  }
  return out;
}

ValueBoundReport value_bound_check(const DiscountedProblem& prob, const std::vector<Vec>& starts,
                                   const std::vector<NamedPolicy>& policies, std::size_t N,
                                   double dt, std::uint64_t seed, int threads, double slack) {
  if (starts.empty() || policies.empty()) {
    throw InvalidArgument("value bound check needs at least one start and one policy");
  }
  for (const Vec& x : starts) {
    if (!prob.set.contains(x)) throw InvalidArgument("start " + format_point(x) + " is not in K");
  }
  ValueBoundReport rep;
  rep.starts = starts;
  rep.slack = slack;
  rep.tail = prob.tail();
  for (const auto& p : policies) rep.policies.push_back(p.name);
  rep.estimates.assign(starts.size(), std::vector<double>(policies.size()));
  rep.stderrs = rep.estimates;
  bool first = true;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (std::size_t p = 0; p < policies.size(); ++p) {
      const CostEstimate est = discounted_cost_estimate(
          prob, starts[s], policies[p].policy, N, dt,
          numerics::rng_split(seed, s * policies.size() + p), threads);
      rep.estimates[s][p] = est.estimate;
      rep.stderrs[s][p] = est.std_error;
      const double excess = est.estimate - 3.0 * est.std_error - est.tail;
      rep.worst = first ? excess : std::max(rep.worst, excess);
      first = false;
    }
  }
  rep.pass = rep.worst <= slack;
  return rep;
}

}  // namespace invlab
