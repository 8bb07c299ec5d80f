#include "invlab/report.hpp"

#include <cmath>

namespace invlab::report {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

namespace {

json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

json matrix(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector(m.row(r).transpose()));
  return out;
}

json dynamic(const DynamicCheck& c, double threshold) {
  return {{"invariant", c.invariant},
          {"worst", number(c.worst)},
          {"threshold", threshold},
          {"worst_start", vector(c.worst_start)},
          {"worst_control", c.worst_control},
          {"diverged", c.diverged}};
}

}  // namespace

json tolerances(const Tolerances& t) {
  return {{"tol", t.tol}, {"tol_sym", t.tol_sym}, {"tol_set", t.tol_set}, {"grad_floor", t.grad_floor}};
}

json condition(const ConditionReport& r) {
  json subs = json::object();
  for (const auto& s : r.subs) {
    subs[s.name] = {{"pass", s.pass}, {"value", number(s.value)}, {"bound", s.bound}};
  }
  json out = {{"id", std::string(1, r.id)},
              {"pass", r.pass},
              {"subconditions", subs},
              {"worst_violation", number(r.worst_violation)},
              {"x", vector(r.x)},
              {"u", vector(r.u)}};
  if (r.v.size() > 0) out["v"] = vector(r.v);
  return out;
}

json audit(const AuditReport& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    json pj = {{"x", vector(p.x)},
               {"boundary", p.boundary},
               {"mc", number(p.mc)},
               {"ode", number(p.ode)},
               {"wz", number(p.wz)}};
    if (p.boundary) {
      pj["b"] = condition(p.b);
      pj["c"] = condition(p.c);
      pj["e"] = condition(p.e);
    }
    points.push_back(std::move(pj));
  }
  const AuditBudget& b = r.budget;
  return {
      {"system", r.system},
      {"set", r.set},
      {"seed", r.seed},
      {"tolerances", tolerances(r.tolerances)},
      {"budget",
       {{"n_boundary", b.n_boundary},
        {"n_interior", b.n_interior},
        {"T", b.T},
        {"dt", b.dt},
        {"mc_paths", b.mc_paths},
        {"wz_m", b.wz_m},
        {"wz_paths", b.wz_paths},
        {"random_v", b.random_v}}},
      {"points", points},
      {"warnings", r.warnings},
      {"conditions", {{"b", r.b}, {"c", r.c}, {"e", r.e}}},
      {"dynamics",
       {{"mc", dynamic(r.mc, b.mc_threshold)},
        {"ode", dynamic(r.ode, b.ode_threshold)},
        {"wz", dynamic(r.wz, b.wz_threshold)}}},
      {"analytic_invariant", r.analytic_invariant},
      {"dynamic_invariant", r.dynamic_invariant},
      {"consistent", r.consistent},
      {"disagreements", r.disagreements},
      {"verdict", r.verdict},
      {"caveat",
       "boundary conditions are tested with the test function phi = g only; a pass is "
       "necessary, not sufficient, for the condition over all C^2 test functions"}};
}

json coefficients(const TaylorCoefficients& c) {
  return {{"alpha", vector(c.alpha)},
          {"beta", vector(c.beta)},
          {"gamma", matrix(c.gamma)},
          {"delta", number(c.delta)}};
}

json lemma_verdict(const LemmaVerdict& v) {
  return {{"alpha_zero", v.alpha_zero},
          {"gamma_symmetric", v.gamma_symmetric},
          {"A_nsd", v.A_nsd},
          {"delta_nonpositive", v.delta_nonpositive},
          {"max_alpha", number(v.max_alpha)},
          {"gamma_asymmetry", number(v.gamma_asymmetry)},
          {"lambda_max", number(v.lambda_max)},
          {"all", v.all()}};
}

json falsifier(const FalsifierReport& r, const std::string& verdict) {
  return {{"times", numbers(r.times)},
          {"probabilities", numbers(r.probabilities)},
          {"max_probability", number(r.max_probability)},
          {"samples", r.samples},
          {"verdict", verdict},
          {"seed", r.seed}};
}

json decay(const DecayReport& r, std::uint64_t seed) {
  return {{"times", numbers(r.times)},
          {"probabilities", numbers(r.probabilities)},
          {"epsilon", r.epsilon},
          {"slack", number(r.slack)},
          {"p_max", r.p_max},
          {"verdict", r.pass ? "pass" : "fail"},
          {"seed", seed}};
}

json value_bound(const ValueBoundReport& r) {
  json starts = json::array();
  for (const Vec& x : r.starts) starts.push_back(vector(x));
  json est = json::array();
  json err = json::array();
  for (std::size_t s = 0; s < r.estimates.size(); ++s) {
    est.push_back(numbers(r.estimates[s]));
    err.push_back(numbers(r.stderrs[s]));
  }
  return {{"starts", starts},
          {"policies", r.policies},
          {"estimates", est},
          {"stderrs", err},
          {"tail", number(r.tail)},
          {"slack", r.slack},
          {"worst", number(r.worst)},
          {"verdict", r.pass ? "pass" : "fail"}};
}

json mc_estimate(const McEstimate& e) {
  return {{"checkpoint_times", numbers(e.checkpoint_times)},
          {"checkpoint_means", numbers(e.checkpoint_means)},
          {"mean_final", number(e.mean_final)},
          {"max_checkpoint_mean", number(e.max_checkpoint_mean)},
          {"fraction_exceeding", number(e.fraction_exceeding)},
          {"epsilon", e.epsilon},
          {"paths", e.paths},
          {"diverged", e.diverged}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace invlab::report
