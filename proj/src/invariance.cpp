#include "invlab/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>

#include "invlab/numerics.hpp"

namespace invlab {

Tolerances default_tolerances() {
  Tolerances t;
  if (const char* env = std::getenv("INVLAB_TOL"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("INVLAB_TOL must be a positive number, got '") + env + "'");
    }
    t.tol = v;
    t.tol_sym = v;
  }
  return t;
}

BoundaryScan boundary_scan(const ClosedSet& set, std::size_t n_points, std::uint64_t seed,
                           const Tolerances& tol) {
  if (n_points == 0) throw InvalidArgument("boundary scan needs n_points >= 1");
  BoundaryScan scan;
  numerics::NormalStream normal(seed);
  const std::size_t attempts = 4 * n_points;
  for (std::size_t a = 0; a < attempts && scan.points.size() < n_points; ++a) {
    Vec x0(set.n);
    for (int i = 0; i < set.n; ++i) x0(i) = set.sample_radius * normal();
    Projection p;
    try {
      p = newton_project(set, x0);
    } catch (const Error& err) {
      scan.warnings.push_back("sample " + std::to_string(a) + " skipped: " + err.what());
      continue;
    }
    if (!p.converged || !(std::abs(set.g(p.x)) <= tol.tol_set)) {
      scan.warnings.push_back("sample " + std::to_string(a) + " skipped: projection did not converge");
      continue;
    }
    if (!(set.dg(p.x).norm() >= tol.grad_floor)) {
      scan.warnings.push_back("sample " + std::to_string(a) + " skipped: |Dg| below " +
                              std::to_string(tol.grad_floor) + " at " + format_point(p.x));
      continue;
    }
    scan.points.push_back(BoundaryPoint{p.x});
  }
  if (scan.points.empty()) {
    throw ScanError("boundary scan of '" + set.name + "' found no nondegenerate boundary point" +
                    (scan.warnings.empty() ? std::string() : " (" + scan.warnings.back() + ")"));
  }
  return scan;
}

namespace {

// Running maximum of one sub-condition over the control sample.
struct Tracker {
  Tracker(std::string n, double b) : name(std::move(n)), bound(b) {}

  std::string name;
  double bound;
  double value = -std::numeric_limits<double>::infinity();
  Vec u;

  void see(double v, const Vec& at) {
    if (v > value) {
      value = v;
      u = at;
    }
  }
};

ConditionReport finish(char id, const Vec& x, const Tolerances& tol,
                       const std::vector<Tracker>& trackers) {
  ConditionReport rep;
  rep.id = id;
  rep.x = x;
  rep.tolerances = tol;
  rep.pass = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (const auto& t : trackers) {
    const bool ok = t.value <= t.bound;
    rep.subs.push_back(SubCondition{t.name, ok, t.value, t.bound});
    rep.pass = rep.pass && ok;
    if (t.value - t.bound > worst_excess) {
      worst_excess = t.value - t.bound;
      rep.u = t.u;
    }
  }
  rep.worst_violation = std::max(0.0, worst_excess);
  return rep;
}

double orthogonality(const ControlSystem& sys, const TestFunction& phi, const Vec& x,
                     const Vec& u) {
  double worst = 0.0;
  for (int i = 0; i < sys.d; ++i) worst = std::max(worst, std::abs(sigma_apply(sys, phi, x, u, i)));
  return worst;
}

}  // namespace

ConditionReport condition_b_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol) {
  std::vector<Tracker> t{{"generator", tol.tol}, {"orthogonality", tol.tol}};
  for (const Vec& u : sys.controls) {
    t[0].see(generator_second_order(sys, phi, x, u), u);
    t[1].see(orthogonality(sys, phi, x, u), u);
  }
  return finish('b', x, tol, t);
}

ConditionReport condition_c_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol) {
  std::vector<Tracker> t{{"generator_first_order", tol.tol},
                         {"orthogonality", tol.tol},
                         {"symmetry", tol.tol_sym},
                         {"nsd", tol.tol}};
  for (const Vec& u : sys.controls) {
    t[0].see(generator_first_order(sys, phi, x, u), u);
    t[1].see(orthogonality(sys, phi, x, u), u);
    const auto spectrum = numerics::symmetric_eigenvalues(assemble_A_matrix(sys, phi, x, u));
    t[2].see(spectrum.asymmetry, u);
    t[3].see(spectrum.max(), u);
  }
  return finish('c', x, tol, t);
}

ConditionReport condition_e_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol, double v_probe_radius) {
  std::vector<Tracker> t{{"unbounded_direction", tol.tol}, {"generator_first_order", tol.tol}};
  const Vec dphi = phi.grad(x);
  Vec worst_dir;
  for (const Vec& u : sys.controls) {
    const Vec s = eval_diffusion(sys, x, u).transpose() * dphi;
    const double norm = s.norm();
    if (norm > t[0].value) worst_dir = s;
    t[0].see(norm, u);
    t[1].see(generator_first_order(sys, phi, x, u), u);
  }
  ConditionReport rep = finish('e', x, tol, t);
  if (!rep.subs[0].pass) {
    rep.u = t[0].u;
    rep.v = v_probe_radius * worst_dir / worst_dir.norm();
  }
  return rep;
}

Vec project_ball(const Vec& v, double radius) {
  // Rescaling can overshoot the radius by a few ulps; accept those as inside
  // so that projecting twice is the identity.
  const double norm = v.norm();
  return norm <= radius * (1 + 1e-14) ? v : Vec(radius * v / norm);
}

VControl truncate_control(VControl v, int n) {
  if (n < 1) throw InvalidArgument("truncation radius must be >= 1");
  return [v = std::move(v), n](double t) { return project_ball(v(t), n); };
}

namespace {

double max_distance(const ClosedSet& set, const SamplePath& path) {
  double worst = 0.0;
  for (std::size_t k = 0; k < path.grid.nodes(); ++k) {
    worst = std::max(worst, set.distance(path.state(k)));
  }
  return worst;
}

}  // namespace

double deterministic_invariance_check(const ControlSystem& sys, const ClosedSet& set,
                                      const Vec& x0, const Policy& u_ctrl,
                                      const VControl& v_ctrl, double T, double dt) {
  VectorField field = [&](double t, const Vec& x) -> Vec {
    const Vec u = u_ctrl(t, x);
    return stratonovich_drift(sys, x, u) + eval_diffusion(sys, x, u) * v_ctrl(t);
  };
  return max_distance(set, ode_solve(field, x0, TimeGrid(T, dt)));
}

McEstimate mc_invariance_estimate(const ControlSystem& sys, const ClosedSet& set,
                                  const Vec& x0, const Policy& policy, double T, double dt,
                                  std::size_t N, std::uint64_t seed, double epsilon,
                                  int threads) {
  if (N == 0) throw InvalidArgument("Monte-Carlo estimate needs N >= 1");
  const TimeGrid grid(T, dt);
  std::vector<std::size_t> nodes;
  McEstimate est;
  est.epsilon = epsilon;
  est.paths = N;
  for (int q = 1; q <= 4; ++q) {
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(grid.steps()) * q / 4.0));
    nodes.push_back(k);
    est.checkpoint_times.push_back(grid.time(k));
  }
  // Per path: distances at the checkpoints, NaN when the path diverged.
  std::vector<std::vector<double>> dist(N);
  numerics::parallel_for(N, threads, [&](std::size_t i) {
    const NoiseBundle bundle = NoiseBundle::sample(sys.d, grid, numerics::rng_split(seed, i));
    try {
      const SamplePath path = euler_maruyama(sys, x0, policy, bundle);
      for (std::size_t k : nodes) dist[i].push_back(set.distance(path.state(k)));
    } catch (const DivergenceError&) {
      dist[i].clear();
    }
  });
  est.checkpoint_means.assign(nodes.size(), 0.0);
  std::size_t kept = 0;
  std::size_t exceed = 0;
  for (const auto& d : dist) {
    if (d.empty()) {
      ++est.diverged;
      continue;
    }
    ++kept;
    for (std::size_t q = 0; q < d.size(); ++q) est.checkpoint_means[q] += d[q];
    if (d.back() > epsilon) ++exceed;
  }
  if (kept > 0) {
    for (double& m : est.checkpoint_means) m /= static_cast<double>(kept);
    est.fraction_exceeding = static_cast<double>(exceed) / static_cast<double>(kept);
  }
  est.mean_final = est.checkpoint_means.back();
  est.max_checkpoint_mean = *std::max_element(est.checkpoint_means.begin(), est.checkpoint_means.end());
  return est;
}

double wong_zakai_invariance_estimate(const ControlSystem& sys, const ClosedSet& set,
                                      const Vec& x0, const Vec& u, int m, std::size_t N,
                                      std::uint64_t seed, double T, int threads) {
  if (N == 0) throw InvalidArgument("Wong-Zakai estimate needs N >= 1");
  const TimeGrid driver(m * T + 1.0, wong_zakai_driver_step(m));
  std::vector<double> worst(N, 0.0);
  numerics::parallel_for(N, threads, [&](std::size_t i) {
    const NoiseBundle bundle = NoiseBundle::sample(sys.d, driver, numerics::rng_split(seed, i));
    worst[i] = max_distance(set, wong_zakai_solve(sys, x0, u, wong_zakai_smooth(bundle, m, T)));
  });
  return numerics::mean(worst);
}

std::vector<NamedVControl> audit_v_controls(int d, std::size_t random_v, std::uint64_t seed) {
  std::vector<NamedVControl> out;
  for (int k = 0; k < d; ++k) {
    for (double sign : {1.0, -1.0}) {
      Vec e = Vec::Zero(d);
      e(k) = sign;
      out.push_back({(sign > 0 ? "+e" : "-e") + std::to_string(k + 1),
                     [e](double) { return e; }});
    }
  }
  // Trigonometric controls sum_h a_h sin(2 pi h t + p_h) / h, h = 1..3, per coordinate.
  auto trig = [d](std::uint64_t s, double scale) {
    numerics::NormalStream rng(s);
    Mat a(d, 3), p(d, 3);
    for (int i = 0; i < d; ++i) {
      for (int h = 0; h < 3; ++h) {
        a(i, h) = scale * rng();
        p(i, h) = 2.0 * std::numbers::pi * rng.uniform();
      }
    }
    return VControl([a, p, d](double t) {
      Vec v = Vec::Zero(d);
      for (int i = 0; i < d; ++i) {
        for (int h = 0; h < 3; ++h) {
          v(i) += a(i, h) * std::sin(2.0 * std::numbers::pi * (h + 1) * t + p(i, h)) / (h + 1);
        }
      }
      return v;
    });
  };
  for (std::size_t r = 0; r < random_v; ++r) {
    out.push_back({"random" + std::to_string(r + 1), trig(numerics::rng_split(seed, r), 1.0)});
  }
  const VControl large = trig(numerics::rng_split(seed, random_v), 5.0);
  for (int n : {1, 2, 4}) out.push_back({"pi" + std::to_string(n), truncate_control(large, n)});
  return out;
}

namespace {

std::string control_name(const Vec& u) { return u.size() == 0 ? "u=()" : "u=" + format_point(u); }

void merge(DynamicCheck& acc, double value, const Vec& x, const std::string& control) {
  if (acc.worst_start.size() == 0 || value > acc.worst) {
    acc.worst = value;
    acc.worst_start = x;
    acc.worst_control = control;
  }
}

}  // namespace

AuditReport equivalence_audit(const ControlSystem& sys, const ClosedSet& set,
                              std::uint64_t seed, const AuditBudget& budget,
                              const Tolerances& tol) {
  sys.validate();
  if (set.n != sys.n) throw InvalidArgument("set dimension does not match the system");
  AuditReport rep;
  rep.system = sys.name;
  rep.set = set.name;
  rep.seed = seed;
  rep.tolerances = tol;
  rep.budget = budget;

  BoundaryScan scan = boundary_scan(set, budget.n_boundary, numerics::rng_split(seed, 0), tol);
  rep.warnings = scan.warnings;
  for (const auto& bp : scan.points) rep.points.push_back(PointAudit{bp.x, true, {}, {}, {}, 0, 0, 0});
  for (std::size_t i = 0; i < budget.n_interior && i < scan.points.size(); ++i) {
    const Vec& y = scan.points[i].x;
    const Vec n = set.dg(y).normalized();
    const Vec x = y - 0.25 * n;
    if (set.g(x) < 0.0) rep.points.push_back(PointAudit{x, false, {}, {}, {}, 0, 0, 0});
  }

  const TestFunction phi = test_function_from_set(set);
  const auto vs = audit_v_controls(sys.d, budget.random_v, numerics::rng_split(seed, 1));
  std::vector<std::pair<std::string, Policy>> policies;
  for (const Vec& u : sys.controls) policies.emplace_back(control_name(u), constant_policy(u));
  if (sys.controls.size() > 1) {
    std::vector<double> times;
    std::vector<Vec> us;
    const std::size_t slots = 2 * sys.controls.size();
    for (std::size_t s = 0; s < slots; ++s) {
      times.push_back(budget.T * static_cast<double>(s) / static_cast<double>(slots));
      us.push_back(sys.controls[s % sys.controls.size()]);
    }
    policies.emplace_back("cycle", schedule_policy(times, us));
  }

  const std::uint64_t mc_seed = numerics::rng_split(seed, 2);
  const std::uint64_t wz_seed = numerics::rng_split(seed, 3);
  constexpr double kDiverged = std::numeric_limits<double>::infinity();

  struct Scratch {
    DynamicCheck mc, ode, wz;
  };
  std::vector<Scratch> scratch(rep.points.size());
  numerics::parallel_for(rep.points.size(), budget.threads, [&](std::size_t p) {
    PointAudit& pa = rep.points[p];
    Scratch& sc = scratch[p];
    if (pa.boundary) {
      pa.b = condition_b_check(sys, phi, pa.x, tol);
      pa.c = condition_c_check(sys, phi, pa.x, tol);
      pa.e = condition_e_check(sys, phi, pa.x, tol);
    }
    for (std::size_t ui = 0; ui < sys.controls.size(); ++ui) {
      const Vec& u = sys.controls[ui];
      const std::string name = control_name(u);
      const std::uint64_t task = p * sys.controls.size() + ui;
      const McEstimate mc = mc_invariance_estimate(sys, set, pa.x, constant_policy(u), budget.T,
                                                   budget.dt, budget.mc_paths,
                                                   numerics::rng_split(mc_seed, task));
      const double mc_value = mc.diverged > 0 ? kDiverged : mc.max_checkpoint_mean;
      sc.mc.diverged += mc.diverged;
      merge(sc.mc, mc_value, pa.x, name);
      pa.mc = std::max(pa.mc, mc_value);

      double wz_value = kDiverged;
      try {
        wz_value = wong_zakai_invariance_estimate(sys, set, pa.x, u, budget.wz_m, budget.wz_paths,
                                                  numerics::rng_split(wz_seed, task), budget.T);
      } catch (const DivergenceError&) {
        ++sc.wz.diverged;
      }
      merge(sc.wz, wz_value, pa.x, name);
      pa.wz = std::max(pa.wz, wz_value);
    }
    for (const auto& [pname, policy] : policies) {
      for (const auto& v : vs) {
        double value = kDiverged;
        try {
          value = deterministic_invariance_check(sys, set, pa.x, policy, v.v, budget.T, budget.dt);
        } catch (const DivergenceError&) {
          ++sc.ode.diverged;
        }
        merge(sc.ode, value, pa.x, pname + ", v=" + v.name);
        pa.ode = std::max(pa.ode, value);
      }
    }
  });

  for (const auto& sc : scratch) {
    auto fold = [](DynamicCheck& acc, const DynamicCheck& part) {
      acc.diverged += part.diverged;
      if (part.worst_start.size() > 0 && (acc.worst_start.size() == 0 || part.worst > acc.worst)) {
        acc.worst = part.worst;
        acc.worst_start = part.worst_start;
        acc.worst_control = part.worst_control;
      }
    };
    fold(rep.mc, sc.mc);
    fold(rep.ode, sc.ode);
    fold(rep.wz, sc.wz);
  }
  rep.mc.invariant = rep.mc.diverged == 0 && rep.mc.worst <= budget.mc_threshold;
  rep.ode.invariant = rep.ode.diverged == 0 && rep.ode.worst <= budget.ode_threshold;
  rep.wz.invariant = rep.wz.diverged == 0 && rep.wz.worst <= budget.wz_threshold;

  rep.b = rep.c = rep.e = true;
  for (const auto& pa : rep.points) {
    if (!pa.boundary) continue;
    rep.b = rep.b && pa.b.pass;
    rep.c = rep.c && pa.c.pass;
    rep.e = rep.e && pa.e.pass;
    if (pa.b.pass != pa.c.pass || pa.b.pass != pa.e.pass) {
      rep.disagreements.push_back("conditions b/c/e disagree at " + format_point(pa.x) + ": b=" +
                                  (pa.b.pass ? "pass" : "fail") + " c=" +
                                  (pa.c.pass ? "pass" : "fail") + " e=" +
                                  (pa.e.pass ? "pass" : "fail"));
    }
  }
  rep.analytic_invariant = rep.b && rep.c && rep.e;
  rep.dynamic_invariant = rep.mc.invariant && rep.ode.invariant && rep.wz.invariant;
  const std::pair<const char*, const DynamicCheck*> dyn[] = {
      {"mc", &rep.mc}, {"ode", &rep.ode}, {"wz", &rep.wz}};
  for (const auto& [name, check] : dyn) {
    if (check->invariant != rep.analytic_invariant) {
      rep.disagreements.push_back(std::string("dynamic check ") + name + " says " +
                                  (check->invariant ? "invariant" : "non-invariant") +
                                  " (worst " + format_point(Vec::Constant(1, check->worst)) +
                                  " from " + format_point(check->worst_start) + ", " +
                                  check->worst_control + ") but the analytic conditions say " +
                                  (rep.analytic_invariant ? "invariant" : "non-invariant"));
    }
  }
  rep.consistent = rep.disagreements.empty();
  if (rep.consistent) {
    rep.verdict = rep.analytic_invariant ? "invariant, all checks agree"
                                         : "non-invariant, all checks agree";
  } else {
    rep.verdict = "inconsistent, " + std::to_string(rep.disagreements.size()) + " disagreement(s)";
  }
  return rep;
}

}  // namespace invlab
