#include "invlab/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"

#include "invlab/expansion.hpp"
#include "invlab/hjb_mc.hpp"
#include "invlab/invariance.hpp"
#include "invlab/numerics.hpp"
#include "invlab/report.hpp"

namespace invlab::cli {

using nlohmann::json;

Vec default_start(const ClosedSet& set) {
  Vec e1 = Vec::Zero(set.n);
  e1(0) = 1.0;
  const Projection p = newton_project(set, e1);
  if (!p.converged) throw InvalidArgument("no default start: projection of e1 onto the boundary failed");
  return p.x;
}

namespace {

const Model& model(const Config& cfg) {
  if (!cfg.has_model) throw ConfigError("system", "missing required field");
  return cfg.model;
}

Vec start(const Config& cfg, const Field& f) {
  const Model& m = model(cfg);
  if (!f.present()) return default_start(m.set);
  return f.vec(m.system.n);
}

Vec control(const Config& cfg, const Field& f) {
  const Model& m = model(cfg);
  if (!f.present()) return m.system.controls.front();
  return f.vec(m.system.k);
}

std::filesystem::path out_dir(const Config& cfg, const char* command) {
  if (cfg.out_dir.empty()) throw ConfigError("out", std::string(command) + " needs an output directory (--out)");
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

void write_path(const std::filesystem::path& path, const SamplePath& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  write_csv(p, f);
}

bool strictly_decreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] < xs[i - 1])) return false;
  }
  return true;
}

}  // namespace

Result cmd_audit(const Config& cfg) {
  const Model& m = model(cfg);
  const Field ex = cfg.section("experiment");
  AuditBudget b;
  b.n_boundary = ex["n_boundary"].count_or(b.n_boundary, 1);
  b.n_interior = ex["n_interior"].count_or(b.n_interior);
  b.T = ex["T"].positive_or(b.T);
  b.dt = ex["dt"].positive_or(b.dt);
  b.mc_paths = ex["N"].count_or(b.mc_paths, 1);
  b.wz_m = static_cast<int>(ex["wz_m"].count_or(static_cast<std::size_t>(b.wz_m), 1));
  b.wz_paths = ex["paths"].count_or(b.wz_paths, 1);
  b.random_v = ex["random_v"].count_or(b.random_v);
  b.threads = cfg.threads;
  const AuditReport rep = equivalence_audit(m.system, m.set, cfg.seed, b, cfg.tol);
  return {rep.consistent ? kExitOk : kExitInconsistent, report::audit(rep)};
}

Result cmd_simulate(const Config& cfg) {
  const Model& m = model(cfg);
  const Field ex = cfg.section("experiment");
  const double T = ex["T"].positive_or(1.0);
  const double dt = ex["dt"].positive_or(1e-3);
  const std::size_t paths = ex["paths"].count_or(3, 1);
  const bool deterministic = ex["deterministic"].boolean_or(false);
  const bool halving = ex["dt_halving"].boolean_or(false);
  const Vec x0 = start(cfg, cfg.section("x0"));
  const Vec u = control(cfg, ex["u"]);
  const auto dir = out_dir(cfg, "simulate");
  const TimeGrid grid(T, dt);
  const Policy policy = constant_policy(u);

  const std::uint64_t path_seed = numerics::rng_split(cfg.seed, 0);
  std::vector<SamplePath> runs(paths);
  numerics::parallel_for(paths, cfg.threads, [&](std::size_t k) {
    runs[k] = euler_maruyama(m.system, x0, policy,
                             NoiseBundle::sample(m.system.d, grid, numerics::rng_split(path_seed, k)));
  });
  json files = json::array();
  json finals = json::array();
  for (std::size_t k = 0; k < paths; ++k) {
    const std::string name = "path_" + std::to_string(k) + ".csv";
    write_path(dir / name, runs[k]);
    files.push_back(name);
    finals.push_back(report::number(m.set.distance(runs[k].final_state())));
  }
  json rep = {{"system", m.system.name}, {"set", m.set.name}, {"seed", cfg.seed},
              {"T", T}, {"dt", dt}, {"x0", report::vector(x0)}, {"u", report::vector(u)},
              {"files", files}, {"final_distance", finals}};
  if (deterministic) {
    // Noise switched off: the same Euler recursion with zero increments.
    const NoiseBundle quiet = NoiseBundle::from_increments(
        grid, Mat::Zero(static_cast<Eigen::Index>(grid.steps()), m.system.d));
    const SamplePath det = euler_maruyama(m.system, x0, policy, quiet);
    json det_files = json::array();
    for (std::size_t k = 0; k < paths; ++k) {
      const std::string name = "det_" + std::to_string(k) + ".csv";
      write_path(dir / name, det);
      det_files.push_back(name);
    }
    rep["deterministic_files"] = det_files;
  }
  if (halving) {
    const std::size_t N = ex["N"].count_or(200, 2);
    const TimeGrid fine(T, dt / 2.0);
    const std::uint64_t halving_seed = numerics::rng_split(cfg.seed, 1);
    std::vector<double> coarse_d(N), fine_d(N);
    numerics::parallel_for(N, cfg.threads, [&](std::size_t i) {
      const NoiseBundle b = NoiseBundle::sample(m.system.d, fine, numerics::rng_split(halving_seed, i));
      fine_d[i] = m.set.distance(euler_maruyama(m.system, x0, policy, b).final_state());
      coarse_d[i] = m.set.distance(euler_maruyama(m.system, x0, policy, b.coarsen(2)).final_state());
    });
    const double mc = numerics::mean(coarse_d);
    const double mf = numerics::mean(fine_d);
    rep["dt_halving"] = {{"N", N},
                         {"dt", dt},
                         {"dt_refined", dt / 2.0},
                         {"mean_distance", report::number(mc)},
                         {"mean_distance_refined", report::number(mf)},
                         {"refined_smaller", mf < mc}};
  }
  return {kExitOk, rep};
}

Result cmd_wz(const Config& cfg) {
  const Model& m = model(cfg);
  const Field ex = cfg.section("experiment");
  std::vector<int> ms;
  const Field mf = ex["m"];
  if (mf.present()) {
    if (mf.json().is_array()) {
      if (mf.size() == 0) mf.fail("needs at least one entry");
      for (std::size_t i = 0; i < mf.size(); ++i) {
        const std::int64_t v = mf[i].integer();
        if (v < 1 || v > 4096) mf[i].fail("must be between 1 and 4096");
        ms.push_back(static_cast<int>(v));
      }
    } else {
      const std::int64_t v = mf.integer();
      if (v < 1 || v > 4096) mf.fail("must be between 1 and 4096");
      ms.push_back(static_cast<int>(v));
    }
  } else {
    ms = {4, 16, 64};
  }
  const double T = ex["T"].positive_or(1.0);
  const std::size_t paths = ex["paths"].count_or(100, 1);
  const Vec x0 = start(cfg, cfg.section("x0"));
  const Vec u = control(cfg, ex["u"]);
  const int m_max = *std::max_element(ms.begin(), ms.end());
  const TimeGrid driver(m_max * T + 1.0, wong_zakai_driver_step(m_max));

  // [path][m]
  std::vector<std::vector<double>> sup_err(paths), term_err(paths);
  numerics::parallel_for(paths, cfg.threads, [&](std::size_t i) {
    const NoiseBundle b = NoiseBundle::sample(m.system.d, driver, numerics::rng_split(cfg.seed, i));
    for (int mm : ms) {
      const SmoothedNoise s = wong_zakai_smooth(b, mm, T);
      sup_err[i].push_back((s.y - s.reference).rowwise().norm().maxCoeff());
      if (m.exact_solution) {
        const SamplePath x = wong_zakai_solve(m.system, x0, u, s);
        const Vec w = s.reference.row(s.reference.rows() - 1).transpose();
        term_err[i].push_back((x.final_state() - m.exact_solution(x0, u, w)).norm());
      }
    }
  });
  json rows = json::array();
  std::vector<double> sup_med, term_med;
  for (std::size_t j = 0; j < ms.size(); ++j) {
    std::vector<double> s, t;
    for (std::size_t i = 0; i < paths; ++i) {
      s.push_back(sup_err[i][j]);
      if (m.exact_solution) t.push_back(term_err[i][j]);
    }
    sup_med.push_back(numerics::median(s));
    json row = {{"m", ms[j]}, {"median_sup_error", report::number(sup_med.back())}};
    if (m.exact_solution) {
      term_med.push_back(numerics::median(t));
      row["median_terminal_error"] = report::number(term_med.back());
    } else {
      row["median_terminal_error"] = nullptr;
    }
    rows.push_back(row);
  }
  json rep = {{"system", m.system.name},
              {"seed", cfg.seed},
              {"paths", paths},
              {"T", T},
              {"driver_dt", driver.dt()},
              {"x0", report::vector(x0)},
              {"u", report::vector(u)},
              {"reference", "m^-1/2 W(m t), the Brownian motion Y^m approaches"},
              {"rows", rows},
              {"sup_error_decreasing", strictly_decreasing(sup_med)}};
  rep["terminal_error_decreasing"] = m.exact_solution ? json(strictly_decreasing(term_med)) : json(nullptr);
  return {kExitOk, rep};
}

namespace {

TaylorCoefficients coefficients_from(const Field& f) {
  const Field a = f["alpha"], b = f["beta"], g = f["gamma"];
  int d = 0;
  if (a.present()) d = static_cast<int>(a.size());
  else if (b.present()) d = static_cast<int>(b.size());
  else if (g.present()) d = static_cast<int>(g.size());
  else f.fail("needs at least one of alpha, beta, gamma");
  if (d < 1 || d > numerics::kMaxJacobiDimension) f.fail("noise dimension must be between 1 and 64");
  const Vec alpha = a.present() ? a.vec(d) : Vec(Vec::Zero(d));
  const Vec beta = b.present() ? b.vec(d) : Vec(Vec::Zero(d));
  Mat gamma = Mat::Zero(d, d);
  if (g.present()) {
    if (g.size() != static_cast<std::size_t>(d)) g.fail("expected a " + std::to_string(d) + " x " + std::to_string(d) + " matrix");
    for (int i = 0; i < d; ++i) {
      const Vec row = g[static_cast<std::size_t>(i)].vec(d);
      if (row(i) != 0.0) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)].fail("diagonal of gamma must be 0");
      gamma.row(i) = row.transpose();
    }
  }
  return make_coefficients(alpha, beta, gamma, f["delta"].number_or(0.0));
}

}  // namespace

Result cmd_lemma(const Config& cfg) {
  const Field sec = cfg.section("lemma");
  TaylorCoefficients c;
  std::string source;
  if (sec["coefficients"].present()) {
    c = coefficients_from(sec["coefficients"]);
    source = "explicit";
  } else {
    const Model& m = model(cfg);
    c = taylor_coefficients(m.system, test_function_from_set(m.set), start(cfg, cfg.section("x0")),
                            control(cfg, sec["u"]));
    source = "system " + m.system.name + ", phi = g";
  }
  std::vector<double> times{0.01, 0.1, 1.0};
  if (sec["times"].present()) {
    times = sec["times"].numbers();
    if (times.empty()) sec["times"].fail("needs at least one time");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!(times[i] > 0.0)) sec["times"][i].fail("must be positive");
    }
  }
  const std::size_t N = sec["N"].count_or(4000, 1000);
  const double tol = sec["tol"].present() ? sec["tol"].number() : cfg.tol.tol;
  const double slack = sec["slack"].positive_or(0.02);
  const LemmaVerdict v = lemma_conclusion_check(c, tol);
  const FalsifierReport f = lemma_falsifier(c, times, N, cfg.seed, cfg.threads);

  int code = kExitOk;
  std::string verdict;
  if (v.all()) {
    if (f.max_probability > slack) {
      verdict = "inconsistent: conclusions hold but P[S_t > 0] reaches " + std::to_string(f.max_probability);
      code = kExitInconsistent;
    } else {
      verdict = "conclusions hold, no violation observed";
    }
  } else {
    verdict = f.max_probability > 0.0 ? "conclusions fail, violation observed"
                                       : "conclusions fail, violation not observed";
  }
  json rep = {{"source", source},
              {"coefficients", report::coefficients(c)},
              {"A", json::array()},
              {"conclusions", report::lemma_verdict(v)},
              {"tol", tol},
              {"slack", slack},
              {"falsifier", report::falsifier(f, verdict)},
              {"verdict", verdict}};
  const Mat A = assemble_A(c);
  for (Eigen::Index r = 0; r < A.rows(); ++r) rep["A"].push_back(report::vector(A.row(r).transpose()));
  return {code, rep};
}

Result cmd_taylor(const Config& cfg) {
  const Model& m = model(cfg);
  const Field sec = cfg.section("taylor");
  std::vector<double> times{0.1, 0.05, 0.025};
  if (sec["times"].present()) times = sec["times"].numbers();
  if (times.size() < 3) sec["times"].fail("needs at least three times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) sec["times"][i].fail("must be positive");
    if (i > 0 && !(times[i] < times[i - 1])) sec["times"][i].fail("times must be strictly decreasing");
  }
  const std::size_t N = sec["N"].count_or(1000, 500);
  const double eps = sec["epsilon"].positive_or(0.1);
  const double p_max = sec["p_max"].positive_or(0.05);
  const Vec x0 = start(cfg, cfg.section("x0"));
  const Vec u = control(cfg, sec["u"]);
  const TestFunction phi = test_function_from_set(m.set);
  std::vector<std::vector<RemainderSample>> groups;
  for (std::size_t k = 0; k < times.size(); ++k) {
    groups.push_back(taylor_remainder_samples(m.system, phi, x0, u, times[k], N,
                                              numerics::rng_split(cfg.seed, k), cfg.threads));
  }
  const DecayReport d = remainder_decay_test(groups, eps, p_max);
  json rep = report::decay(d, cfg.seed);
  rep["system"] = m.system.name;
  rep["set"] = m.set.name;
  rep["x0"] = report::vector(x0);
  rep["u"] = report::vector(u);
  rep["samples"] = N;
  rep["coefficients"] = report::coefficients(taylor_coefficients(m.system, phi, x0, u));
  return {kExitOk, rep};
}

Result cmd_hjb(const Config& cfg) {
  const Model& m = model(cfg);
  const Field sec = cfg.section("hjb");
  DiscountedProblem prob = default_problem(m.system, m.set);
  prob.discount = sec["C"].positive_or(1.0);
  prob.horizon = sec["T_trunc"].positive_or(10.0);
  try {
    prob.validate();
  } catch (const InvalidArgument& e) {
    sec.fail(e.what());
  }
  std::vector<Vec> starts;
  if (sec["starts"].present()) {
    for (std::size_t i = 0; i < sec["starts"].size(); ++i) starts.push_back(sec["starts"][i].vec(m.system.n));
    if (starts.empty()) sec["starts"].fail("needs at least one start");
  } else {
    starts.push_back(start(cfg, cfg.section("x0")));
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (!m.set.contains(starts[i])) {
      throw ConfigError(sec["starts"].present() ? sec["starts"][i].path() : "x0", "start must lie in K");
    }
  }
  const std::size_t N = sec["N"].count_or(100, 2);
  const double dt = sec["dt"].positive_or(1e-3);
  const double slack = sec["slack"].positive_or(0.02);
  const ValueBoundReport vb = value_bound_check(prob, starts, constant_policies(m.system), N, dt,
                                                cfg.seed, cfg.threads, slack);

  // The value bound must hold whenever condition b holds on the boundary.
  const BoundaryScan scan = boundary_scan(m.set, 16, numerics::rng_split(cfg.seed, 0x62), cfg.tol);
  const TestFunction phi = test_function_from_set(m.set);
  bool b_holds = true;
  for (const auto& p : scan.points) b_holds = b_holds && condition_b_check(m.system, phi, p.x, cfg.tol).pass;
  const bool consistent = !(b_holds && !vb.pass);

  json rep = report::value_bound(vb);
  rep["system"] = m.system.name;
  rep["set"] = m.set.name;
  rep["seed"] = cfg.seed;
  rep["N"] = N;
  rep["dt"] = dt;
  rep["C"] = prob.discount;
  rep["T_trunc"] = prob.horizon;
  rep["condition_b"] = b_holds;
  rep["consistent"] = consistent;
  rep["note"] = "the supremum over controls is taken over constant controls only";
  return {consistent ? kExitOk : kExitInconsistent, rep};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-set invariance checks for controlled diffusions", "invariance-lab"};
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_path, system, set;
  app.add_option("command", command, "audit | simulate | wz | lemma | taylor | hjb")
      ->required()
      ->check(CLI::IsMember({"audit", "simulate", "wz", "lemma", "taylor", "hjb"}));
  app.add_option("--config", config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  auto* out_opt = app.add_option("--out", out_path, "output directory");
  auto* system_opt = app.add_option("--system", system, "catalog system name");
  auto* set_opt = app.add_option("--set", set, "catalog set name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  Overrides ov;
  if (*seed_opt) ov.seed = seed;
  if (*threads_opt) ov.threads = threads;
  if (*out_opt) ov.out_dir = out_path;
  if (*system_opt) ov.system = system;
  if (*set_opt) ov.set = set;

  try {
    json doc = config_path.empty() ? json::object() : read_config_file(config_path);
    const Config cfg = load_config(std::move(doc), ov, command != "lemma");
    Result r;
    if (command == "audit") r = cmd_audit(cfg);
    else if (command == "simulate") r = cmd_simulate(cfg);
    else if (command == "wz") r = cmd_wz(cfg);
    else if (command == "lemma") r = cmd_lemma(cfg);
    else if (command == "taylor") r = cmd_taylor(cfg);
    else r = cmd_hjb(cfg);
    const std::string text = report::dump(r.report);
    out << text;
    if (!cfg.out_dir.empty()) {
      std::filesystem::create_directories(cfg.out_dir);
      write_file(std::filesystem::path(cfg.out_dir) / (command + ".json"), text);
    }
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace invlab::cli
