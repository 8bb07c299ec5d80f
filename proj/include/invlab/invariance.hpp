#pragma once

// Invariance of K = {g <= 0} for a controlled diffusion, checked three ways
// at boundary points (generator conditions b, c, e with phi = g) and by
// simulation (Euler paths, deterministic control ODE, Wong-Zakai ODE).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "invlab/errors.hpp"
#include "invlab/paths.hpp"
#include "invlab/sde_core.hpp"

namespace invlab {

struct Tolerances {
  double tol = 1e-8;         // generator, orthogonality and eigenvalue checks
  double tol_sym = 1e-8;     // |A - A^T|
  double tol_set = 1e-10;    // |g| on scanned boundary points
  double grad_floor = 1e-6;  // |Dg| on scanned boundary points
};

/// Default tolerances, with `tol` (and `tol_sym`) taken from INVLAB_TOL when set.
Tolerances default_tolerances();

struct BoundaryPoint {
  Vec x;
};

class ScanError : public Error {
 public:
  using Error::Error;
};

struct BoundaryScan {
  std::vector<BoundaryPoint> points;
  std::vector<std::string> warnings;  // one per skipped sample
};

/// Newton-projects Gaussian samples (scaled by set.sample_radius) onto {g = 0}.
/// Samples that fail to converge or land on |Dg| < grad_floor are skipped;
/// at most 4 n_points samples are tried. Throws ScanError when none survive.
BoundaryScan boundary_scan(const ClosedSet& set, std::size_t n_points, std::uint64_t seed,
                           const Tolerances& tol = {});

struct SubCondition {
  std::string name;
  bool pass = false;
  double value = 0.0;  // worst value over the control sample
  double bound = 0.0;  // pass iff value <= bound
};

struct ConditionReport {
  char id = '?';  // 'b', 'c' or 'e'
  std::vector<SubCondition> subs;
  bool pass = false;
  double worst_violation = 0.0;  // max(value - bound) over subs, clamped at 0
  Vec x;
  Vec u;  // control attaining the worst violation
  Vec v;  // condition e: unit direction along which the sup is unbounded
  Tolerances tolerances;
};

/// max_u L phi <= tol and max_{i,u} |<sigma^i, Dphi>| <= tol.
ConditionReport condition_b_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol = {});

/// max_u L' phi <= tol, orthogonality, |A - A^T| <= tol_sym, lambda_max(sym A) <= tol.
ConditionReport condition_c_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol = {});

/// sup over u and all v of L' phi + <sigma v, Dphi> <= 0. Unbounded unless
/// sigma^T Dphi = 0, in which case it reduces to max_u L' phi <= tol.
/// v_probe_radius scales the reported witness.
ConditionReport condition_e_check(const ControlSystem& sys, const TestFunction& phi,
                                  const Vec& x, const Tolerances& tol = {},
                                  double v_probe_radius = 1.0);

using VControl = std::function<Vec(double t)>;

/// Pointwise projection onto the closed ball of radius n.
Vec project_ball(const Vec& v, double radius);
VControl truncate_control(VControl v, int n);

/// Integrates x' = b~(x,u) + sigma(x,u) v(t) with RK4 and returns max_t d_K(x(t)).
double deterministic_invariance_check(const ControlSystem& sys, const ClosedSet& set,
                                      const Vec& x0, const Policy& u_ctrl,
                                      const VControl& v_ctrl, double T, double dt);

struct McEstimate {
  std::vector<double> checkpoint_times;  // T/4, T/2, 3T/4, T
  std::vector<double> checkpoint_means;  // mean d_K at each checkpoint
  double mean_final = 0.0;
  double max_checkpoint_mean = 0.0;
  double fraction_exceeding = 0.0;  // d_K(X_T) > epsilon
  double epsilon = 0.0;
  std::size_t paths = 0;
  std::size_t diverged = 0;  // excluded from the statistics
};

/// Euler paths from x0; path i uses rng_split(seed, i).
McEstimate mc_invariance_estimate(const ControlSystem& sys, const ClosedSet& set,
                                  const Vec& x0, const Policy& policy, double T, double dt,
                                  std::size_t N, std::uint64_t seed, double epsilon = 0.1,
                                  int threads = 1);

/// Mean over N drivers of max_{t <= T} d_K(X^m_t). Driver i uses rng_split(seed, i).
double wong_zakai_invariance_estimate(const ControlSystem& sys, const ClosedSet& set,
                                      const Vec& x0, const Vec& u, int m, std::size_t N,
                                      std::uint64_t seed, double T = 1.0, int threads = 1);

struct AuditBudget {
  std::size_t n_boundary = 16;
  std::size_t n_interior = 2;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t mc_paths = 100;
  double mc_threshold = 0.05;   // on the max checkpoint mean of d_K
  double ode_threshold = 1e-6;  // on max_t d_K
  int wz_m = 16;
  std::size_t wz_paths = 10;
  double wz_threshold = 1e-5;
  std::size_t random_v = 5;
  int threads = 1;
};

struct DynamicCheck {
  bool invariant = false;
  double worst = 0.0;  // worst statistic over starts and controls
  Vec worst_start;
  std::string worst_control;
  std::size_t diverged = 0;
};

struct PointAudit {
  Vec x;
  bool boundary = true;
  ConditionReport b, c, e;  // boundary points only
  double mc = 0.0;
  double ode = 0.0;
  double wz = 0.0;
};

struct AuditReport {
  std::string system;
  std::string set;
  std::uint64_t seed = 0;
  Tolerances tolerances;
  AuditBudget budget;
  std::vector<PointAudit> points;
  std::vector<std::string> warnings;
  bool b = false, c = false, e = false;  // analytic verdicts over all boundary points
  DynamicCheck mc, ode, wz;
  bool analytic_invariant = false;
  bool dynamic_invariant = false;
  bool consistent = false;
  std::vector<std::string> disagreements;
  std::string verdict;
};

/// The deterministic v family used by the audit for a noise dimension d:
/// +-e_k, `random_v` random trigonometric controls, and truncations to radii
/// 1, 2, 4 of one large random control. Names go into reports.
struct NamedVControl {
  std::string name;
  VControl v;
};
std::vector<NamedVControl> audit_v_controls(int d, std::size_t random_v, std::uint64_t seed);

AuditReport equivalence_audit(const ControlSystem& sys, const ClosedSet& set,
                              std::uint64_t seed, const AuditBudget& budget = {},
                              const Tolerances& tol = {});

}  // namespace invlab
