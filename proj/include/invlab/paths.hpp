#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "invlab/sde_core.hpp"

namespace invlab {

inline constexpr double kBlowUpNorm = 1e8;

class TimeGrid {
 public:
  /// Uniform grid 0 = t_0 < ... < t_steps = horizon. dt must divide the
  /// horizon to within 1e-12 (relative to max(1, horizon)).
  TimeGrid(double horizon, double dt);

  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double time(std::size_t k) const;
  /// Node index of t; throws InvalidArgument if t is not a grid node.
  std::size_t index_of(double t) const;

 private:
  double horizon_;
  double dt_;
  std::size_t steps_;
};

// One Brownian path on a grid with its iterated integrals.
//
// I[i][j](t_k) approximates the Ito integral of W^i dW^j. Diagonal entries
// are left-point sums. Off-diagonal entries use the averaged endpoint
// sum(1/2 (W^i_l + W^i_{l+1}) dW^j_l): for independent coordinates it has
// the same Ito limit and the same Levy area as the left-point sum, and it
// satisfies I[i][j] + I[j][i] = W^i W^j exactly on the grid.
class NoiseBundle {
 public:
  /// Increments are i.i.d. Normal(0, dt I), drawn in time-major order from
  /// NormalStream(seed).
  static NoiseBundle sample(int d, const TimeGrid& grid, std::uint64_t seed);
  /// Bundle over given increments (steps x d); used for deterministic drivers.
  static NoiseBundle from_increments(const TimeGrid& grid, Mat increments,
                                     std::uint64_t seed = 0);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return static_cast<int>(increments_.cols()); }
  std::uint64_t seed() const { return seed_; }

  const Mat& increments() const { return increments_; }  // steps x d
  const Mat& path() const { return path_; }               // nodes x d
  Vec w(std::size_t k) const { return path_.row(static_cast<Eigen::Index>(k)).transpose(); }
  /// I[i][j](t_k), zero-based i, j.
  double iterated(int i, int j, std::size_t k) const;

  /// Same path on a grid coarser by an integer factor.
  NoiseBundle coarsen(std::size_t factor) const;
  /// Brownian bridge transform W_t - (t/T)(W_T - endpoint): a path of the
  /// conditional law given W_T = endpoint.
  NoiseBundle pinned(const Vec& endpoint) const;

 private:
  NoiseBundle(const TimeGrid& grid, Mat increments, std::uint64_t seed);

  TimeGrid grid_;
  Mat increments_;
  Mat path_;
  std::vector<double> iterated_;  // nodes * d * d
  std::uint64_t seed_ = 0;
};

/// L^{ij} = I[i][j](t) - I[j][i](t), t = 1 by default. Requires i != j.
double levy_area(const NoiseBundle& bundle, int i, int j, double t = 1.0);

struct SamplePath {
  TimeGrid grid{1.0, 1.0};
  Mat states;                 // nodes x n
  std::vector<Vec> controls;  // per step, empty for ODE paths

  Vec state(std::size_t k) const { return states.row(static_cast<Eigen::Index>(k)).transpose(); }
  Vec final_state() const { return state(grid.steps()); }
};

/// Policy u = policy(t, x). Covers constant, scheduled and feedback controls.
using Policy = std::function<Vec(double t, const Vec& x)>;

Policy constant_policy(Vec u);
/// u(t) = controls[i] on [switch_times[i], switch_times[i+1]); switch_times[0] = 0.
Policy schedule_policy(std::vector<double> switch_times, std::vector<Vec> controls);

/// X_{k+1} = X_k + b(X_k,u_k) dt + sigma(X_k,u_k) dW_k.
/// Throws DivergenceError once |X| > kBlowUpNorm.
SamplePath euler_maruyama(const ControlSystem& sys, const Vec& x0, const Policy& policy,
                          const NoiseBundle& bundle);

using VectorField = std::function<Vec(double t, const Vec& x)>;

/// Classical fixed-step RK4.
SamplePath ode_solve(const VectorField& field, const Vec& x0, const TimeGrid& grid);

// Smoothed driver Y^m_t = int_0^t eta^m_s ds with eta^m_s = sqrt(m) (W_{ms+1} - W_{ms}).
//
// The grid step is dt_W / m so that ms and ms + 1 are driver nodes. With W
// linear between its nodes, eta^m is linear between grid nodes and the
// trapezoid rule integrates it exactly. `reference` holds m^{-1/2} W_{ms},
// the standard Brownian motion obtained from W by scaling, which is the path
// Y^m approaches uniformly as m grows.
struct SmoothedNoise {
  int m = 1;
  TimeGrid grid{1.0, 1.0};
  Mat y;          // nodes x d
  Mat eta;        // nodes x d
  Mat reference;  // nodes x d

  /// eta^m at time t, linear between nodes.
  Vec eta_at(double t) const;
};

/// Requires m >= 1, driver step <= 1/(10 m), 1 a multiple of the driver step,
/// and driver horizon >= m T + 1.
SmoothedNoise wong_zakai_smooth(const NoiseBundle& bundle, int m, double horizon);

/// Solves x' = b~(x,u) + sigma(x,u) eta^m_t with RK4 on the smoothed grid.
SamplePath wong_zakai_solve(const ControlSystem& sys, const Vec& x0, const Vec& u,
                            const SmoothedNoise& noise);

/// Driver step used for Wong-Zakai runs up to m_max: 1 / (10 m_max).
double wong_zakai_driver_step(int m_max);

/// CSV with header "t,x1,...,xn" and 17 significant digits.
void write_csv(const SamplePath& path, std::ostream& out);

}  // namespace invlab
