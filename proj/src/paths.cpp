#include "invlab/paths.hpp"

#include <cmath>
#include <cstdio>

#include "invlab/errors.hpp"
#include "invlab/numerics.hpp"

namespace invlab {

TimeGrid::TimeGrid(double horizon, double dt) : horizon_(horizon), dt_(dt), steps_(0) {
  if (!(horizon > 0.0) || !(dt > 0.0) || !std::isfinite(horizon) || !std::isfinite(dt)) {
    throw InvalidArgument("time grid needs horizon > 0 and dt > 0");
  }
  const double ratio = std::round(horizon / dt);
  if (ratio < 1.0 || std::abs(ratio * dt - horizon) > 1e-12 * std::max(1.0, horizon)) {
    throw InvalidArgument("time grid: dt does not divide the horizon");
  }
  steps_ = static_cast<std::size_t>(ratio);
  dt_ = horizon / ratio;
}

double TimeGrid::time(std::size_t k) const {
  return k == steps_ ? horizon_ : static_cast<double>(k) * dt_;
}

std::size_t TimeGrid::index_of(double t) const {
  const double r = std::round(t / dt_);
  if (r < 0.0 || r > static_cast<double>(steps_) || std::abs(r * dt_ - t) > 1e-9 * dt_) {
    throw InvalidArgument("time " + std::to_string(t) + " is not a grid node");
  }
  return static_cast<std::size_t>(r);
}

NoiseBundle::NoiseBundle(const TimeGrid& grid, Mat increments, std::uint64_t seed)
    : grid_(grid), increments_(std::move(increments)), seed_(seed) {
  const auto steps = static_cast<Eigen::Index>(grid_.steps());
  const Eigen::Index d = increments_.cols();
  if (increments_.rows() != steps || d < 1) {
    throw InvalidArgument("noise increments must be steps x d with d >= 1");
  }
  path_ = Mat::Zero(steps + 1, d);
  const auto dd = static_cast<std::size_t>(d * d);
  iterated_.assign(static_cast<std::size_t>(steps + 1) * dd, 0.0);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const double* prev = iterated_.data() + static_cast<std::size_t>(k) * dd;
    double* next = iterated_.data() + static_cast<std::size_t>(k + 1) * dd;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double wi = path_(k, i);
      const double dwi = increments_(k, i);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double dwj = increments_(k, j);
        const double left = i == j ? wi : wi + 0.5 * dwi;
        const auto idx = static_cast<std::size_t>(i * d + j);
        next[idx] = prev[idx] + left * dwj;
      }
    }
    path_.row(k + 1) = path_.row(k) + increments_.row(k);
  }
}

NoiseBundle NoiseBundle::sample(int d, const TimeGrid& grid, std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("noise dimension must be >= 1");
  numerics::NormalStream normal(seed);
  const double sd = std::sqrt(grid.dt());
  Mat inc(static_cast<Eigen::Index>(grid.steps()), d);
  for (Eigen::Index k = 0; k < inc.rows(); ++k) {
    for (int i = 0; i < d; ++i) inc(k, i) = sd * normal();
  }
  return NoiseBundle(grid, std::move(inc), seed);
}

NoiseBundle NoiseBundle::from_increments(const TimeGrid& grid, Mat increments,
                                         std::uint64_t seed) {
  return NoiseBundle(grid, std::move(increments), seed);
}

double NoiseBundle::iterated(int i, int j, std::size_t k) const {
  const int d = dim();
  if (i < 0 || j < 0 || i >= d || j >= d || k > grid_.steps()) {
    throw InvalidArgument("iterated integral index out of range");
  }
  return iterated_[k * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(i * d + j)];
}

NoiseBundle NoiseBundle::coarsen(std::size_t factor) const {
  if (factor == 0 || grid_.steps() % factor != 0) {
    throw InvalidArgument("coarsening factor must divide the step count");
  }
  const TimeGrid coarse(grid_.horizon(), grid_.dt() * static_cast<double>(factor));
  Mat inc = Mat::Zero(static_cast<Eigen::Index>(coarse.steps()), increments_.cols());
  for (Eigen::Index k = 0; k < increments_.rows(); ++k) {
    inc.row(k / static_cast<Eigen::Index>(factor)) += increments_.row(k);
  }
  return NoiseBundle(coarse, std::move(inc), seed_);
}

NoiseBundle NoiseBundle::pinned(const Vec& endpoint) const {
  if (endpoint.size() != increments_.cols()) {
    throw InvalidArgument("pinned endpoint dimension mismatch");
  }
  const Vec shift = (endpoint - w(grid_.steps())) / static_cast<double>(grid_.steps());
  Mat inc = increments_;
  inc.rowwise() += shift.transpose();
  return NoiseBundle(grid_, std::move(inc), seed_);
}

double levy_area(const NoiseBundle& bundle, int i, int j, double t) {
  if (i == j) throw InvalidArgument("levy_area needs i != j");
  const std::size_t k = bundle.grid().index_of(t);
  return bundle.iterated(i, j, k) - bundle.iterated(j, i, k);
}

Policy constant_policy(Vec u) {
  return [u = std::move(u)](double, const Vec&) { return u; };
}

Policy schedule_policy(std::vector<double> switch_times, std::vector<Vec> controls) {
  if (switch_times.empty() || switch_times.size() != controls.size() || switch_times[0] != 0.0) {
    throw InvalidArgument("schedule needs matching switch times starting at 0");
  }
  return [times = std::move(switch_times), us = std::move(controls)](double t, const Vec&) {
    std::size_t i = 0;
    while (i + 1 < times.size() && t >= times[i + 1]) ++i;
    return us[i];
  };
}

namespace {

void check_blow_up(const Vec& x, std::size_t step) {
  if (!x.allFinite() || x.norm() > kBlowUpNorm) {
    throw DivergenceError(step, "state blow-up (|x| > 1e8) at step " + std::to_string(step));
  }
}

}  // namespace

SamplePath euler_maruyama(const ControlSystem& sys, const Vec& x0, const Policy& policy,
                          const NoiseBundle& bundle) {
  if (x0.size() != sys.n) throw InvalidArgument("initial state has wrong dimension");
  if (bundle.dim() != sys.d) throw InvalidArgument("noise dimension does not match the system");
  const TimeGrid& grid = bundle.grid();
  SamplePath out;
  out.grid = grid;
  out.states.resize(static_cast<Eigen::Index>(grid.nodes()), sys.n);
  out.controls.reserve(grid.steps());
  Vec x = x0;
  out.states.row(0) = x.transpose();
  const double dt = grid.dt();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    Vec u = policy(grid.time(k), x);
    const Vec b = eval_drift(sys, x, u);
    const Mat s = eval_diffusion(sys, x, u);
    x += b * dt + s * bundle.increments().row(static_cast<Eigen::Index>(k)).transpose();
    check_blow_up(x, k + 1);
    out.states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
    out.controls.push_back(std::move(u));
  }
  return out;
}

SamplePath ode_solve(const VectorField& field, const Vec& x0, const TimeGrid& grid) {
  SamplePath out;
  out.grid = grid;
  out.states.resize(static_cast<Eigen::Index>(grid.nodes()), x0.size());
  Vec x = x0;
  out.states.row(0) = x.transpose();
  const double h = grid.dt();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid.time(k);
    const Vec k1 = field(t, x);
    const Vec k2 = field(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = field(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = field(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_blow_up(x, k + 1);
    out.states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
  }
  return out;
}

double wong_zakai_driver_step(int m_max) {
  if (m_max < 1) throw InvalidArgument("Wong-Zakai parameter m must be >= 1");
  return 1.0 / (10.0 * m_max);
}

Vec SmoothedNoise::eta_at(double t) const {
  const double pos = t / grid.dt();
  auto lo = static_cast<Eigen::Index>(std::floor(pos));
  lo = std::clamp<Eigen::Index>(lo, 0, static_cast<Eigen::Index>(grid.steps()) - 1);
  const double frac = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
  return ((1.0 - frac) * eta.row(lo) + frac * eta.row(lo + 1)).transpose();
}

SmoothedNoise wong_zakai_smooth(const NoiseBundle& bundle, int m, double horizon) {
  if (m < 1) throw InvalidArgument("Wong-Zakai parameter m must be >= 1");
  const double dtw = bundle.grid().dt();
  if (dtw > 1.0 / (10.0 * m) * (1.0 + 1e-12)) {
    throw InvalidArgument("driver resolution too coarse for m = " + std::to_string(m) +
                          " (need dt <= 1/(10 m))");
  }
  const double lag_steps = std::round(1.0 / dtw);
  if (std::abs(lag_steps * dtw - 1.0) > 1e-9) {
    throw InvalidArgument("driver step must divide the unit lag");
  }
  if (bundle.grid().horizon() < m * horizon + 1.0 - 1e-9) {
    throw InvalidArgument("driver horizon must cover [0, m T + 1]");
  }
  const auto lag = static_cast<Eigen::Index>(lag_steps);

  SmoothedNoise out{m, TimeGrid(horizon, dtw / m), {}, {}, {}};
  const auto nodes = static_cast<Eigen::Index>(out.grid.nodes());
  const Eigen::Index d = bundle.dim();
  const Mat& w = bundle.path();
  const double root_m = std::sqrt(static_cast<double>(m));
  out.eta.resize(nodes, d);
  out.y.resize(nodes, d);
  out.reference.resize(nodes, d);
  for (Eigen::Index l = 0; l < nodes; ++l) {
    out.eta.row(l) = root_m * (w.row(l + lag) - w.row(l));
    out.reference.row(l) = w.row(l) / root_m;
  }
  out.y.row(0).setZero();
  const double h = out.grid.dt();
  for (Eigen::Index l = 0; l + 1 < nodes; ++l) {
    out.y.row(l + 1) = out.y.row(l) + 0.5 * h * (out.eta.row(l) + out.eta.row(l + 1));
  }
  return out;
}

SamplePath wong_zakai_solve(const ControlSystem& sys, const Vec& x0, const Vec& u,
                            const SmoothedNoise& noise) {
  if (noise.eta.cols() != sys.d) throw InvalidArgument("noise dimension does not match the system");
  VectorField field = [&](double t, const Vec& x) -> Vec {
    return stratonovich_drift(sys, x, u) + eval_diffusion(sys, x, u) * noise.eta_at(t);
  };
  return ode_solve(field, x0, noise.grid);
}

void write_csv(const SamplePath& path, std::ostream& out) {
  out << "t";
  for (Eigen::Index i = 0; i < path.states.cols(); ++i) out << ",x" << (i + 1);
  out << "\n";
  char buf[32];
  for (std::size_t k = 0; k < path.grid.nodes(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", path.grid.time(k));
    out << buf;
    for (Eigen::Index i = 0; i < path.states.cols(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", path.states(static_cast<Eigen::Index>(k), i));
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace invlab
