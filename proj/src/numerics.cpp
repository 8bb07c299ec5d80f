#include "invlab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "invlab/errors.hpp"

namespace invlab::numerics {

SymmetricEigen jacobi_eigen(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("jacobi_eigen: matrix is not square");
  }
  if (a.rows() > kMaxJacobiDimension) {
    throw InvalidArgument("jacobi_eigen: dimension " + std::to_string(a.rows()) +
                          " exceeds " + std::to_string(kMaxJacobiDimension));
  }
  if (!a.allFinite()) {
    throw InvalidArgument("jacobi_eigen: non-finite entry");
  }
  const Eigen::Index n = a.rows();
  Mat s = 0.5 * (a + a.transpose());
  Mat v = Mat::Identity(n, n);

  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    }
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = s(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates s(p, q).
        const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double skp = s(k, p);
          const double skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double spk = s(p, k);
          const double sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
        s(p, q) = 0.0;
        s(q, p) = 0.0;
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return s(i, i) < s(j, j);
  });
  SymmetricEigen out{Vec(n), Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = s(src, src);
    out.vectors.col(i) = v.col(src);
  }
  return out;
}

SymmetricSpectrum symmetric_eigenvalues(const Mat& a) {
  const SymmetricEigen eig = jacobi_eigen(a);
  SymmetricSpectrum spectrum;
  spectrum.eigenvalues.assign(eig.values.data(),
                              eig.values.data() + eig.values.size());
  spectrum.asymmetry =
      a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  return spectrum;
}

KsResult ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw InvalidArgument("ks_statistic: empty sample");
  }
  std::vector<double> xs(a.begin(), a.end());
  std::vector<double> ys(b.begin(), b.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());

  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double x = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= x) ++i;
    while (j < ys.size() && ys[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  // One sample is exhausted; the remaining gap is attained right away.
  d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));

  const double scale = std::sqrt((m + n) / (m * n));
  return KsResult{d, kKsCoefficient1Pct * scale, kKsCoefficient5Pct * scale};
}

FiniteDifferenceReport finite_difference_check(
    const std::function<double(const Vec&)>& f,
    const std::function<Vec(const Vec&)>& df, std::span<const Vec> points,
    double h, double tol) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw InvalidArgument("finite_difference_check: h outside [1e-7, 1e-3]");
  }
  FiniteDifferenceReport report;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec& x = points[p];
    const Vec g = df(x);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Vec xp = x;
      Vec xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double fd = (f(xp) - f(xm)) / (2.0 * h);
      const double err = std::abs(fd - g(k)) / std::max(1.0, std::abs(g(k)));
      if (err > report.max_error || !std::isfinite(err)) {
        report.max_error = std::isfinite(err) ? err : INFINITY;
        report.worst_point = p;
      }
    }
  }
  report.pass = report.max_error <= tol;
  return report;
}

std::uint64_t rng_split(std::uint64_t master_seed, std::uint64_t task_index) {
  std::uint64_t z = master_seed + (task_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size() - 1);
}

double sample_skewness(std::span<const double> xs) {
  if (xs.size() < 3) return 0.0;
  const double mu = mean(xs);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : xs) {
    const double c = x - mu;
    m2 += c * c;
    m3 += c * c * c;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InvalidArgument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

}  // namespace invlab::numerics
