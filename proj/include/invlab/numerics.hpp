#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "invlab/types.hpp"

namespace invlab::numerics {

// Spectrum of the symmetric part (A + A^T) / 2, ascending. The asymmetry of
// the input is reported next to it so that callers cannot lose it.
struct SymmetricSpectrum {
  std::vector<double> eigenvalues;
  double asymmetry = 0.0;  // max |A_ij - A_ji|

  double max() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
  double min() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
};

struct SymmetricEigen {
  Vec values;    // ascending
  Mat vectors;   // columns are orthonormal eigenvectors
};

inline constexpr int kMaxJacobiDimension = 64;

/// Cyclic Jacobi rotations on sym(A). Throws InvalidArgument for non-finite
/// entries, non-square input, or dimension above kMaxJacobiDimension.
SymmetricEigen jacobi_eigen(const Mat& a);

SymmetricSpectrum symmetric_eigenvalues(const Mat& a);

// Asymptotic two-sample KS critical coefficients c(alpha).
inline constexpr double kKsCoefficient1Pct = 1.628;
inline constexpr double kKsCoefficient5Pct = 1.358;

struct KsResult {
  double statistic = 0.0;
  double critical_1pct = 0.0;
  double critical_5pct = 0.0;
};

/// Two-sample Kolmogorov-Smirnov statistic D = sup |F_a - F_b| with the
/// critical values c(alpha) * sqrt((m + n) / (m n)).
KsResult ks_statistic(std::span<const double> a, std::span<const double> b);

struct FiniteDifferenceReport {
  double max_error = 0.0;  // max |fd - df| / max(1, |df|) over points/components
  std::size_t worst_point = 0;
  bool pass = false;
};

/// Compares the gradient df against central differences of f at every point.
/// h must lie in [1e-7, 1e-3].
FiniteDifferenceReport finite_difference_check(
    const std::function<double(const Vec&)>& f,
    const std::function<Vec(const Vec&)>& df, std::span<const Vec> points,
    double h, double tol);

/// Stream seed for task `task_index` of a run seeded with `master_seed`.
///
///   z = master_seed + (task_index + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// Every step is a bijection on 64-bit words, so the map is injective in the
/// task index for a fixed master seed and in the master seed for a fixed index.
std::uint64_t rng_split(std::uint64_t master_seed, std::uint64_t task_index);

// Gaussian stream: mt19937_64 seeded with a split seed.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception by index is rethrown.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);
double sample_skewness(std::span<const double> xs);
/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

}  // namespace invlab::numerics
