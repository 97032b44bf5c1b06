#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rvf/geometry.hpp"

namespace rvf {

/// Radial kernel profile k with K(z) = k(z^T z). The profile vanishes for
/// arguments above `support` (squared Mahalanobis radius).
struct KernelSpec {
  double (*profile)(double u) = nullptr;
  double support = 1.0;
  const char *name = "";
};

/// K(z) = (2/pi)(1 - |z|^2) on the unit disc.
KernelSpec epanechnikov();
/// K(z) = (3/pi)(1 - |z|^2)^2 on the unit disc.
KernelSpec biweight();

/// How the normalizer g of the local bandwidth factors aggregates the pilot
/// values at the sample points.
enum class GeometricMeanRule {
  /// exp(mean(log f)), the geometric mean.
  Geometric,
  /// exp(mean(f)), kept for sensitivity runs.
  ExpOfMean,
};

#ifdef RVF_LITERAL_G_MEAN
inline constexpr GeometricMeanRule kDefaultMeanRule = GeometricMeanRule::ExpOfMean;
#else
inline constexpr GeometricMeanRule kDefaultMeanRule = GeometricMeanRule::Geometric;
#endif

/// Unbiased sample covariance. Throws DomainError for fewer than 3 points
/// or a (numerically) singular result.
Sym2 sample_covariance(std::span<const Vec2> points);

/// Sum of elliptical kernels sharing the sample covariance S, each with its
/// own scale h * lambda_j:
///
///   f(z) = det(S)^(-1/2) / N * sum_j k(d_j(z)^2 / (h lambda_j)^2) / (h lambda_j)^2
///
/// where d_j is the Mahalanobis distance to sample j. Points are whitened
/// and bucketed so a query only visits samples inside the kernel support.
class KernelSum {
 public:
  KernelSum(std::vector<Vec2> points, const Sym2 &covariance, double h, std::vector<double> lambda,
            KernelSpec kernel);

  double operator()(const Vec2 &z) const;

  /// Calls f(j, c_j) for every sample whose kernel is non-zero at z, where
  /// c_j is sample j's additive contribution to the density at z.
  template <class F>
  void for_each_contribution(const Vec2 &z, F &&f) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec2> &points() const { return points_; }
  const std::vector<double> &lambda() const { return lambda_; }
  const Sym2 &covariance() const { return cov_; }
  double bandwidth() const { return h_; }
  const KernelSpec &kernel() const { return kernel_; }
  /// k(0): peak profile value, used to express kernel mass in sample units.
  double peak() const { return kernel_.profile(0.0); }

 private:
  std::vector<Vec2> points_;
  std::vector<Vec2> white_;
  std::vector<double> inv_scale2_;  // 1 / (h lambda_j)^2
  std::vector<double> coef_;        // det(S)^(-1/2) / (N (h lambda_j)^2)
  std::vector<double> lambda_;
  Sym2 cov_;
  Whitener whiten_;
  double h_;
  KernelSpec kernel_;

  // Uniform bucket grid over the whitened sample (CSR layout).
  double cell_ = 1.0;
  double origin_x_ = 0.0, origin_y_ = 0.0;
  long nx_ = 1, ny_ = 1;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_items_;
};

/// Fixed-bandwidth pilot estimate (all lambda_j = 1).
KernelSum pilot_density(std::vector<Vec2> points, double h, KernelSpec kernel = epanechnikov());

struct LocalFactors {
  std::vector<double> lambda;
  double g = 1.0;
};

/// lambda_j = (f_j / g)^(-alpha). Throws DomainError on a non-positive
/// pilot value.
LocalFactors local_factors(std::span<const double> pilot_values, double alpha,
                           GeometricMeanRule rule = kDefaultMeanRule);

/// Adaptive estimator with all intermediate quantities retained.
struct AdaptiveDensity {
  KernelSum estimate;
  std::vector<double> pilot_at_samples;
  double g = 1.0;
  double alpha = 0.0;

  double operator()(const Vec2 &z) const { return estimate(z); }
};

/// Pilot estimate, local factors, then the adaptive estimate. alpha must lie
/// in [0, 1).
AdaptiveDensity adaptive_density(std::vector<Vec2> points, double h, double alpha,
                                 KernelSpec kernel = epanechnikov(),
                                 GeometricMeanRule rule = kDefaultMeanRule);

// ---------------------------------------------------------------------------

template <class F>
void KernelSum::for_each_contribution(const Vec2 &z, F &&f) const {
  const Vec2 u = whiten_.apply(z);
  if (!is_finite(u)) return;
  const long cx = static_cast<long>(std::floor((u.x - origin_x_) / cell_));
  const long cy = static_cast<long>(std::floor((u.y - origin_y_) / cell_));
  for (long gy = std::max(cy - 1, 0L); gy <= std::min(cy + 1, ny_ - 1); ++gy) {
    for (long gx = std::max(cx - 1, 0L); gx <= std::min(cx + 1, nx_ - 1); ++gx) {
      const auto cell = static_cast<std::size_t>(gy * nx_ + gx);
      for (std::size_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
        const std::size_t j = cell_items_[k];
        const double dx = u.x - white_[j].x;
        const double dy = u.y - white_[j].y;
        const double arg = (dx * dx + dy * dy) * inv_scale2_[j];
        if (arg > kernel_.support) continue;
        const double c = coef_[j] * kernel_.profile(arg);
        if (c > 0.0) f(j, c);
      }
    }
  }
}

}  // namespace rvf
