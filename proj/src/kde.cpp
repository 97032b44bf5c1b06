#include "rvf/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rvf/error.hpp"

namespace rvf {
namespace {

double epanechnikov_profile(double u) { return u <= 1.0 ? (2.0 / std::numbers::pi) * (1.0 - u) : 0.0; }
double biweight_profile(double u) {
  if (u > 1.0) return 0.0;
  const double t = 1.0 - u;
  return (3.0 / std::numbers::pi) * t * t;
}

constexpr long kMaxCellsPerAxis = 2048;

}  // namespace

KernelSpec epanechnikov() { return {&epanechnikov_profile, 1.0, "epanechnikov"}; }
KernelSpec biweight() { return {&biweight_profile, 1.0, "biweight"}; }

Sym2 sample_covariance(std::span<const Vec2> points) {
  if (points.size() < 3) throw DomainError("density estimation needs at least 3 points");
  const double n = static_cast<double>(points.size());
  Vec2 m;
  for (const auto &p : points) m += p;
  m = m / n;
  Sym2 s;
  for (const auto &p : points) {
    const Vec2 d = p - m;
    s.xx += d.x * d.x;
    s.xy += d.x * d.y;
    s.yy += d.y * d.y;
  }
  s.xx /= n - 1.0;
  s.xy /= n - 1.0;
  s.yy /= n - 1.0;
  if (!(s.xx > 0.0) || !(s.yy > 0.0) || !(s.det() > 1e-12 * s.xx * s.yy))
    throw DomainError("sample covariance is singular (collinear or constant points)");
  return s;
}

KernelSum::KernelSum(std::vector<Vec2> points, const Sym2 &covariance, double h, std::vector<double> lambda,
                     KernelSpec kernel)
    : points_(std::move(points)),
      lambda_(std::move(lambda)),
      cov_(covariance),
      whiten_(Whitener::from_covariance(covariance)),
      h_(h),
      kernel_(kernel) {
  if (!(h > 0.0)) throw DomainError("bandwidth must be positive");
  if (lambda_.size() != points_.size()) throw DomainError("one bandwidth factor per sample required");
  const double n = static_cast<double>(points_.size());
  const double norm = 1.0 / std::sqrt(cov_.det());
  double max_scale = 0.0;
  white_.reserve(points_.size());
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double s = h * lambda_[j];
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("invalid local bandwidth");
    white_.push_back(whiten_.apply(points_[j]));
    inv_scale2_.push_back(1.0 / (s * s));
    coef_.push_back(norm / (n * s * s));
    max_scale = std::max(max_scale, s);
  }

  double lo_x = white_.front().x, hi_x = lo_x, lo_y = white_.front().y, hi_y = lo_y;
  for (const auto &w : white_) {
    lo_x = std::min(lo_x, w.x);
    hi_x = std::max(hi_x, w.x);
    lo_y = std::min(lo_y, w.y);
    hi_y = std::max(hi_y, w.y);
  }
  cell_ = max_scale * std::sqrt(kernel_.support);
  const double span = std::max(hi_x - lo_x, hi_y - lo_y);
  if (span / cell_ > static_cast<double>(kMaxCellsPerAxis)) cell_ = span / static_cast<double>(kMaxCellsPerAxis);
  origin_x_ = lo_x;
  origin_y_ = lo_y;
  nx_ = static_cast<long>(std::floor((hi_x - lo_x) / cell_)) + 1;
  ny_ = static_cast<long>(std::floor((hi_y - lo_y) / cell_)) + 1;

  const auto ncell = static_cast<std::size_t>(nx_ * ny_);
  std::vector<std::size_t> cell_of(white_.size());
  cell_start_.assign(ncell + 1, 0);
  for (std::size_t j = 0; j < white_.size(); ++j) {
    const long cx = std::min(static_cast<long>(std::floor((white_[j].x - origin_x_) / cell_)), nx_ - 1);
    const long cy = std::min(static_cast<long>(std::floor((white_[j].y - origin_y_) / cell_)), ny_ - 1);
    cell_of[j] = static_cast<std::size_t>(cy * nx_ + cx);
    ++cell_start_[cell_of[j] + 1];
  }
  for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
  cell_items_.resize(white_.size());
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t j = 0; j < white_.size(); ++j) cell_items_[fill[cell_of[j]]++] = j;
}

double KernelSum::operator()(const Vec2 &z) const {
  double s = 0.0;
  for_each_contribution(z, [&](std::size_t, double c) { s += c; });
  return s;
}

KernelSum pilot_density(std::vector<Vec2> points, double h, KernelSpec kernel) {
  const Sym2 cov = sample_covariance(points);
  std::vector<double> ones(points.size(), 1.0);
  return KernelSum(std::move(points), cov, h, std::move(ones), kernel);
}

LocalFactors local_factors(std::span<const double> pilot_values, double alpha, GeometricMeanRule rule) {
  if (pilot_values.empty()) throw DomainError("no pilot values");
  double acc = 0.0;
  for (double f : pilot_values) {
    if (!(f > 0.0)) throw DomainError("pilot density is zero at a sample point");
    acc += rule == GeometricMeanRule::Geometric ? std::log(f) : f;
  }
  LocalFactors out;
  out.g = std::exp(acc / static_cast<double>(pilot_values.size()));
  out.lambda.reserve(pilot_values.size());
  for (double f : pilot_values) out.lambda.push_back(std::pow(f / out.g, -alpha));
  return out;
}

AdaptiveDensity adaptive_density(std::vector<Vec2> points, double h, double alpha, KernelSpec kernel,
                                 GeometricMeanRule rule) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("sensitivity alpha must lie in [0, 1)");
  const Sym2 cov = sample_covariance(points);
  std::vector<double> ones(points.size(), 1.0);
  const KernelSum pilot(points, cov, h, std::move(ones), kernel);
  std::vector<double> at_samples;
  at_samples.reserve(points.size());
  for (const auto &p : points) at_samples.push_back(pilot(p));
  auto factors = local_factors(at_samples, alpha, rule);
  return AdaptiveDensity{KernelSum(std::move(points), cov, h, std::move(factors.lambda), kernel),
                         std::move(at_samples), factors.g, alpha};
}

}  // namespace rvf
