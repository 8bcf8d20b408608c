#include "lobfeat/features_vol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lobfeat/error.hpp"

namespace lobfeat {

namespace {

void require(std::span<const double> r, std::size_t min, const char* what) {
  if (r.size() < min)
    throw DomainError(std::string(what) + ": need at least " + std::to_string(min) +
                      " returns, got " + std::to_string(r.size()));
}

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

double realized_variance(std::span<const double> r) {
  require(r, 1, "realized variance");
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

SemiVariance realized_semivariance(std::span<const double> r) {
  require(r, 1, "realized semivariance");
  SemiVariance out;
  for (double v : r) {
    if (v > 0.0) out.plus += v * v;
    else if (v < 0.0) out.minus += v * v;
  }
  return out;
}

double bipower_variation(std::span<const double> r, int lag) {
  if (lag != 1 && lag != 2) throw DomainError("bipower variation: lag must be 1 or 2");
  const auto l = static_cast<std::size_t>(lag);
  require(r, l + 1, "bipower variation");
  double s = 0.0;
  for (std::size_t i = l; i < r.size(); ++i) s += std::abs(r[i]) * std::abs(r[i - l]);
  return kHalfPi * s;
}

SemiVariance bipower_semivariance(std::span<const double> r) {
  require(r, 2, "bipower semivariance");
  SemiVariance out;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double term = std::abs(r[i]) * std::abs(r[i - 1]);
    if (r[i] > 0.0) out.plus += term;
    else if (r[i] < 0.0) out.minus += term;
  }
  out.plus *= kHalfPi;
  out.minus *= kHalfPi;
  return out;
}

double jump_variation(double rv, double bv) { return std::max(rv - bv, 0.0); }

double parzen_weight(double x) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x <= 0.5) return 1.0 - 6.0 * x * x + 6.0 * x * x * x;
  const double u = 1.0 - x;
  return 2.0 * u * u * u;
}

KernelSpec KernelSpec::default_for(std::size_t n) {
  auto h = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.6)));
  if (n > 0) h = std::min(h, (n - 1) / 2);
  return {h};
}

double realized_kernel(std::span<const double> r, const KernelSpec& spec) {
  require(r, 1, "realized kernel");
  const std::size_t H = spec.bandwidth;
  if (H >= r.size())
    throw DomainError("realized kernel: bandwidth " + std::to_string(H) +
                      " must be below the series length " + std::to_string(r.size()));
  double rk = realized_variance(r);
  for (std::size_t h = 1; h <= H; ++h) {
    double gamma = 0.0;
    for (std::size_t i = h; i < r.size(); ++i) gamma += r[i] * r[i - h];
    const double w = parzen_weight(static_cast<double>(h) / static_cast<double>(H));
    rk += w * (gamma + gamma);
  }
  return rk;
}

std::size_t PreAvgSpec::bandwidth(std::size_t n) const {
  return static_cast<std::size_t>(std::ceil(theta * std::sqrt(static_cast<double>(n))));
}

double preaveraged_rv(std::span<const double> r, const PreAvgSpec& spec) {
  require(r, 1, "pre-averaged RV");
  if (!(spec.theta > 0.0)) throw DomainError("pre-averaged RV: theta must be positive");
  const std::size_t n = r.size();
  const std::size_t H = spec.bandwidth(n);
  if (H < 2 || n <= H)
    throw DomainError("pre-averaged RV: need n > H >= 2 (n=" + std::to_string(n) +
                      ", H=" + std::to_string(H) + ")");
  const double dn = 1.0 / static_cast<double>(n);

  std::vector<double> g(H);
  for (std::size_t j = 1; j < H; ++j)
    g[j] = PreAvgSpec::weight(static_cast<double>(j) / static_cast<double>(H));

  // Returns are r_1..r_n, i.e. r_m lives at r[m - 1].
  double sum_sq = 0.0;
  for (std::size_t i = 0; i <= n - H + 1; ++i) {
    double xbar = 0.0;
    for (std::size_t j = 1; j < H && i + j <= n; ++j) xbar += g[j] * r[i + j - 1];
    sum_sq += xbar * xbar;
  }
  const double rv = realized_variance(r);
  return std::sqrt(dn) / (spec.theta * spec.psi2) * sum_sq -
         spec.psi1 * dn / (2.0 * spec.theta * spec.theta * spec.psi2) * rv;
}

SpotVolatility spot_volatility(std::span<const double> block_returns,
                               double block_duration_seconds,
                               double median_inter_event_seconds) {
  require(block_returns, 1, "spot volatility");
  if (block_duration_seconds < 0.0) throw DomainError("spot volatility: negative duration");
  const double rv = realized_variance(block_returns);
  if (block_duration_seconds > 0.0) return {rv / block_duration_seconds, false};
  const double per_event = std::max(median_inter_event_seconds, 1e-3);
  const double h = static_cast<double>(block_returns.size()) * per_event;
  return {rv / h, true};
}

double average_spot_volatility(std::span<const double> history) {
  if (history.empty()) throw DomainError("average spot volatility: empty history");
  double s = 0.0;
  for (double v : history) s += v;
  return s / static_cast<double>(history.size());
}

double RunningMean::mean() const {
  if (count_ == 0) throw DomainError("running mean: no observations");
  return sum_ / static_cast<double>(count_);
}

}  // namespace lobfeat
