#include "lobfeat/features_noise.hpp"

#include <cmath>
#include <numbers>

#include "lobfeat/error.hpp"
#include "lobfeat/features_vol.hpp"

namespace lobfeat {

namespace {

void require(std::span<const double> r, std::size_t min, const char* what) {
  if (r.size() < min)
    throw DomainError(std::string(what) + ": need at least " + std::to_string(min) +
                      " returns, got " + std::to_string(r.size()));
}

double pow43(double x) { return std::pow(std::abs(x), 4.0 / 3.0); }

const double kMu43 = abs_normal_moment(4.0 / 3.0);
const double kMu1 = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

double abs_normal_moment(double p) {
  return std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

double realized_quarticity(std::span<const double> r) {
  require(r, 1, "realized quarticity");
  double s = 0.0;
  for (double v : r) s += v * v * v * v;
  return static_cast<double>(r.size()) / 3.0 * s;
}

double tripower_quarticity(std::span<const double> r) {
  require(r, 3, "tripower quarticity");
  double s = 0.0;
  for (std::size_t i = 2; i < r.size(); ++i) s += pow43(r[i]) * pow43(r[i - 1]) * pow43(r[i - 2]);
  return static_cast<double>(r.size()) * s / (kMu43 * kMu43 * kMu43);
}

double quadpower_quarticity(std::span<const double> r) {
  require(r, 4, "quadpower quarticity");
  double s = 0.0;
  for (std::size_t i = 3; i < r.size(); ++i)
    s += std::abs(r[i]) * std::abs(r[i - 1]) * std::abs(r[i - 2]) * std::abs(r[i - 3]);
  const double mu4 = kMu1 * kMu1 * kMu1 * kMu1;
  return static_cast<double>(r.size()) * s / mu4;
}

NoiseVariance noise_variance_oomen(std::span<const double> r) {
  require(r, 2, "Oomen noise variance");
  double s = 0.0;
  for (std::size_t i = 1; i < r.size(); ++i) s += r[i] * r[i - 1];
  const double v = -s / static_cast<double>(r.size() - 1);
  return {v, v < 0.0};
}

double noise_variance_zhang(std::span<const double> r) {
  require(r, 1, "Zhang noise variance");
  return realized_variance(r) / (2.0 * static_cast<double>(r.size()));
}

NoisePrefix::NoisePrefix(std::span<const double> r)
    : sq_(r.size() + 1, 0.0),
      quart_(r.size() + 1, 0.0),
      lag1_(r.size() + 1, 0.0),
      tri_(r.size() + 1, 0.0),
      quad_(r.size() + 1, 0.0) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = r[i];
    sq_[i + 1] = sq_[i] + a * a;
    quart_[i + 1] = quart_[i] + a * a * a * a;
    lag1_[i + 1] = lag1_[i] + (i >= 1 ? a * r[i - 1] : 0.0);
    tri_[i + 1] = tri_[i] + (i >= 2 ? pow43(a) * pow43(r[i - 1]) * pow43(r[i - 2]) : 0.0);
    quad_[i + 1] = quad_[i] + (i >= 3 ? std::abs(a) * std::abs(r[i - 1]) *
                                            std::abs(r[i - 2]) * std::abs(r[i - 3])
                                      : 0.0);
  }
}

NoiseMeasures NoisePrefix::window(std::size_t begin, std::size_t end) const {
  if (end > size() || begin + 4 > end)
    throw DomainError("noise window must hold at least 4 returns inside the series");
  const double n = static_cast<double>(end - begin);
  const double mu43_3 = kMu43 * kMu43 * kMu43;
  const double mu1_4 = kMu1 * kMu1 * kMu1 * kMu1;
  NoiseMeasures m;
  m.realized_quarticity = n / 3.0 * (quart_[end] - quart_[begin]);
  m.tripower_quarticity = n * (tri_[end] - tri_[begin + 2]) / mu43_3;
  m.quadpower_quarticity = n * (quad_[end] - quad_[begin + 3]) / mu1_4;
  m.noise_variance_oomen = -(lag1_[end] - lag1_[begin + 1]) / (n - 1.0);
  m.noise_variance_zhang = (sq_[end] - sq_[begin]) / (2.0 * n);
  m.oomen_negative = m.noise_variance_oomen < 0.0;
  // Prefix differences can dip a hair below zero for non-negative sums.
  m.realized_quarticity = std::max(m.realized_quarticity, 0.0);
  m.tripower_quarticity = std::max(m.tripower_quarticity, 0.0);
  m.quadpower_quarticity = std::max(m.quadpower_quarticity, 0.0);
  m.noise_variance_zhang = std::max(m.noise_variance_zhang, 0.0);
  return m;
}

}  // namespace lobfeat
