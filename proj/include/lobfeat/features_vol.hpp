#pragma once

#include <cstddef>
#include <span>

namespace lobfeat {

// Realized-measure estimators on a slice of log returns r_1..r_n (stored
// 0-based). Every estimator is a pure function of the slice.

double realized_variance(std::span<const double> r);

struct SemiVariance {
  double plus = 0.0;   // squared positive returns
  double minus = 0.0;  // squared negative returns
};
SemiVariance realized_semivariance(std::span<const double> r);

/// (pi/2) * sum_{i > lag} |r_i| |r_{i-lag}|, lag in {1, 2}.
double bipower_variation(std::span<const double> r, int lag = 1);

/// Lag-1 bipower terms split by the sign of the leading return r_i.
SemiVariance bipower_semivariance(std::span<const double> r);

/// max(rv - bv, 0).
double jump_variation(double rv, double bv);

/// Non-flat-top Parzen weight: 1 - 6x^2 + 6x^3 on [0, 1/2], 2(1 - x)^3 on (1/2, 1].
double parzen_weight(double x);

struct KernelSpec {
  std::size_t bandwidth = 0;  // H; 0 reduces the estimator to RV

  /// ceil(n^(3/5)), capped so that n > 2H.
  static KernelSpec default_for(std::size_t n);
};

/// gamma_0 + sum_{h=1..H} k(h/H) (gamma_h + gamma_{-h}) with realized
/// autocovariances gamma_h = sum_i r_i r_{i-h}.
double realized_kernel(std::span<const double> r, const KernelSpec& spec);

struct PreAvgSpec {
  double theta = 1.0;
  double psi1 = 1.0;         // integral of g'(s)^2 for g(x) = min(x, 1 - x)
  double psi2 = 1.0 / 12.0;  // integral of g(s)^2

  /// H = ceil(theta * sqrt(n)).
  std::size_t bandwidth(std::size_t n) const;
  static double weight(double x) { return x < 1.0 - x ? x : 1.0 - x; }
};

/// sqrt(dn)/(theta psi2) * sum_{i=0}^{n-H+1} Xbar_i^2
///   - psi1 dn / (2 theta^2 psi2) * sum r_i^2,
/// Xbar_i = sum_{j=1}^{H-1} g(j/H) r_{i+j}, dn = 1/n. Requires n > H >= 2.
double preaveraged_rv(std::span<const double> r, const PreAvgSpec& spec = {});

struct SpotVolatility {
  double value = 0.0;           // variance per second
  bool event_time_fallback = false;
};

/// Realized variance of the block divided by its horizon in seconds. A
/// zero-duration block uses block_length * median_inter_event_seconds
/// instead, with the median floored at one millisecond.
SpotVolatility spot_volatility(std::span<const double> block_returns,
                               double block_duration_seconds,
                               double median_inter_event_seconds);

/// Mean of the spot-volatility history.
double average_spot_volatility(std::span<const double> history);

/// Incremental form of average_spot_volatility.
class RunningMean {
 public:
  void add(double v) noexcept {
    sum_ += v;
    ++count_;
  }
  double mean() const;
  std::size_t count() const noexcept { return count_; }

 private:
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace lobfeat
