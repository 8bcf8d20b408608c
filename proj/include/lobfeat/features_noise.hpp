#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lobfeat {

/// mu_p = E|Z|^p for standard normal Z: 2^(p/2) Gamma((p+1)/2) / Gamma(1/2).
double abs_normal_moment(double p);

/// (n/3) * sum r_i^4.
double realized_quarticity(std::span<const double> r);

/// n * mu_{4/3}^-3 * sum_{i>=3} |r_i r_{i-1} r_{i-2}|^{4/3}. Requires n >= 3.
double tripower_quarticity(std::span<const double> r);

/// n * mu_1^-4 * sum_{i>=4} |r_i r_{i-1} r_{i-2} r_{i-3}|. Requires n >= 4.
double quadpower_quarticity(std::span<const double> r);

struct NoiseVariance {
  double value = 0.0;
  bool negative = false;  // the first-order autocovariance estimator can go below 0
};

/// -(1/(n-1)) * sum_{i>=2} r_i r_{i-1}. Not clamped.
NoiseVariance noise_variance_oomen(std::span<const double> r);

/// RV / (2n).
double noise_variance_zhang(std::span<const double> r);

/// Default trailing window for the quarticity and noise measures.
inline constexpr std::size_t kQuarticityWindow = 2000;

struct NoiseMeasures {
  double realized_quarticity = 0.0;
  double tripower_quarticity = 0.0;
  double quadpower_quarticity = 0.0;
  double noise_variance_oomen = 0.0;
  double noise_variance_zhang = 0.0;
  bool oomen_negative = false;
};

/// Prefix sums over one day's returns so every trailing window's noise
/// measures cost O(1). Built once, then shared read-only between threads.
class NoisePrefix {
 public:
  explicit NoisePrefix(std::span<const double> r);

  /// Measures over returns [begin, end). Requires end - begin >= 4.
  NoiseMeasures window(std::size_t begin, std::size_t end) const;
  std::size_t size() const noexcept { return sq_.size() - 1; }

 private:
  std::vector<double> sq_, quart_, lag1_, tri_, quad_;
};

}  // namespace lobfeat
