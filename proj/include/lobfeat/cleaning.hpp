#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lobfeat/book.hpp"
#include "lobfeat/kernels.hpp"

namespace lobfeat {

/// Parameters of the neighbourhood outlier test
///   remove X_i  iff  |X_i - mean_i(k)| >= alpha_sd * sd_i(k) + gamma
/// where mean_i is the trimmed mean and sd_i the sample standard deviation
/// of the k neighbours of X_i.
struct FilterParams {
  int k = 40;                   // even, >= 4
  double alpha_sd = 3.0;
  double gamma = 0.0;           // price units, >= one tick
  double trim_fraction = 0.10;  // per tail, in [0, 0.5)

  /// k = 40, alpha = 3, gamma = 2 ticks, 10% trimming.
  static FilterParams defaults(TickSize tick);
  /// Throws DomainError unless the invariants above hold. `tick` bounds gamma.
  void validate(TickSize tick) const;
  void validate() const;
};

struct SessionFilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t outside_session = 0;
  std::size_t zero_price = 0;
};

/// Keeps events with open <= timestamp <= close and price > 0.
std::vector<MessageEvent> filter_session_bounds(std::span<const MessageEvent> events,
                                                std::int64_t open, std::int64_t close,
                                                SessionFilterReport* report = nullptr);

struct RemovedObservation {
  std::size_t index = 0;
  double value = 0.0;
  double neighborhood_mean = 0.0;
  double neighborhood_sd = 0.0;
  double threshold = 0.0;
};

struct OutlierReport {
  std::size_t input = 0;
  std::size_t removed = 0;
  FilterParams params;
  std::vector<RemovedObservation> removals;
};

struct OutlierResult {
  std::vector<std::uint8_t> kept;  // 1 = keep; same length as the input
  OutlierReport report;
};

/// Single-pass masking: all statistics come from the original series.
/// Requires prices.size() > k.
OutlierResult outlier_filter(std::span<const double> prices, const FilterParams& params,
                             kernels::Backend backend = kernels::Backend::OpenMP);

void write_removal_summary(std::ostream& out, const OutlierReport& report);
/// index,value,neighborhood_mean,neighborhood_sd,threshold
void write_removal_csv(std::ostream& out, const OutlierReport& report);

}  // namespace lobfeat
