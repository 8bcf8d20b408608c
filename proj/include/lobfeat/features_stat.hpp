#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lobfeat/book.hpp"
#include "lobfeat/rational.hpp"

namespace lobfeat {

/// Natural-log mid-prices with their event timestamps.
struct LogPriceSeries {
  std::vector<double> values;
  std::vector<std::int64_t> timestamps;

  /// Throws DomainError on length mismatch or decreasing timestamps.
  void validate() const;
};

/// Rolling event window: `length` events, advanced by `stride`.
struct WindowSpec {
  std::size_t length = 10;
  std::size_t stride = 1;

  static WindowSpec protocol1(std::size_t length = 10) { return {length, 1}; }
  static WindowSpec protocol2(std::size_t length = 10) { return {length, length}; }
  void validate() const;
};

/// t_now - t_prev in ms; negative durations are an ordering violation.
std::int64_t financial_duration(std::int64_t t_now, std::int64_t t_prev);

struct AmpdResult {
  double value = 0.0;
  bool degenerate = false;  // price differences summed to zero
};

/// Sum of consecutive time differences over sum of consecutive price
/// differences across the window (the two partial cumulative sums at the
/// window end). Returns 0 flagged degenerate when the price sum is 0.
AmpdResult avg_midprice_financial_duration(std::span<const std::int64_t> times,
                                           std::span<const double> prices);

/// r_i = X_i - X_{i-1}.
std::vector<double> log_returns(std::span<const double> log_prices);
std::vector<double> log_returns(const LogPriceSeries& x);

enum class ImbalanceWeighting {
  AsPrinted,   // ask weighted by ask volume
  MicroPrice,  // ask weighted by bid volume (the usual micro-price)
};

/// (ask * v_ask + bid * v_bid) / (v_ask + v_bid) under the default weighting.
Rational weighted_mid_price(std::int64_t ask, std::int64_t bid, std::int64_t v_ask,
                            std::int64_t v_bid,
                            ImbalanceWeighting weighting = ImbalanceWeighting::AsPrinted);

/// v_bid / (v_ask + v_bid).
double volume_imbalance(std::int64_t v_ask, std::int64_t v_bid);

struct SpreadMeasures {
  std::int64_t spread = 0;
  Rational normalized;  // spread in ticks
};

SpreadMeasures spreads(const BookSnapshot& snap, TickSize tick);

}  // namespace lobfeat
