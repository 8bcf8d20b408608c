#include "lobfeat/features_stat.hpp"

#include <cmath>

#include "lobfeat/error.hpp"

namespace lobfeat {

void LogPriceSeries::validate() const {
  if (values.size() != timestamps.size())
    throw DomainError("log-price series: values and timestamps differ in length");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (timestamps[i] < timestamps[i - 1])
      throw DomainError("log-price series: timestamps decrease at index " + std::to_string(i));
}

void WindowSpec::validate() const {
  if (length == 0) throw DomainError("window length must be positive");
  if (stride == 0 || stride > length)
    throw DomainError("window stride must be in 1..=length");
}

std::int64_t financial_duration(std::int64_t t_now, std::int64_t t_prev) {
  if (t_now < t_prev)
    throw DomainError("financial duration: t_now " + std::to_string(t_now) +
                      " precedes t_prev " + std::to_string(t_prev));
  return t_now - t_prev;
}

AmpdResult avg_midprice_financial_duration(std::span<const std::int64_t> times,
                                           std::span<const double> prices) {
  if (times.size() != prices.size())
    throw DomainError("AMPD: times and prices differ in length");
  if (times.size() < 2) throw DomainError("AMPD: window needs at least 2 events");
  double dt = 0.0, dp = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    dt += static_cast<double>(times[i] - times[i - 1]);
    dp += prices[i] - prices[i - 1];
  }
  if (dp == 0.0) return {0.0, true};
  return {dt / dp, false};
}

std::vector<double> log_returns(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("log returns need at least 2 prices");
  std::vector<double> r(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) r[i - 1] = x[i] - x[i - 1];
  return r;
}

std::vector<double> log_returns(const LogPriceSeries& x) {
  x.validate();
  return log_returns(std::span<const double>(x.values));
}

Rational weighted_mid_price(std::int64_t ask, std::int64_t bid, std::int64_t v_ask,
                            std::int64_t v_bid, ImbalanceWeighting weighting) {
  if (v_ask < 0 || v_bid < 0) throw DomainError("weighted mid: negative volume");
  if (v_ask + v_bid == 0) throw DomainError("weighted mid: zero total volume");
  if (weighting == ImbalanceWeighting::AsPrinted)
    return Rational(ask * v_ask + bid * v_bid, v_ask + v_bid);
  return Rational(ask * v_bid + bid * v_ask, v_ask + v_bid);
}

double volume_imbalance(std::int64_t v_ask, std::int64_t v_bid) {
  if (v_ask < 0 || v_bid < 0) throw DomainError("volume imbalance: negative volume");
  if (v_ask + v_bid == 0) throw DomainError("volume imbalance: zero total volume");
  return static_cast<double>(v_bid) / static_cast<double>(v_ask + v_bid);
}

SpreadMeasures spreads(const BookSnapshot& snap, TickSize tick) {
  if (!snap.two_sided()) throw DomainError("spread undefined: book is one-sided or crossed");
  const std::int64_t s = snap.ask_levels[0].price - snap.bid_levels[0].price;
  return {s, Rational(s, tick.value())};
}

}  // namespace lobfeat
