#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "lobfeat/feature_matrix.hpp"
#include "lobfeat/features_noise.hpp"
#include "lobfeat/features_stat.hpp"
#include "lobfeat/features_vol.hpp"

namespace lobfeat::kernels::detail {

// Read-only state for one day, shared by every row computation.
struct FeatureContext {
  std::span<const BookSnapshot> snaps;
  std::vector<std::size_t> compact;   // snapshot index -> index among two-sided snapshots
  std::vector<double> returns;        // log-mid returns between consecutive two-sided snapshots
  NoisePrefix noise{std::span<const double>{}};
  double median_inter_event_seconds = 0.0;
  FeatureOptions options;
  std::size_t spot_column = 0;        // column of spot_volatility, if selected
};

inline double level_mid(const BookSnapshot& s, std::size_t level, bool& missing) {
  if (level == 1) return mid_price(s).to_double();
  if (s.ask_count < level || s.bid_count < level) {
    missing = true;
    return 0.0;
  }
  return deep_mid_price(s, static_cast<int>(level)).to_double();
}

inline void feature_row(const FeatureContext& ctx, std::pair<std::size_t, std::size_t> w,
                        std::span<double> row, std::uint8_t& flags) {
  const auto [start, end] = w;
  const auto& snaps = ctx.snaps;
  const auto& sel = ctx.options.select;
  const std::size_t len = end - start;
  const std::size_t first_ret = ctx.compact[start];
  const std::span<const double> r(ctx.returns.data() + first_ret, len - 1);
  const BookSnapshot& last = snaps[end - 1];
  std::size_t c = 0;
  flags = 0;

  if (sel.statistical) {
    row[c++] = mid_price(last).to_double();
    row[c++] = static_cast<double>(
        financial_duration(last.timestamp, snaps[end - 2].timestamp));
    std::vector<std::int64_t> times(len);
    std::vector<double> prices(len);
    for (std::size_t i = 0; i < len; ++i) times[i] = snaps[start + i].timestamp;
    for (std::size_t level = 1; level <= kMaxDepth; ++level) {
      bool missing = false;
      for (std::size_t i = 0; i < len && !missing; ++i)
        prices[i] = level_mid(snaps[start + i], level, missing);
      if (missing) {
        flags |= kMissingDepth;
        row[c++] = 0.0;
        continue;
      }
      const AmpdResult a = avg_midprice_financial_duration(times, prices);
      if (a.degenerate) flags |= kAmpdDegenerate;
      row[c++] = a.value;
    }
    for (std::size_t level = 2; level <= kMaxDepth; ++level) {
      bool missing = false;
      const double v = level_mid(last, level, missing);
      if (missing) flags |= kMissingDepth;
      row[c++] = v;
    }
    row[c++] = r.back();
    double sum = 0.0;
    for (double v : r) sum += v;
    row[c++] = sum;
  }

  if (sel.volatility) {
    const double rv = realized_variance(r);
    const double bv = bipower_variation(r, 1);
    const SemiVariance rsv = realized_semivariance(r);
    const SemiVariance bsv = bipower_semivariance(r);
    const SpotVolatility sv = spot_volatility(
        r, static_cast<double>(last.timestamp - snaps[start].timestamp) / 1000.0,
        ctx.median_inter_event_seconds);
    if (sv.event_time_fallback) flags |= kSpotVolFallback;
    row[c++] = rv;
    row[c++] = realized_kernel(r, KernelSpec::default_for(r.size()));
    row[c++] = preaveraged_rv(r);
    row[c++] = rsv.plus;
    row[c++] = rsv.minus;
    row[c++] = bv;
    row[c++] = bipower_variation(r, 2);
    row[c++] = bsv.plus;
    row[c++] = bsv.minus;
    row[c++] = jump_variation(rv, bv);
    row[c++] = sv.value;
    row[c++] = 0.0;  // average_spot_volatility, filled by the day scan
  }

  if (sel.noise) {
    const std::size_t ret_end = first_ret + len - 1;
    const std::size_t q = ctx.options.quarticity_window;
    const std::size_t ret_begin = ret_end > q ? ret_end - q : 0;
    if (ret_end - ret_begin < q) flags |= kShortNoiseWindow;
    const NoiseMeasures m = ctx.noise.window(ret_begin, ret_end);
    if (m.oomen_negative) flags |= kOomenNegative;
    row[c++] = m.realized_quarticity;
    row[c++] = m.tripower_quarticity;
    row[c++] = m.quadpower_quarticity;
    row[c++] = m.noise_variance_oomen;
    row[c++] = m.noise_variance_zhang;
  }

  if (sel.price_discovery) {
    const PriceLevel& a = last.ask_levels[0];
    const PriceLevel& b = last.bid_levels[0];
    row[c++] = weighted_mid_price(a.price, b.price, a.quantity, b.quantity,
                                  ctx.options.weighting)
                   .to_double();
    row[c++] = volume_imbalance(a.quantity, b.quantity);
    const SpreadMeasures s = spreads(last, ctx.options.tick);
    row[c++] = static_cast<double>(s.spread);
    row[c++] = s.normalized.to_double();
  }
}

}  // namespace lobfeat::kernels::detail
