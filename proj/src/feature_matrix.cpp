#include "lobfeat/feature_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "kernels/feature_row.hpp"
#include "lobfeat/error.hpp"

namespace lobfeat {

std::vector<std::string> feature_columns(const FeatureSelection& select) {
  std::vector<std::string> cols;
  if (select.statistical) {
    cols.insert(cols.end(), {"mid_price", "financial_duration"});
    for (std::size_t l = 1; l <= kMaxDepth; ++l) cols.push_back("ampd_" + std::to_string(l));
    for (std::size_t l = 2; l <= kMaxDepth; ++l) cols.push_back("deep_mid_" + std::to_string(l));
    cols.insert(cols.end(), {"log_return", "log_return_sum"});
  }
  if (select.volatility)
    cols.insert(cols.end(),
                {"realized_variance", "realized_kernel", "preaveraged_rv", "rsv_plus",
                 "rsv_minus", "bipower_variation", "bipower_variation_lag2", "bipower_plus",
                 "bipower_minus", "jump_variation", "spot_volatility",
                 "average_spot_volatility"});
  if (select.noise)
    cols.insert(cols.end(), {"realized_quarticity", "tripower_quarticity",
                             "quadpower_quarticity", "noise_variance_oomen",
                             "noise_variance_zhang"});
  if (select.price_discovery)
    cols.insert(cols.end(),
                {"weighted_mid_price", "volume_imbalance", "bid_ask_spread", "normalized_spread"});
  return cols;
}

DayFeatures extract_features(std::span<const BookSnapshot> snaps, const WindowSpec& spec,
                             const FeatureOptions& options, kernels::Backend backend) {
  spec.validate();
  if (spec.length < 5) throw DomainError("feature windows need at least 5 events");
  const auto& sel = options.select;
  if (!sel.statistical && !sel.volatility && !sel.noise && !sel.price_discovery)
    throw DomainError("no feature group selected");
  if (options.quarticity_window < 4)
    throw DomainError("quarticity window must hold at least 4 returns");

  kernels::detail::FeatureContext ctx;
  ctx.snaps = snaps;
  ctx.options = options;
  ctx.compact.assign(snaps.size(), 0);

  std::vector<double> log_mid;
  std::vector<std::int64_t> times;
  std::vector<std::size_t> invalid_prefix(snaps.size() + 1, 0);
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    invalid_prefix[i + 1] = invalid_prefix[i] + (snaps[i].two_sided() ? 0 : 1);
    if (!snaps[i].two_sided()) continue;
    ctx.compact[i] = log_mid.size();
    log_mid.push_back(std::log(snaps[i].mid_price->to_double()));
    times.push_back(snaps[i].timestamp);
  }
  if (log_mid.size() >= 2) {
    ctx.returns = log_returns(std::span<const double>(log_mid));
    std::vector<double> gaps(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
      gaps[i - 1] = static_cast<double>(times[i] - times[i - 1]) / 1000.0;
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    ctx.median_inter_event_seconds = *mid;
  }
  ctx.noise = NoisePrefix(ctx.returns);

  DayFeatures out;
  out.matrix.columns = feature_columns(sel);
  const std::size_t cols = out.matrix.columns.size();
  if (sel.volatility)
    ctx.spot_column = static_cast<std::size_t>(
        std::find(out.matrix.columns.begin(), out.matrix.columns.end(), "spot_volatility") -
        out.matrix.columns.begin());

  std::vector<kernels::Window> kept;
  for (const auto& w : windows(snaps.size(), spec)) {
    ++out.total_windows;
    if (invalid_prefix[w.second] - invalid_prefix[w.first] != 0) {
      ++out.dropped_windows;
      continue;
    }
    kept.push_back(w);
  }

  out.matrix.values.assign(kept.size() * cols, 0.0);
  out.flags.assign(kept.size(), 0);
  kernels::feature_rows(backend, ctx, kept, cols, out.matrix.values, out.flags);

  if (sel.volatility) {
    RunningMean avg;
    for (std::size_t w = 0; w < kept.size(); ++w) {
      avg.add(out.matrix.at(w, ctx.spot_column));
      out.matrix.at(w, ctx.spot_column + 1) = avg.mean();
    }
  }
  out.window_start.reserve(kept.size());
  out.window_end.reserve(kept.size());
  for (const auto& [s, e] : kept) {
    out.window_start.push_back(s);
    out.window_end.push_back(e);
  }
  return out;
}

}  // namespace lobfeat
