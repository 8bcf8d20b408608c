#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lobfeat/book.hpp"
#include "lobfeat/features_noise.hpp"
#include "lobfeat/features_stat.hpp"
#include "lobfeat/kernels.hpp"
#include "lobfeat/protocol.hpp"

namespace lobfeat {

struct FeatureSelection {
  bool statistical = true;
  bool volatility = true;
  bool noise = true;
  bool price_discovery = true;
};

struct FeatureOptions {
  FeatureSelection select;
  TickSize tick{1};
  std::size_t quarticity_window = kQuarticityWindow;
  ImbalanceWeighting weighting = ImbalanceWeighting::AsPrinted;
};

/// Feature columns in output order for a selection. The full order is
///   statistical     mid_price, financial_duration, ampd_1..ampd_10,
///                   deep_mid_2..deep_mid_10, log_return, log_return_sum
///   volatility      realized_variance, realized_kernel, preaveraged_rv,
///                   rsv_plus, rsv_minus, bipower_variation,
///                   bipower_variation_lag2, bipower_plus, bipower_minus,
///                   jump_variation, spot_volatility, average_spot_volatility
///   noise           realized_quarticity, tripower_quarticity,
///                   quadpower_quarticity, noise_variance_oomen,
///                   noise_variance_zhang
///   price discovery weighted_mid_price, volume_imbalance, bid_ask_spread,
///                   normalized_spread
std::vector<std::string> feature_columns(const FeatureSelection& select);

enum RowFlag : std::uint8_t {
  kAmpdDegenerate = 1u << 0,      // some level had zero net price change
  kOomenNegative = 1u << 1,
  kShortNoiseWindow = 1u << 2,    // fewer than quarticity_window returns available
  kSpotVolFallback = 1u << 3,     // zero-duration block, event-time horizon used
  kMissingDepth = 1u << 4,        // a deeper level was absent; its cells are 0
};

/// Features for one instrument-day. Row r belongs to the window
/// [window_start[r], window_end[r]) of snapshot indices.
struct DayFeatures {
  Matrix matrix;
  std::vector<std::size_t> window_start;
  std::vector<std::size_t> window_end;
  std::vector<std::uint8_t> flags;
  std::size_t dropped_windows = 0;  // windows containing a one-sided/crossed snapshot
  std::size_t total_windows = 0;
};

/// Evaluates every window of `spec` over the snapshot sequence. Windows
/// holding a flagged snapshot are dropped; window length must be >= 5.
DayFeatures extract_features(std::span<const BookSnapshot> snaps, const WindowSpec& spec,
                             const FeatureOptions& options,
                             kernels::Backend backend = kernels::Backend::OpenMP);

}  // namespace lobfeat
