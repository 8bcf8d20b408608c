#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lobfeat/features_stat.hpp"
#include "lobfeat/rational.hpp"

namespace lobfeat {

enum class Protocol { I, II };

/// Half-open [start, end) event ranges. Stride 1 gives n - length + 1
/// overlapping windows; stride == length gives floor(n / length) disjoint ones.
/// Fewer than `length` events yields no windows.
std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n_events,
                                                         const WindowSpec& spec);

enum class Direction : std::int8_t { Down = -1, Up = 1 };

struct LabelP1 {
  Direction direction = Direction::Up;
  std::size_t horizon = 1;  // events until the mid-price next changes
  friend bool operator==(const LabelP1&, const LabelP1&) = default;
};

/// Scans forward from `at` to the first mid-price different from mids[at].
/// std::nullopt when the mid never changes before the end of the sequence.
std::optional<LabelP1> label_protocol1(std::span<const Rational> mids, std::size_t at);

enum class Movement : std::int8_t { Down = -1, Stationary = 0, Up = 1 };

struct LabelP2Params {
  std::size_t horizon = 10;                // r
  Rational alpha = Rational(1, 50000);     // 2e-5
};

/// Mean of mids[at+1 ..= at+r] against mids[at]: Up above 1 + alpha, Down
/// below 1 - alpha, Stationary otherwise. std::nullopt with fewer than r
/// future mids. Compared exactly.
std::optional<Movement> label_protocol2(std::span<const Rational> mids, std::size_t at,
                                        const LabelP2Params& params = {});

/// Optional discretisation of Protocol I horizons into bins with
/// monotonically increasing limits: returns p with limits[p] <= h < limits[p+1]
/// (the last bin is open-ended). Not used for the default regression target.
std::size_t horizon_bin(std::size_t horizon, std::span<const std::size_t> limits);

/// Indices that keep every class at the minority-class count. Deterministic
/// for a seed; returned in ascending (original) order. Throws on fewer than
/// two classes.
std::vector<std::size_t> undersample(std::span<const int> labels, std::uint64_t seed);

struct MinMaxParams {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::uint8_t> constant;  // min == max: column maps to 0
};

/// Row-major numeric matrix with named columns.
struct Matrix {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::size_t rows() const { return columns.empty() ? 0 : values.size() / columns.size(); }
  std::size_t cols() const { return columns.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
};

MinMaxParams minmax_fit(const Matrix& train);

struct MinMaxApplied {
  Matrix normalized;
  std::size_t out_of_range = 0;  // cells outside [0, 1] (kept, not clipped)
};

/// (x - min) / (max - min) per column with fitted parameters; constant
/// columns map to 0. Throws on column mismatch.
MinMaxApplied minmax_apply(const MinMaxParams& params,
                           const std::vector<std::string>& fitted_columns,
                           const Matrix& data);

struct MinMaxResult {
  MinMaxParams params;
  Matrix normalized;
  std::size_t out_of_range = 0;
};

/// Fits on `train`, applies to `apply_to`.
MinMaxResult minmax_fit_apply(const Matrix& train, const Matrix& apply_to);

}  // namespace lobfeat
