#pragma once

// Data-parallel kernels. Each kernel exists twice: a plain serial loop kept
// as the reference implementation, and an OpenMP loop. Every output element
// depends only on read-only inputs, so both produce bit-identical results;
// the tests hold them to that and bench/ compares their throughput.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace lobfeat::kernels {

namespace detail {
struct FeatureContext;
}

enum class Backend { Serial, OpenMP };

/// Trimmed mean and untrimmed sample sd of the k neighbours of one index.
struct NeighborhoodStat {
  double mean = 0.0;
  double sd = 0.0;
};

/// Window [lo, lo + k] of k + 1 indices that contains i, centred where
/// possible and shifted at the series edges. Requires n > k.
inline std::size_t neighborhood_start(std::size_t i, std::size_t n, std::size_t k) {
  const std::size_t half = k / 2;
  const std::size_t lo = i > half ? i - half : 0;
  return lo + k + 1 > n ? n - k - 1 : lo;
}

using Window = std::pair<std::size_t, std::size_t>;

namespace serial {
void neighborhood_stats(std::span<const double> x, std::size_t k, double trim_fraction,
                        std::span<NeighborhoodStat> out);
/// Row w of `out` (row-major, `cols` wide) holds the features of windows[w].
void feature_rows(const detail::FeatureContext& ctx, std::span<const Window> windows,
                  std::size_t cols, std::span<double> out, std::span<std::uint8_t> flags);
}  // namespace serial

namespace omp {
void neighborhood_stats(std::span<const double> x, std::size_t k, double trim_fraction,
                        std::span<NeighborhoodStat> out);
void feature_rows(const detail::FeatureContext& ctx, std::span<const Window> windows,
                  std::size_t cols, std::span<double> out, std::span<std::uint8_t> flags);
}  // namespace omp

inline void neighborhood_stats(Backend b, std::span<const double> x, std::size_t k,
                               double trim_fraction, std::span<NeighborhoodStat> out) {
  if (b == Backend::Serial)
    serial::neighborhood_stats(x, k, trim_fraction, out);
  else
    omp::neighborhood_stats(x, k, trim_fraction, out);
}

inline void feature_rows(Backend b, const detail::FeatureContext& ctx,
                         std::span<const Window> windows, std::size_t cols,
                         std::span<double> out, std::span<std::uint8_t> flags) {
  if (b == Backend::Serial)
    serial::feature_rows(ctx, windows, cols, out, flags);
  else
    omp::feature_rows(ctx, windows, cols, out, flags);
}

/// Threads OpenMP will use (1 when built without OpenMP).
int max_threads();

}  // namespace lobfeat::kernels
