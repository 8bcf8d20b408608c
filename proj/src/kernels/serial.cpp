#include "feature_row.hpp"
#include "neighborhood.hpp"

namespace lobfeat::kernels::serial {

void neighborhood_stats(std::span<const double> x, std::size_t k, double trim_fraction,
                        std::span<NeighborhoodStat> out) {
  std::vector<double> scratch;
  scratch.reserve(k);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = detail::neighborhood_at(x, i, k, trim_fraction, scratch);
}

void feature_rows(const detail::FeatureContext& ctx, std::span<const Window> windows,
                  std::size_t cols, std::span<double> out, std::span<std::uint8_t> flags) {
  for (std::size_t w = 0; w < windows.size(); ++w)
    detail::feature_row(ctx, windows[w], out.subspan(w * cols, cols), flags[w]);
}

}  // namespace lobfeat::kernels::serial
