#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lobfeat/kernels.hpp"

namespace lobfeat::kernels::detail {

// Statistics of the k neighbours of x[i] (x[i] itself excluded). `scratch`
// is caller-owned so the loops can reuse one buffer per thread.
inline NeighborhoodStat neighborhood_at(std::span<const double> x, std::size_t i,
                                        std::size_t k, double trim_fraction,
                                        std::vector<double>& scratch) {
  const std::size_t lo = neighborhood_start(i, x.size(), k);
  scratch.clear();
  for (std::size_t j = lo; j <= lo + k; ++j)
    if (j != i) scratch.push_back(x[j]);

  double sum = 0.0;
  for (double v : scratch) sum += v;
  const double full_mean = sum / static_cast<double>(k);
  double ss = 0.0;
  for (double v : scratch) ss += (v - full_mean) * (v - full_mean);

  std::sort(scratch.begin(), scratch.end());
  const auto cut = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(k)));
  double tsum = 0.0;
  for (std::size_t j = cut; j < k - cut; ++j) tsum += scratch[j];

  return {tsum / static_cast<double>(k - 2 * cut),
          std::sqrt(ss / static_cast<double>(k - 1))};
}

}  // namespace lobfeat::kernels::detail
