#include <omp.h>

#include <exception>

#include "feature_row.hpp"
#include "neighborhood.hpp"

namespace lobfeat::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace omp {

namespace {

// Runs body(i) for i in [0, n) across threads; the first exception thrown
// by any iteration is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(lobfeat_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void neighborhood_stats(std::span<const double> x, std::size_t k, double trim_fraction,
                        std::span<NeighborhoodStat> out) {
  parallel_for(x.size(), [&](std::size_t i) {
    thread_local std::vector<double> scratch;
    out[i] = detail::neighborhood_at(x, i, k, trim_fraction, scratch);
  });
}

void feature_rows(const detail::FeatureContext& ctx, std::span<const Window> windows,
                  std::size_t cols, std::span<double> out, std::span<std::uint8_t> flags) {
  parallel_for(windows.size(), [&](std::size_t i) {
    detail::feature_row(ctx, windows[i], out.subspan(i * cols, cols), flags[i]);
  });
}

}  // namespace omp
}  // namespace lobfeat::kernels
