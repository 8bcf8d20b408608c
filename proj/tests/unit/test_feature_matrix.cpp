#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lobfeat/error.hpp"
#include "lobfeat/feature_matrix.hpp"
#include "lobfeat/features_noise.hpp"
#include "lobfeat/features_vol.hpp"
#include "lobfeat/synthetic.hpp"
#include "oracles.hpp"

using namespace lobfeat;

namespace {

std::vector<BookSnapshot> day_snapshots(SynthMode mode, std::size_t steps, std::uint64_t seed) {
  SynthSpec spec;
  spec.mode = mode;
  spec.days = 1;
  spec.steps = steps;
  const auto day = generate_day(spec, 0, seed);
  return build_book(day.events);
}

std::size_t col(const DayFeatures& f, const std::string& name) {
  const auto& c = f.matrix.columns;
  const auto it = std::find(c.begin(), c.end(), name);
  REQUIRE(it != c.end());
  return static_cast<std::size_t>(it - c.begin());
}

}  // namespace

TEST_CASE("column layout") {
  CHECK(feature_columns({}).size() == 44);
  CHECK(feature_columns({true, false, false, false}).size() == 23);
  CHECK(feature_columns({false, true, false, false}).size() == 12);
  CHECK(feature_columns({false, false, true, false}).size() == 5);
  CHECK(feature_columns({false, false, false, true}).size() == 4);
  const auto all = feature_columns({});
  CHECK(all.front() == "mid_price");
  CHECK(all.back() == "normalized_spread");
}

TEST_CASE("rows match direct estimator evaluation") {
  const auto snaps = day_snapshots(SynthMode::LinearSignal, 200, 3);
  FeatureOptions opt;
  opt.tick = TickSize(100);
  opt.quarticity_window = 50;
  const auto f = extract_features(snaps, WindowSpec::protocol1(), opt);
  REQUIRE(f.matrix.rows() > 100);
  REQUIRE(f.matrix.cols() == 44);

  // Log mids of two-sided snapshots, recomputed from the book.
  std::vector<std::size_t> compact(snaps.size());
  std::vector<double> x;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (!snaps[i].two_sided()) continue;
    compact[i] = x.size();
    x.push_back(std::log((static_cast<double>(snaps[i].ask_levels[0].price) +
                          static_cast<double>(snaps[i].bid_levels[0].price)) / 2.0));
  }
  std::vector<double> ret;
  for (std::size_t i = 1; i < x.size(); ++i) ret.push_back(x[i] - x[i - 1]);

  double spot_sum = 0.0;
  for (std::size_t w = 0; w < f.matrix.rows(); ++w) {
    const std::size_t s = f.window_start[w], e = f.window_end[w];
    REQUIRE(e - s == 10);
    const auto& last = snaps[e - 1];
    const std::span<const double> r(ret.data() + compact[s], 9);
    const double rv = static_cast<double>(oracle::rv(r));
    CHECK(oracle::rel_err(f.matrix.at(w, col(f, "realized_variance")), rv) < 1e-12);
    CHECK(oracle::rel_err(f.matrix.at(w, col(f, "bipower_variation")),
                          static_cast<double>(oracle::bv(r))) < 1e-12);
    CHECK(std::abs(f.matrix.at(w, col(f, "log_return")) - r.back()) < 1e-15);
    CHECK(f.matrix.at(w, col(f, "financial_duration")) ==
          static_cast<double>(last.timestamp - snaps[e - 2].timestamp));
    const double va = static_cast<double>(last.ask_levels[0].quantity);
    const double vb = static_cast<double>(last.bid_levels[0].quantity);
    CHECK(f.matrix.at(w, col(f, "volume_imbalance")) == vb / (va + vb));
    CHECK(f.matrix.at(w, col(f, "bid_ask_spread")) ==
          static_cast<double>(last.ask_levels[0].price - last.bid_levels[0].price));
    const double ampd_expected = [&] {
      const double dt = static_cast<double>(last.timestamp - snaps[s].timestamp);
      const double dp = mid_price(last).to_double() - mid_price(snaps[s]).to_double();
      return dp == 0.0 ? 0.0 : dt / dp;
    }();
    CHECK(oracle::rel_err(f.matrix.at(w, col(f, "ampd_1")), ampd_expected) < 1e-12);

    const std::size_t ret_end = compact[s] + 9;
    const std::size_t ret_begin = ret_end > 50 ? ret_end - 50 : 0;
    const std::span<const double> q(ret.data() + ret_begin, ret_end - ret_begin);
    CHECK(oracle::rel_err(f.matrix.at(w, col(f, "noise_variance_zhang")),
                          static_cast<double>(oracle::zhang(q))) < 1e-9);
    CHECK(((f.flags[w] & kShortNoiseWindow) != 0) == (ret_end < 50));

    spot_sum += f.matrix.at(w, col(f, "spot_volatility"));
    CHECK(oracle::rel_err(f.matrix.at(w, col(f, "average_spot_volatility")),
                          spot_sum / static_cast<double>(w + 1)) < 1e-12);
  }
}

TEST_CASE("windows with a one-sided snapshot are dropped") {
  std::vector<MessageEvent> evs;
  std::int64_t t = 0;
  evs.push_back({t++, 1, 101, 10, EventKind::Submission, Side::Ask});  // one-sided
  evs.push_back({t++, 2, 99, 10, EventKind::Submission, Side::Bid});
  for (int i = 0; i < 30; ++i)
    evs.push_back({t++, 100 + i, 102 + i % 3, 5, EventKind::Submission, Side::Ask});
  const auto snaps = build_book(evs);
  FeatureOptions opt;
  opt.quarticity_window = 10;
  const auto f = extract_features(snaps, WindowSpec::protocol1(), opt);
  CHECK(f.total_windows == snaps.size() - 9);
  CHECK(f.dropped_windows == 1);
  CHECK(f.matrix.rows() == f.total_windows - 1);
  CHECK(f.window_start.front() == 1);
  for (auto flags : f.flags) CHECK((flags & kMissingDepth) != 0);  // one bid level only
}

TEST_CASE("serial and OpenMP rows are bit-identical") {
  const auto snaps = day_snapshots(SynthMode::Diffusion, 3000, 11);
  FeatureOptions opt;
  opt.tick = TickSize(100);
  for (const auto& spec : {WindowSpec::protocol1(), WindowSpec::protocol2()}) {
    const auto a = extract_features(snaps, spec, opt, kernels::Backend::Serial);
    const auto b = extract_features(snaps, spec, opt, kernels::Backend::OpenMP);
    REQUIRE(a.matrix.values.size() == b.matrix.values.size());
    CHECK(std::memcmp(a.matrix.values.data(), b.matrix.values.data(),
                      a.matrix.values.size() * sizeof(double)) == 0);
    CHECK(a.flags == b.flags);
    for (double v : a.matrix.values) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("option checks") {
  const auto snaps = day_snapshots(SynthMode::LinearSignal, 20, 1);
  FeatureOptions none;
  none.select = {false, false, false, false};
  CHECK_THROWS_AS(extract_features(snaps, WindowSpec::protocol1(), none), DomainError);
  CHECK_THROWS_AS(extract_features(snaps, WindowSpec{4, 1}, FeatureOptions{}), DomainError);
  FeatureOptions q;
  q.quarticity_window = 3;
  CHECK_THROWS_AS(extract_features(snaps, WindowSpec::protocol1(), q), DomainError);
  FeatureOptions p;
  p.select = {false, false, false, true};
  const auto f = extract_features(snaps, WindowSpec::protocol2(), p);
  CHECK(f.matrix.cols() == 4);
}
