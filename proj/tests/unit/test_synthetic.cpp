#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lobfeat/book.hpp"
#include "lobfeat/error.hpp"
#include "lobfeat/message_io.hpp"
#include "lobfeat/synthetic.hpp"

using namespace lobfeat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lobfeat_synth_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("normal source is standard normal") {
  NormalSource z(123);
  double s = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = z();
    s += v;
    s2 += v * v;
    s4 += v * v * v * v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s4 / n - 3.0) < 0.1);
  NormalSource a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    REQUIRE((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("simulated paths") {
  PathSpec spec;
  spec.n = 1000;
  const auto p = simulate_path(spec, 1);
  CHECK(p.efficient.size() == 1001);
  CHECK(p.observed == p.efficient);
  CHECK(p.integrated_variance == doctest::Approx(0.04));
  CHECK(p.jump_variation == 0.0);

  spec.sigma = 0.0;
  const auto flat = simulate_path(spec, 1);
  for (double x : flat.efficient) CHECK(x == 0.0);

  spec.sigma = 0.2;
  spec.jumps = 1;
  const auto j = simulate_path(spec, 2);
  REQUIRE(j.jump_steps.size() == 1);
  const double size = 5.0 * 0.2 * std::sqrt(1.0 / 1000);
  CHECK(std::abs(j.jump_sizes[0]) == doctest::Approx(size));
  CHECK(j.jump_variation == doctest::Approx(size * size));

  spec.jumps = 0;
  spec.noise_sd = 1e-3;
  const auto noisy = simulate_path(spec, 3);
  double ss = 0;
  for (std::size_t i = 0; i < noisy.observed.size(); ++i) {
    const double e = noisy.observed[i] - noisy.efficient[i];
    ss += e * e;
  }
  CHECK(std::sqrt(ss / 1001) == doctest::Approx(1e-3).epsilon(0.1));

  spec.horizon = 0.0;
  CHECK_THROWS_AS(simulate_path(spec, 1), DomainError);
}

TEST_CASE("diffusion days track the rounded path") {
  SynthSpec spec;
  spec.days = 1;
  spec.steps = 2000;
  const auto day = generate_day(spec, 0, 9);
  const auto snaps = build_book(day.events);
  REQUIRE(day.truth.step_event.size() == day.truth.observed.size());
  CHECK(day.truth.integrated_variance == doctest::Approx(0.04));
  for (std::size_t i = 0; i < day.truth.step_event.size(); ++i) {
    const auto& s = snaps[day.truth.step_event[i]];
    REQUIRE(s.two_sided());
    const double target = static_cast<double>(spec.price) * std::exp(day.truth.observed[i] - day.truth.observed[0]);
    const double half = static_cast<double>(spec.tick) / 2.0;
    CHECK(std::abs(s.mid_price->to_double() - target) <= half / 2.0 + 1e-6);
  }
  std::size_t full_depth = 0;
  for (const auto& s : snaps) {
    if (!s.two_sided()) continue;
    REQUIRE(*s.spread > 0);
    full_depth += s.ask_count == 10 && s.bid_count == 10;
  }
  CHECK(full_depth > snaps.size() * 9 / 10);
  for (std::size_t i = 1; i < day.events.size(); ++i)
    REQUIRE(day.events[i].timestamp >= day.events[i - 1].timestamp);
}

TEST_CASE("zero volatility gives a constant mid") {
  SynthSpec spec;
  spec.days = 1;
  spec.steps = 500;
  spec.path.sigma = 0.0;
  const auto day = generate_day(spec, 0, 1);
  const auto snaps = build_book(day.events);
  std::optional<Rational> mid;
  for (const auto& s : snaps) {
    if (!s.two_sided()) continue;
    if (!mid) mid = s.mid_price;
    REQUIRE(s.mid_price == mid);
  }
  CHECK(mid.has_value());
}

TEST_CASE("linear-signal days keep a two-sided book") {
  SynthSpec spec;
  spec.mode = SynthMode::LinearSignal;
  spec.days = 1;
  spec.steps = 500;
  const auto day = generate_day(spec, 3, 4);
  const auto snaps = build_book(day.events, kMaxDepth, OverflowPolicy::Strict);
  std::size_t moves = 0;
  std::optional<Rational> prev;
  for (const auto& s : snaps) {
    if (!s.two_sided()) continue;
    REQUIRE(*s.spread >= spec.tick);
    REQUIRE(*s.spread <= 4 * spec.tick);
    if (prev && *prev != *s.mid_price) ++moves;
    prev = s.mid_price;
  }
  CHECK(moves >= spec.steps);
  CHECK(day.events.front().timestamp >= 3 * 86400000LL + spec.session_open);
}

TEST_CASE("files and truth are reproducible") {
  SynthSpec spec;
  spec.days = 3;
  spec.steps = 300;
  const auto a = scratch("a"), b = scratch("b");
  const auto fa = generate_synthetic(spec, 77, a);
  const auto fb = generate_synthetic(spec, 77, b);
  REQUIRE(fa.size() == 3);
  CHECK(fa[0].filename() == "day_000.csv");
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(slurp(fa[i]) == slurp(fb[i]));
  CHECK(slurp(a / "truth.json") == slurp(b / "truth.json"));
  CHECK(slurp(a / "day_001_truth.csv") == slurp(b / "day_001_truth.csv"));
  CHECK_FALSE(parse_message_file(fa[2]).empty());

  const auto truth = nlohmann::json::parse(slurp(a / "truth.json"));
  CHECK(truth["mode"] == "diffusion");
  for (const auto& d : truth["days"]) CHECK(d["integrated_variance"].get<double>() == doctest::Approx(0.04));

  const auto c = scratch("c");
  generate_synthetic(spec, 78, c);
  CHECK(slurp(c / "day_000.csv") != slurp(a / "day_000.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("invalid scenarios") {
  SynthSpec spec;
  spec.days = 0;
  CHECK_THROWS_AS(generate_day(spec, 0, 1), DomainError);
  spec.days = 1;
  spec.path.sigma = -1.0;
  CHECK_THROWS_AS(generate_day(spec, 0, 1), DomainError);
  CHECK_THROWS_AS(synth_mode_from("brownian"), DomainError);
  CHECK(synth_mode_from(to_string(SynthMode::LinearSignal)) == SynthMode::LinearSignal);
}
