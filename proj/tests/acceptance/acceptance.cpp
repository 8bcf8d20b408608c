// Acceptance checks, one PASS/FAIL line per criterion.
//   acceptance               run all
//   acceptance --criterion N run one
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "gradcheck.hpp"
#include "lobfeat/book.hpp"
#include "lobfeat/cleaning.hpp"
#include "lobfeat/config.hpp"
#include "lobfeat/features_noise.hpp"
#include "lobfeat/features_stat.hpp"
#include "lobfeat/features_vol.hpp"
#include "lobfeat/model.hpp"
#include "lobfeat/pipeline.hpp"
#include "lobfeat/protocol.hpp"
#include "lobfeat/rng.hpp"
#include "lobfeat/synthetic.hpp"
#include "oracles.hpp"

using namespace lobfeat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 1. Six-message replay on a seeded book.
Outcome replay() {
  OrderBook book;
  book.seed(Side::Ask, 126200, 400, 6505727);
  book.seed(Side::Ask, 126300, 300);
  book.seed(Side::Ask, 126600, 300, 6511469);
  book.seed(Side::Bid, 126100, 17, 6511439);
  book.seed(Side::Bid, 126000, 2800);
  const std::vector<MessageEvent> msgs = {
      {1275386347944, 6505727, 126200, 400, EventKind::Cancellation, Side::Ask},
      {1275386347981, 6505741, 126500, 300, EventKind::Submission, Side::Ask},
      {1275386347981, 6505741, 126500, 300, EventKind::Cancellation, Side::Ask},
      {1275386348070, 6511439, 126100, 17, EventKind::Execution, Side::Bid},
      {1275386348070, 6511439, 126100, 17, EventKind::Submission, Side::Bid},
      {1275386348101, 6511469, 126600, 300, EventKind::Cancellation, Side::Ask},
  };
  const Rational want_mid[] = {126200, 126200, 126200, 126050, 126050, 126050};
  const std::int64_t want_spread[] = {200, 200, 200, 100, 100, 100};
  const auto snaps = build_book(book, msgs);
  Outcome o{true, ""};
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& s = snaps[i];
    const bool ok = s.mid_price == want_mid[i] && s.spread == want_spread[i];
    o.pass = o.pass && ok;
    o.detail += fmt("row%zu %s/%s%s ", i + 1, s.mid_price ? s.mid_price->str().c_str() : "-",
                    s.spread ? std::to_string(*s.spread).c_str() : "-", ok ? "" : "(x)");
  }
  return o;
}

// 2. Algebraic identities of the estimators.
Outcome identities() {
  std::mt19937_64 rng(derive_seed(2, 0));
  std::uniform_real_distribution<double> cdist(0.1, 10.0);
  std::size_t bad = 0;
  double worst = 0.0;
  auto rel = [&](double a, double b, double tol) {
    const double e = oracle::rel_err(a, b);
    worst = std::max(worst, e);
    if (!(e <= tol)) ++bad;
  };
  auto exact = [&](bool ok) { if (!ok) ++bad; };
  for (int t = 0; t < 1000; ++t) {
    const auto r = oracle::random_returns(rng, 16 + rng() % 2000);
    const double c = cdist(rng);
    std::vector<double> cr(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) cr[i] = c * r[i];
    const double c2 = c * c, c4 = c2 * c2;
    const double rv = realized_variance(r), bv = bipower_variation(r);
    const auto rsv = realized_semivariance(r);
    rel(rsv.plus + rsv.minus, rv, 1e-12);
    exact(realized_kernel(r, {0}) == rv);
    exact(noise_variance_zhang(r) == rv / (2.0 * static_cast<double>(r.size())));
    exact(jump_variation(rv, bv) >= 0.0);
    const double rq = realized_quarticity(r), tq = tripower_quarticity(r), qq = quadpower_quarticity(r);
    exact(rq >= 0.0 && tq >= 0.0 && qq >= 0.0);
    const auto H = KernelSpec::default_for(r.size());
    rel(realized_variance(cr), c2 * rv, 1e-12);
    rel(bipower_variation(cr), c2 * bv, 1e-12);
    rel(realized_semivariance(cr).plus, c2 * rsv.plus, 1e-12);
    rel(realized_semivariance(cr).minus, c2 * rsv.minus, 1e-12);
    rel(realized_kernel(cr, H), c2 * realized_kernel(r, H), 1e-12);
    rel(preaveraged_rv(cr), c2 * preaveraged_rv(r), 1e-12);
    rel(realized_quarticity(cr), c4 * rq, 1e-12);
    rel(tripower_quarticity(cr), c4 * tq, 1e-12);
    rel(quadpower_quarticity(cr), c4 * qq, 1e-12);
  }
  return {bad == 0, fmt("1000 series, %zu violations, worst relative deviation %.2e", bad, worst)};
}

struct PathStats {
  double rv = 0, bv = 0, jv = 0, jump2 = 0, rk = 0, pa = 0, oomen = 0, zhang = 0;
};

template <typename F>
std::vector<PathStats> over_paths(int paths, const PathSpec& spec, std::uint64_t stream, F&& f) {
  std::vector<PathStats> out(static_cast<std::size_t>(paths));
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < paths; ++p) {
    const auto path = simulate_path(spec, derive_seed(stream, static_cast<std::uint64_t>(p)));
    const auto r = log_returns(std::span<const double>(path.observed));
    out[static_cast<std::size_t>(p)] = f(path, r);
  }
  return out;
}

double mean(const std::vector<PathStats>& v, double PathStats::*m) {
  double s = 0;
  for (const auto& x : v) s += x.*m;
  return s / static_cast<double>(v.size());
}

// 3. Monte Carlo: RV and BV estimate IV on jump-free paths; JV recovers a planted jump.
Outcome monte_carlo() {
  PathSpec spec;  // n = 1e5, sigma = 0.2, unit horizon
  const double iv = spec.sigma * spec.sigma * spec.horizon;
  const auto clean = over_paths(100, spec, 3001, [](const SimulatedPath&, const std::vector<double>& r) {
    PathStats s;
    s.rv = realized_variance(r);
    s.bv = bipower_variation(r);
    return s;
  });
  spec.jumps = 1;
  const auto jumpy = over_paths(100, spec, 3002, [](const SimulatedPath& p, const std::vector<double>& r) {
    PathStats s;
    s.rv = realized_variance(r);
    s.bv = bipower_variation(r);
    s.jv = jump_variation(s.rv, s.bv);
    s.jump2 = p.jump_variation;
    return s;
  });
  const double rv = mean(clean, &PathStats::rv), bv = mean(clean, &PathStats::bv);
  const double jv = mean(jumpy, &PathStats::jv), j2 = mean(jumpy, &PathStats::jump2);
  const bool rv_ok = std::abs(rv / iv - 1) <= 0.05, bv_ok = std::abs(bv / iv - 1) <= 0.05;
  const bool jv_ok = std::abs(jv / j2 - 1) <= 0.25;
  return {rv_ok && bv_ok && jv_ok,
          fmt("mean RV %.5f (%s), mean BV %.5f (%s) vs IV %.2f; mean JV %.3e vs jump^2 %.3e, ratio %.2f (%s)",
              rv, rv_ok ? "ok" : "x", bv, bv_ok ? "ok" : "x", iv, jv, j2, jv / j2, jv_ok ? "ok" : "x")};
}

// 4. Noise robustness of RK and PA-RV; noise-variance estimators on pure noise.
Outcome noise() {
  PathSpec spec;
  const double step_sd = spec.sigma * std::sqrt(spec.horizon / static_cast<double>(spec.n));
  spec.noise_sd = 5.0 * step_sd;
  const double iv = spec.sigma * spec.sigma * spec.horizon;
  const auto noisy = over_paths(100, spec, 4001, [iv](const SimulatedPath&, const std::vector<double>& r) {
    PathStats s;
    s.rv = std::abs(realized_variance(r) - iv);
    s.rk = std::abs(realized_kernel(r, KernelSpec::default_for(r.size())) - iv);
    s.pa = std::abs(preaveraged_rv(r) - iv);
    return s;
  });
  PathSpec pure = spec;
  pure.sigma = 0.0;
  const double w2 = pure.noise_sd * pure.noise_sd;
  const auto flat = over_paths(100, pure, 4002, [](const SimulatedPath&, const std::vector<double>& r) {
    PathStats s;
    s.oomen = noise_variance_oomen(r).value;
    s.zhang = noise_variance_zhang(r);
    return s;
  });
  const double rv = mean(noisy, &PathStats::rv), rk = mean(noisy, &PathStats::rk),
               pa = mean(noisy, &PathStats::pa);
  const double oo = mean(flat, &PathStats::oomen), zh = mean(flat, &PathStats::zhang);
  const bool ok = rk < rv && pa < rv && std::abs(oo / w2 - 1) <= 0.10 && std::abs(zh / w2 - 1) <= 0.10;
  return {ok, fmt("mean |err| RV %.4f, RK %.5f, PA-RV %.5f; Oomen/w2 %.4f, Zhang/w2 %.4f", rv, rk, pa,
                  oo / w2, zh / w2)};
}

// 5. Analytic vs finite-difference gradients on reduced-width presets.
Outcome gradients() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (const char* name : {"MLP_1", "MLP_2", "MLP_3", "MLP_4", "MLP_5"}) {
    for (auto proto : {Protocol::I, Protocol::II}) {
      std::mt19937_64 rng(derive_seed(5, std::hash<std::string>{}(name) + static_cast<int>(proto)));
      std::uniform_real_distribution<double> lam(0.0, 1.0);
      for (int d = 0; d < 100; ++d) {
        auto cfg = model::ModelConfig::preset(name, proto, 1.0 / 64);
        cfg.seed = rng();
        if (proto == Protocol::I) cfg.lambda = lam(rng);
        const auto state = model::ModelState::init(cfg, 6);
        const auto draw = oracle::random_draw(state, 4, rng);
        const auto res = oracle::check_gradient(state, draw);
        worst = std::max(worst, res.max_rel_error);
        checked += res.params;
      }
    }
  }
  return {worst < 1e-5,
          fmt("5 presets x 2 heads x 100 draws, %zu parameter checks, max relative error %.2e", checked, worst)};
}

// 6. One Nadam step from zero moments.
Outcome nadam() {
  model::ModelConfig cfg;
  cfg.protocol = Protocol::II;
  auto s = model::ModelState::init(cfg, 1);
  std::fill(s.params.begin(), s.params.end(), 1.0);
  model::nadam_step(s, std::vector<double>(s.params.size(), 1.0));
  const double want = oracle::nadam_first_step(1.0, 1.0, 0.002, 0.9, 0.999, 1e-8);
  double worst = 0.0;
  for (double v : s.params) worst = std::max(worst, std::abs(v - want));
  return {worst <= 1e-12, fmt("theta' = %.17g, reference %.17g, |diff| %.1e", s.params[0], want, worst)};
}

// 7. Labels against brute-force scans; window counts.
Outcome labels() {
  const oracle::Q alpha = oracle::Q(2) / 100000;
  std::size_t bad = 0, checked = 0;
  for (std::uint64_t w = 0; w < 4; ++w) {
    std::mt19937_64 rng(derive_seed(7, w));
    std::uniform_real_distribution<double> u;
    const double p_move = 0.05 + 0.25 * static_cast<double>(w);
    std::int64_t twice = 2 * (2000 + 40000 * static_cast<std::int64_t>(w));
    std::vector<Rational> mids;
    for (int i = 0; i < 10000; ++i) {
      const double x = u(rng);
      if (x < p_move / 2) twice += 1 + static_cast<std::int64_t>(rng() % 4);
      else if (x < p_move) twice -= 1 + static_cast<std::int64_t>(rng() % 4);
      mids.emplace_back(twice, 2);
    }
    const auto q = oracle::exact(mids);
    for (std::size_t i = 0; i < mids.size(); ++i, ++checked) {
      const auto a = label_protocol1(mids, i);
      const auto b = oracle::p1_scan(q, i);
      if (a.has_value() != b.has_value() ||
          (a && (static_cast<int>(a->direction) != b->first || a->horizon != b->second)))
        ++bad;
      const auto c = label_protocol2(mids, i);
      const auto d = oracle::p2_scan(q, i, 10, alpha);
      if (c.has_value() != d.has_value() || (c && static_cast<int>(*c) != *d)) ++bad;
    }
  }
  std::size_t bad_windows = 0;
  for (std::size_t n = 10; n <= 10000; ++n) {
    if (windows(n, WindowSpec::protocol1()).size() != n - 10 + 1) ++bad_windows;
    if (windows(n, WindowSpec::protocol2()).size() != n / 10) ++bad_windows;
  }
  return {bad == 0 && bad_windows == 0,
          fmt("%zu indices x 2 protocols, %zu label mismatches; window counts N=10..10000, %zu mismatches",
              checked, bad, bad_windows)};
}

fs::path work_dir(const std::string& name) {
  const fs::path d = fs::absolute("acceptance_work") / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// 8. End-to-end learning on the linear-signal generator.
Outcome learning() {
  const auto dir = work_dir("c8");
  SynthSpec spec;
  spec.mode = SynthMode::LinearSignal;
  spec.days = 10;
  spec.steps = 600;
  generate_synthetic(spec, 42, dir / "data");
  std::istringstream in("[input]\ndir = data\ntick = 100\n[model]\npreset = MLP_1\nepochs = 50\n"
                        "[output]\ndir = out\n[run]\nseed = 42\n");
  const auto cfg = RunConfig::parse(in, dir);
  const auto man = run_pipeline(cfg);
  if (!man.eval) return {false, "no evaluation produced"};
  return {man.eval->f1 >= 0.95, fmt("Protocol I test f1 %.4f on %zu windows (rmse %.3f)", man.eval->f1,
                                    man.eval->samples, man.eval->rmse)};
}

// 9. Two CLI runs with the same config and seed.
Outcome determinism() {
  const auto dir = work_dir("c9");
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[input]\ndir = data\ntick = 100\n"
           "[synth]\nmode = diffusion\ndays = 10\nsteps = 2000\ndir = data\n"
           "[model]\npreset = MLP_2\nwidth_scale = 0.05\nepochs = 3\nshards = 2\n"
           "[run]\nseed = 7\n";
  }
  const std::string cli = LOBFEAT_CLI;
  const std::string cfg = (dir / "run.ini").string();
  auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null").c_str()); };
  if (sh(cli + " synth -c " + cfg) != 0) return {false, "synth failed"};
  if (sh(cli + " run -c " + cfg + " -o " + (dir / "a").string()) != 0) return {false, "first run failed"};
  if (sh(cli + " run -c " + cfg + " -o " + (dir / "b").string()) != 0) return {false, "second run failed"};
  std::string detail;
  bool ok = true;
  for (const char* f : {"features.csv", "labels.csv", "checkpoint.bin"}) {
    const auto a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += fmt("%s %zu bytes %s; ", f, a.size(), same ? "identical" : "DIFFER");
  }
  return {ok, detail + fmt("%d threads", omp_get_max_threads())};
}

// 10. Planted outliers under default filter parameters.
Outcome cleaning() {
  const std::int64_t tick = 100;
  const FilterParams params = FilterParams::defaults(TickSize(tick));
  const double sigma = 5.0 * static_cast<double>(tick);
  std::size_t planted = 0, caught = 0, clean = 0, false_removed = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(derive_seed(10, s));
    std::normal_distribution<double> z(0.0, sigma);
    std::uniform_real_distribution<double> u;
    const std::size_t n = 10000;
    std::vector<double> x(n);
    std::vector<char> is_out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(tick) * std::round((126200.0 + z(rng)) / static_cast<double>(tick));
      if (u(rng) < 0.01) {
        x[i] += (u(rng) < 0.5 ? -10.0 : 10.0) * sigma;
        is_out[i] = 1;
      }
    }
    const auto res = outlier_filter(x, params);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_out[i]) {
        ++planted;
        caught += res.kept[i] == 0;
      } else {
        ++clean;
        false_removed += res.kept[i] == 0;
      }
    }
  }
  const double hit = static_cast<double>(caught) / static_cast<double>(planted);
  const double fa = static_cast<double>(false_removed) / static_cast<double>(clean);
  return {hit >= 0.99 && fa <= 0.01,
          fmt("removed %zu/%zu planted (%.2f%%), false removals %zu/%zu (%.3f%%), k=%d alpha=%.0f gamma=%.0f",
              caught, planted, 100 * hit, false_removed, clean, 100 * fa, params.k, params.alpha_sd,
              params.gamma)};
}

struct Criterion {
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lobfeat acceptance checks"};
  int only = 0;
  app.add_option("-c,--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {"six-message replay reproduces mid and spread", 1, replay},
      {"estimator identities", 10, identities},
      {"Monte-Carlo consistency", 120, monte_carlo},
      {"noise robustness", 120, noise},
      {"gradient check", 30, gradients},
      {"Nadam single step", 1, nadam},
      {"labeling oracles", 10, labels},
      {"learning sanity", 120, learning},
      {"determinism", 120, determinism},
      {"cleaning", 10, cleaning},
  };

  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto& c = all[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] criterion %zu: %s | %s | %.2fs (limit %.0fs%s)\n", pass ? "PASS" : "FAIL", i + 1,
                c.title, o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
