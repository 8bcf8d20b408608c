#include "lobfeat/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include <json.hpp>

#include "lobfeat/error.hpp"
#include "lobfeat/message_io.hpp"
#include "lobfeat/rng.hpp"

namespace lobfeat {

namespace {

constexpr std::int64_t kDayMs = 86400000;
constexpr std::size_t kLadder = 10;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Book image with FIFO orders per level that emits the messages it applies.
class Writer {
 public:
  Writer(std::vector<MessageEvent>& out, std::int64_t tick) : out_(out), tick_(tick) {}

  std::int64_t ts = 0;

  void submit(Side side, std::int64_t price, std::int64_t qty) {
    const auto id = next_id_++;
    levels(side)[price].push_back({id, qty});
    emit(id, price, qty, EventKind::Submission, side);
  }
  // Cancels the oldest order at `price`.
  void cancel(Side side, std::int64_t price) {
    auto& lv = levels(side);
    auto& q = lv.at(price);
    const auto [id, qty] = q.front();
    q.pop_front();
    if (q.empty()) lv.erase(price);
    emit(id, price, qty, EventKind::Cancellation, side);
  }
  // Executes `qty` against the oldest order at `price`.
  void execute(Side side, std::int64_t price, std::int64_t qty) {
    auto& lv = levels(side);
    auto& q = lv.at(price);
    auto& o = q.front();
    emit(o.first, price, qty, EventKind::Execution, side);
    o.second -= qty;
    if (o.second == 0) q.pop_front();
    if (q.empty()) lv.erase(price);
  }
  void execute_level(Side side, std::int64_t price) {
    while (levels(side).count(price)) execute(side, price, levels(side).at(price).front().second);
  }

  // Price of the k-th level from the best (0 = best); ladders are contiguous.
  std::int64_t level(Side side, std::size_t k) const {
    return side == Side::Ask ? best(Side::Ask) + static_cast<std::int64_t>(k) * tick_
                             : best(Side::Bid) - static_cast<std::int64_t>(k) * tick_;
  }
  std::int64_t best(Side side) const {
    return side == Side::Ask ? asks_.begin()->first : bids_.rbegin()->first;
  }
  std::int64_t deepest(Side side) const {
    return side == Side::Ask ? asks_.rbegin()->first : bids_.begin()->first;
  }
  std::int64_t volume(Side side, std::int64_t price) const {
    std::int64_t v = 0;
    for (const auto& o : levels(side).at(price)) v += o.second;
    return v;
  }
  std::int64_t front_volume(Side side, std::int64_t price) const {
    return levels(side).at(price).front().second;
  }
  std::size_t depth(Side side) const { return levels(side).size(); }

 private:
  using Levels = std::map<std::int64_t, std::deque<std::pair<std::int64_t, std::int64_t>>>;
  Levels& levels(Side s) { return s == Side::Ask ? asks_ : bids_; }
  const Levels& levels(Side s) const { return s == Side::Ask ? asks_ : bids_; }

  void emit(std::int64_t id, std::int64_t price, std::int64_t qty, EventKind kind, Side side) {
    out_.push_back({ts, id, price, qty, kind, side});
  }

  std::vector<MessageEvent>& out_;
  std::int64_t tick_;
  std::int64_t next_id_ = 1;
  Levels asks_, bids_;
};

std::int64_t uniform_int(NormalSource& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

// Replaces the volume `k` levels deep: new order first, then the old one
// leaves, so the level never empties.
void refresh(Writer& w, NormalSource& rng, Side side, std::size_t k, std::int64_t lo,
             std::int64_t hi) {
  const auto p = w.level(side, k);
  w.submit(side, p, uniform_int(rng, lo, hi));
  w.cancel(side, p);
}

// Keeps exactly kLadder contiguous levels behind a moved best quote.
void restore_depth(Writer& w, NormalSource& rng, Side side, std::int64_t tick, std::int64_t lo,
                   std::int64_t hi) {
  while (w.depth(side) > kLadder) w.cancel(side, w.deepest(side));
  while (w.depth(side) < kLadder)
    w.submit(side, w.deepest(side) + (side == Side::Ask ? tick : -tick), uniform_int(rng, lo, hi));
}

// One more level behind the deepest, so removing the best keeps full depth.
void extend(Writer& w, NormalSource& rng, Side side, std::int64_t tick, std::int64_t lo,
            std::int64_t hi) {
  w.submit(side, w.deepest(side) + (side == Side::Ask ? tick : -tick), uniform_int(rng, lo, hi));
}

void seed_ladders(Writer& w, NormalSource& rng, std::int64_t bid, std::int64_t ask,
                  std::int64_t tick, std::int64_t v_best_ask, std::int64_t v_best_bid,
                  std::int64_t lo, std::int64_t hi) {
  w.submit(Side::Ask, ask, v_best_ask);
  w.submit(Side::Bid, bid, v_best_bid);
  for (std::size_t k = 1; k < kLadder; ++k) {
    w.submit(Side::Ask, ask + static_cast<std::int64_t>(k) * tick, uniform_int(rng, lo, hi));
    w.submit(Side::Bid, bid - static_cast<std::int64_t>(k) * tick, uniform_int(rng, lo, hi));
  }
}

SynthDay diffusion_day(const SynthSpec& spec, std::uint64_t seed) {
  SynthDay day;
  PathSpec ps = spec.path;
  ps.n = spec.steps;
  const auto path = simulate_path(ps, derive_seed(seed, 1));
  NormalSource rng(derive_seed(seed, 2));
  Writer w(day.events, spec.tick);
  const std::int64_t tick = spec.tick, lo = 1, hi = 2 * spec.base_volume;

  // Mid in half ticks: a + b measured in ticks.
  auto target = [&](double x) {
    return std::llround(2.0 * static_cast<double>(spec.price) * std::exp(x - ps.x0) /
                        static_cast<double>(tick));
  };
  std::int64_t m = target(path.observed[0]);
  std::int64_t b = m % 2 ? (m - 1) / 2 : m / 2 - 1;
  std::int64_t a = m - b;
  if (b < 1) throw DomainError("synthetic price too small for the tick");
  seed_ladders(w, rng, b * tick, a * tick, tick, uniform_int(rng, lo, hi), uniform_int(rng, lo, hi),
               lo, hi);

  day.truth.step_event.push_back(day.events.size() - 1);
  double t = 0.0;
  for (std::size_t i = 1; i <= ps.n; ++i) {
    t += -std::log(1.0 - rng.uniform()) * spec.mean_gap_ms;
    w.ts = std::llround(t);
    const std::int64_t goal = target(path.observed[i]);
    if (goal < 4) throw DomainError("synthetic path fell below the price grid");
    if (goal == m) {
      if (rng.uniform() < 0.5) {
        const Side side = rng.uniform() < 0.5 ? Side::Ask : Side::Bid;
        refresh(w, rng, side, 1 + static_cast<std::size_t>(rng.uniform() * (kLadder - 1)), lo, hi);
      } else {
        const Side side = rng.uniform() < 0.5 ? Side::Ask : Side::Bid;
        const auto p = w.best(side);
        const auto v = w.front_volume(side, p);
        if (v > 1) w.execute(side, p, uniform_int(rng, 1, v - 1));
        else refresh(w, rng, side, 2, lo, hi);
      }
    }
    while (m != goal) {
      const bool up = goal > m;
      const std::int64_t spread = (w.best(Side::Ask) - w.best(Side::Bid)) / tick;
      if (spread == 2) {
        // Improve the quote on the side the mid moves towards.
        const Side side = up ? Side::Bid : Side::Ask;
        w.submit(side, w.best(side) + (up ? tick : -tick), uniform_int(rng, lo, hi));
        restore_depth(w, rng, side, tick, lo, hi);
      } else {
        const Side side = up ? Side::Ask : Side::Bid;
        extend(w, rng, side, tick, lo, hi);
        w.execute_level(side, w.best(side));
      }
      m += up ? 1 : -1;
    }
    day.truth.step_event.push_back(day.events.size() - 1);
  }
  day.truth.efficient = path.efficient;
  day.truth.observed = path.observed;
  day.truth.integrated_variance = path.integrated_variance;
  day.truth.jump_variation = path.jump_variation;
  day.truth.noise_variance = ps.noise_sd * ps.noise_sd;
  return day;
}

struct Signal {
  double u1 = 0.5;  // volume imbalance shown before the move
  double u2 = 0.5;  // drives the inter-event gap before the move
  bool up() const { return u1 + u2 > 1.0; }
  std::int64_t gap_ms() const { return 1 + std::llround(u2 * 200.0); }
};

struct MovePlan {
  bool execute = false;  // false: improve the quote on `side`
  Side side = Side::Bid;
  std::int64_t volume = 0;  // new best volume on `side`
};

constexpr std::int64_t kMaxSpreadTicks = 4;

// Picks the one-message move in direction `up` that leaves the best
// volumes showing imbalance t, preferring volumes near `base` so repeated
// moves cannot drift towards 1-lot quotes.
MovePlan plan_move(bool up, double t, std::int64_t spread, std::int64_t v_ask, std::int64_t v_bid,
                   std::int64_t base) {
  auto bid_for = [&](std::int64_t va) { return std::max<std::int64_t>(1, std::llround(static_cast<double>(va) * t / (1.0 - t))); };
  auto ask_for = [&](std::int64_t vb) { return std::max<std::int64_t>(1, std::llround(static_cast<double>(vb) * (1.0 - t) / t)); };
  auto dist = [&](std::int64_t v) { return std::abs(std::log(static_cast<double>(v) / static_cast<double>(base))); };

  // Improving narrows the spread, executing the best level widens it.
  MovePlan improve = up ? MovePlan{false, Side::Bid, bid_for(v_ask)} : MovePlan{false, Side::Ask, ask_for(v_bid)};
  MovePlan execute = up ? MovePlan{true, Side::Ask, ask_for(v_bid)} : MovePlan{true, Side::Bid, bid_for(v_ask)};
  if (spread <= 1) return execute;
  if (spread >= kMaxSpreadTicks) return improve;
  const double si = std::max(dist(up ? v_ask : v_bid), dist(improve.volume));
  const double se = std::max(dist(up ? v_bid : v_ask), dist(execute.volume));
  return se < si ? execute : improve;
}

SynthDay linear_signal_day(const SynthSpec& spec, std::uint64_t seed) {
  SynthDay day;
  NormalSource rng(derive_seed(seed, 2));
  Writer w(day.events, spec.tick);
  const std::int64_t tick = spec.tick, base = spec.base_volume;
  const std::int64_t lo = std::max<std::int64_t>(1, base / 2), hi = base + base / 2;

  std::vector<Signal> u(spec.steps + 1);
  for (auto& s : u) {
    do {
      s.u1 = 0.05 + 0.9 * rng.uniform();
      s.u2 = 0.05 + 0.9 * rng.uniform();
    } while (std::abs(s.u1 + s.u2 - 1.0) < 0.02);
  }

  const std::int64_t m = std::llround(static_cast<double>(spec.price) / static_cast<double>(tick));
  if (m < 2 + static_cast<std::int64_t>(kLadder)) throw DomainError("synthetic price too small for the tick");
  std::int64_t now = 0;
  auto stamp = [&](std::int64_t gap) { now += gap; w.ts = now; };

  // Seed with the imbalance of the first interval already showing.
  const std::int64_t vb0 = base, va0 = std::max<std::int64_t>(1, std::llround(static_cast<double>(base) * (1.0 - u[0].u1) / u[0].u1));
  seed_ladders(w, rng, (m - 1) * tick, (m + 1) * tick, tick, va0, vb0, lo, hi);
  std::int64_t v_ask = va0, v_bid = vb0;

  auto preset = [&](const MovePlan& p) {
    if (!p.execute) return;
    extend(w, rng, p.side, tick, lo, hi);
    const auto price = w.level(p.side, 1);
    w.submit(p.side, price, p.volume);
    w.cancel(p.side, price);
  };
  auto spread = [&] { return (w.best(Side::Ask) - w.best(Side::Bid)) / tick; };

  MovePlan plan = plan_move(u[0].up(), u[1].u1, spread(), v_ask, v_bid, base);
  preset(plan);
  for (auto& e : day.events) {
    now += u[0].gap_ms();
    e.timestamp = now;
  }
  for (std::size_t j = 0; j < spec.steps; ++j) {
    const bool up = u[j].up();
    const std::int64_t gap = u[j + 1].gap_ms();
    stamp(gap);
    if (plan.execute) {
      w.execute_level(plan.side, w.best(plan.side));
    } else {
      w.submit(plan.side, w.best(plan.side) + (up ? tick : -tick), plan.volume);
    }
    (plan.side == Side::Ask ? v_ask : v_bid) = w.volume(plan.side, w.best(plan.side));
    const std::size_t before = day.events.size();
    restore_depth(w, rng, plan.side, tick, lo, hi);
    if (j + 1 < spec.steps) {
      plan = plan_move(u[j + 1].up(), u[j + 2].u1, spread(), v_ask, v_bid, base);
      preset(plan);
    }
    for (std::size_t f = 0; f < spec.fillers; ++f) {
      const Side side = rng.uniform() < 0.5 ? Side::Ask : Side::Bid;
      refresh(w, rng, side, 2 + static_cast<std::size_t>(rng.uniform() * 4), lo, hi);
    }
    for (std::size_t e = before; e < day.events.size(); ++e) {
      now += gap;
      day.events[e].timestamp = now;
    }
  }
  return day;
}

}  // namespace

NormalSource::NormalSource(std::uint64_t seed) {
  for (int i = 0; i < 4; ++i) state_[i] = derive_seed(seed, static_cast<std::uint64_t>(i));
}

std::uint64_t NormalSource::next() {
  // xoshiro256**
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double NormalSource::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double NormalSource::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do u1 = uniform();
  while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

void PathSpec::validate() const {
  if (n == 0) throw DomainError("path needs at least one step");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (jumps > n) throw DomainError("more jumps than steps");
  if (!(noise_sd >= 0.0)) throw DomainError("noise sd must be non-negative");
}

SimulatedPath simulate_path(const PathSpec& spec, std::uint64_t seed) {
  spec.validate();
  NormalSource z(seed);
  const double dt = spec.horizon / static_cast<double>(spec.n);
  const double sd = spec.sigma * std::sqrt(dt);
  const double drift = -0.5 * spec.sigma * spec.sigma * dt;

  SimulatedPath p;
  p.integrated_variance = spec.sigma * spec.sigma * spec.horizon;
  // Distinct jump steps in 1..n, ascending.
  std::vector<std::size_t> steps;
  while (steps.size() < spec.jumps) {
    const auto s = 1 + static_cast<std::size_t>(z.uniform() * static_cast<double>(spec.n));
    if (std::find(steps.begin(), steps.end(), s) == steps.end()) steps.push_back(s);
  }
  std::sort(steps.begin(), steps.end());
  for (auto s : steps) {
    const double j = (z.uniform() < 0.5 ? -1.0 : 1.0) * spec.jump_size * sd;
    p.jump_steps.push_back(s);
    p.jump_sizes.push_back(j);
    p.jump_variation += j * j;
  }

  p.efficient.resize(spec.n + 1);
  p.efficient[0] = spec.x0;
  std::size_t next_jump = 0;
  for (std::size_t i = 1; i <= spec.n; ++i) {
    double x = p.efficient[i - 1] + drift + sd * z();
    if (next_jump < p.jump_steps.size() && p.jump_steps[next_jump] == i) x += p.jump_sizes[next_jump++];
    p.efficient[i] = x;
  }
  p.observed = p.efficient;
  if (spec.noise_sd > 0.0)
    for (auto& x : p.observed) x += spec.noise_sd * z();
  return p;
}

void SynthSpec::validate() const {
  if (days == 0) throw DomainError("synthetic run needs at least one day");
  if (steps == 0) throw DomainError("synthetic day needs at least one step");
  if (tick < 1) throw DomainError("tick must be >= 1");
  if (price <= 0) throw DomainError("initial price must be positive");
  if (base_volume < 2) throw DomainError("base volume must be >= 2");
  if (!(mean_gap_ms >= 0.0)) throw DomainError("mean gap must be non-negative");
  if (session_open < 0 || session_open >= kDayMs) throw DomainError("session open outside the day");
  PathSpec p = path;
  p.n = steps;
  p.validate();
}

SynthDay generate_day(const SynthSpec& spec, std::size_t day, std::uint64_t seed) {
  spec.validate();
  const std::uint64_t day_seed = derive_seed(derive_seed(seed, stream::kSynthetic), day);
  SynthDay out = spec.mode == SynthMode::Diffusion ? diffusion_day(spec, day_seed)
                                                   : linear_signal_day(spec, day_seed);
  const std::int64_t origin = static_cast<std::int64_t>(day) * kDayMs + spec.session_open;
  for (auto& e : out.events) e.timestamp += origin;
  char name[32];
  std::snprintf(name, sizeof name, "day_%03zu", day);
  out.truth.day = name;
  out.truth.events = out.events.size();
  return out;
}

std::vector<std::filesystem::path> generate_synthetic(const SynthSpec& spec, std::uint64_t seed,
                                                      const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir);
  std::vector<SynthDay> days(spec.days);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t d = 0; d < spec.days; ++d) {
    try {
      days[d] = generate_day(spec, d, seed);
    } catch (...) {
#pragma omp critical(lobfeat_synth_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  nlohmann::ordered_json truth;
  truth["mode"] = to_string(spec.mode);
  truth["seed"] = seed;
  truth["sigma"] = spec.path.sigma;
  truth["horizon"] = spec.path.horizon;
  truth["steps"] = spec.steps;
  truth["jumps"] = spec.path.jumps;
  truth["noise_sd"] = spec.path.noise_sd;
  truth["tick"] = spec.tick;
  truth["price"] = spec.price;
  auto arr = nlohmann::ordered_json::array();
  std::vector<std::filesystem::path> files;
  for (const auto& d : days) {
    const auto file = dir / (d.truth.day + ".csv");
    write_message_file(file, d.events);
    files.push_back(file);
    arr.push_back({{"day", d.truth.day},
                   {"events", d.truth.events},
                   {"integrated_variance", d.truth.integrated_variance},
                   {"jump_variation", d.truth.jump_variation},
                   {"noise_variance", d.truth.noise_variance}});
    if (spec.mode != SynthMode::Diffusion) continue;
    std::ofstream out(dir / (d.truth.day + "_truth.csv"));
    out << "step,event_index,efficient,observed\n";
    char buf[96];
    for (std::size_t i = 0; i < d.truth.step_event.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", i, d.truth.step_event[i],
                    d.truth.efficient[i], d.truth.observed[i]);
      out << buf;
    }
    if (!out) throw Error("cannot write truth file for " + d.truth.day);
  }
  truth["days"] = arr;
  std::ofstream out(dir / "truth.json");
  out << truth.dump(2) << '\n';
  if (!out) throw Error("cannot write truth.json");
  return files;
}

std::string to_string(SynthMode m) {
  return m == SynthMode::Diffusion ? "diffusion" : "linear_signal";
}

SynthMode synth_mode_from(const std::string& s) {
  if (s == "diffusion") return SynthMode::Diffusion;
  if (s == "linear_signal") return SynthMode::LinearSignal;
  throw DomainError("unknown synthetic mode '" + s + "'");
}

}  // namespace lobfeat
