#include "lobfeat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "lobfeat/error.hpp"
#include "lobfeat/message_io.hpp"
#include "lobfeat/rng.hpp"

#ifndef LOBFEAT_VERSION
#define LOBFEAT_VERSION "0.0.0"
#endif

namespace lobfeat {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::int64_t kDayMs = 86400000;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw Error("write failed for " + p.string());
}

// Runs `f` and rethrows failures tagged with the stage and the input.
template <class F>
auto tagged(Stage stage, const std::string& input, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ParseError& e) {
    const std::string where = input.empty() ? "" : input + (e.line() ? ":" + std::to_string(e.line()) : "") + ": ";
    throw StageError(to_string(stage), where + e.what());
  } catch (const std::exception& e) {
    throw StageError(to_string(stage), (input.empty() ? "" : input + ": ") + e.what());
  }
}

struct DayOutput {
  std::string name;
  std::size_t parsed = 0;
  SessionFilterReport session;
  std::size_t cleaned = 0;
  std::size_t outliers_ask = 0, outliers_bid = 0;
  std::size_t sides_unfiltered = 0;  // sides too short for the neighbourhood test
  ReplayDiagnostics replay;
  std::size_t snapshots = 0, two_sided = 0;
  DayFeatures features;
  std::vector<int> label;          // per feature row; Protocol I direction or II class
  std::vector<double> horizon;     // Protocol I only
  std::vector<std::uint8_t> labeled;
  std::map<Stage, double> ms;
};

std::vector<std::uint8_t> outlier_mask(const RunConfig& c, std::span<const MessageEvent> ev,
                                       Side side, std::size_t& removed, std::size_t& unfiltered,
                                       OutlierReport* report) {
  std::vector<std::size_t> idx;
  std::vector<double> prices;
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].side == side) {
      idx.push_back(i);
      prices.push_back(static_cast<double>(ev[i].price));
    }
  std::vector<std::uint8_t> drop(ev.size(), 0);
  if (prices.size() <= static_cast<std::size_t>(c.filter.k)) {
    if (!prices.empty()) ++unfiltered;
    return drop;
  }
  auto res = outlier_filter(prices, c.filter, c.backend);
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (!res.kept[j]) drop[idx[j]] = 1;
  removed = res.report.removed;
  if (report) {
    for (auto& r : res.report.removals) r.index = idx[r.index];
    *report = std::move(res.report);
  }
  return drop;
}

DayOutput process_day(const RunConfig& c, const fs::path& file, Stage last) {
  DayOutput d;
  d.name = file.stem().string();
  const std::string input = file.filename().string();
  const fs::path& out = c.output_dir;

  auto t0 = Clock::now();
  auto events = tagged(Stage::Parse, input, [&] { return parse_message_file(file); });
  d.parsed = events.size();
  d.ms[Stage::Parse] = ms_since(t0);
  if (last == Stage::Parse) return d;

  t0 = Clock::now();
  tagged(Stage::Clean, input, [&] {
    // Session bounds are times of day; the day origin comes from the data.
    std::int64_t origin = 0;
    if (!events.empty()) origin = events.front().timestamp - events.front().timestamp % kDayMs;
    events = filter_session_bounds(events, origin + c.session_open, origin + c.session_close, &d.session);
    if (!c.cleaning) {
      d.cleaned = events.size();
      return;
    }
    const bool write = c.write_clean || last == Stage::Clean;
    OutlierReport ra, rb;
    const auto da = outlier_mask(c, events, Side::Ask, d.outliers_ask, d.sides_unfiltered, write ? &ra : nullptr);
    const auto db = outlier_mask(c, events, Side::Bid, d.outliers_bid, d.sides_unfiltered, write ? &rb : nullptr);
    std::vector<MessageEvent> kept;
    kept.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
      if (!da[i] && !db[i]) kept.push_back(events[i]);
    events.swap(kept);
    d.cleaned = events.size();
    if (write) {
      fs::create_directories(out / "clean");
      write_message_file(out / "clean" / (d.name + ".csv"), events);
      const auto p = out / "clean" / (d.name + "_removed.csv");
      auto f = open_out(p);
      f << "side,index,value,neighborhood_mean,neighborhood_sd,threshold\n";
      auto rows = [&](const OutlierReport& r, const char* side) {
        for (const auto& x : r.removals)
          f << side << ',' << x.index << ',' << num(x.value) << ',' << num(x.neighborhood_mean) << ','
            << num(x.neighborhood_sd) << ',' << num(x.threshold) << '\n';
      };
      rows(ra, "ask");
      rows(rb, "bid");
      finish(f, p);
    }
  });
  d.ms[Stage::Clean] = ms_since(t0);
  if (last == Stage::Clean) return d;

  t0 = Clock::now();
  auto snaps = tagged(Stage::Book, input, [&] {
    return build_book(events, kMaxDepth, OverflowPolicy::Clamp, &d.replay);
  });
  events.clear();
  events.shrink_to_fit();
  d.snapshots = snaps.size();
  for (const auto& s : snaps) d.two_sided += s.two_sided() ? 1 : 0;
  if (c.write_book || last == Stage::Book) {
    tagged(Stage::Book, input, [&] {
      fs::create_directories(out / "book");
      const bool bin = c.snapshot_format == SnapshotFormat::Binary;
      const auto p = out / "book" / (d.name + (bin ? ".bin" : ".csv"));
      auto f = open_out(p);
      if (bin) write_snapshots_binary(f, snaps);
      else write_snapshots_csv(f, snaps);
      finish(f, p);
    });
  }
  d.ms[Stage::Book] = ms_since(t0);
  if (last == Stage::Book) return d;

  t0 = Clock::now();
  d.features = tagged(Stage::Features, input, [&] {
    auto f = extract_features(snaps, c.window(), c.features, c.backend);
    const auto& m = f.matrix;
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t k = 0; k < m.cols(); ++k)
        if (!std::isfinite(m.at(r, k)))
          throw DomainError("non-finite " + m.columns[k] + " in window starting at event " +
                            std::to_string(f.window_start[r]));
    return f;
  });
  d.ms[Stage::Features] = ms_since(t0);
  if (last == Stage::Features) return d;

  t0 = Clock::now();
  tagged(Stage::Label, input, [&] {
    std::vector<Rational> mids;
    std::vector<std::size_t> compact(snaps.size(), 0);
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      if (!snaps[i].two_sided()) continue;
      compact[i] = mids.size();
      mids.push_back(*snaps[i].mid_price);
    }
    const std::size_t rows = d.features.matrix.rows();
    d.label.assign(rows, 0);
    d.labeled.assign(rows, 0);
    if (c.protocol == Protocol::I) d.horizon.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t at = compact[d.features.window_end[r] - 1];
      if (c.protocol == Protocol::I) {
        if (const auto l = label_protocol1(mids, at)) {
          d.label[r] = static_cast<int>(l->direction);
          d.horizon[r] = static_cast<double>(l->horizon);
          d.labeled[r] = 1;
        }
      } else if (const auto l = label_protocol2(mids, at, c.p2)) {
        d.label[r] = static_cast<int>(*l);
        d.labeled[r] = 1;
      }
    }
  });
  d.ms[Stage::Label] = ms_since(t0);
  return d;
}

std::vector<std::string> class_names(Protocol p) {
  if (p == Protocol::I) return {"down", "up"};
  return {"down", "stationary", "up"};
}

void write_features(const fs::path& p, const std::vector<DayOutput>& days) {
  auto f = open_out(p);
  const auto& cols = days.front().features.matrix.columns;
  f << "day,window_id,window_start,window_end,flags";
  for (const auto& c : cols) f << ',' << c;
  f << '\n';
  std::size_t id = 0;
  for (const auto& d : days) {
    const auto& m = d.features.matrix;
    for (std::size_t r = 0; r < m.rows(); ++r, ++id) {
      f << d.name << ',' << id << ',' << d.features.window_start[r] << ',' << d.features.window_end[r] << ','
        << static_cast<unsigned>(d.features.flags[r]);
      for (std::size_t k = 0; k < m.cols(); ++k) f << ',' << num(m.at(r, k));
      f << '\n';
    }
  }
  finish(f, p);
}

// Labeled rows of one split, with their global window ids.
struct SplitRows {
  std::vector<std::size_t> window_id;
  model::Dataset data;
};

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Parse: return "parse";
    case Stage::Clean: return "clean";
    case Stage::Book: return "book";
    case Stage::Features: return "features";
    case Stage::Label: return "label";
    case Stage::Normalize: return "normalize";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "?";
}

std::string feature_set_name(const FeatureSelection& s) {
  if (s.statistical && s.volatility && s.noise && s.price_discovery) return "econ";
  std::string out;
  auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  add(s.statistical, "stat");
  add(s.volatility, "vol");
  add(s.noise, "noise");
  add(s.price_discovery, "pd");
  return out;
}

const StageRecord* RunManifest::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["software"] = {{"name", "lobfeat"}, {"version", version}};
  j["config"] = config;
  auto seed_obj = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds) seed_obj[k] = v;
  j["seeds"] = seed_obj;
  auto st = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    auto counts = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.counts) counts[k] = v;
    st.push_back({{"name", s.name}, {"counts", counts}, {"elapsed_ms", s.elapsed_ms}});
  }
  j["stages"] = st;
  if (!day_split.empty()) {
    auto split = nlohmann::ordered_json::object();
    for (const auto& [d, s] : day_split) split[d] = s;
    j["split"] = split;
  }
  auto bal = [](const auto& v) {
    auto o = nlohmann::ordered_json::object();
    for (const auto& [k, n] : v) o[k] = n;
    return o;
  };
  if (!balance_before.empty()) j["class_balance"] = {{"before", bal(balance_before)}, {"after", bal(balance_after)}};
  if (eval) {
    j["eval"] = {{"protocol", to_string(eval->protocol)},
                 {"samples", eval->samples},
                 {"f1", eval->f1},
                 {"precision", eval->precision},
                 {"recall", eval->recall}};
    if (eval->protocol == Protocol::I) j["eval"]["rmse"] = eval->rmse;
  }
  return j;
}

RunManifest run_pipeline(const RunConfig& config, const RunOptions& options) {
  tagged(Stage::Parse, "", [&] { config.validate(true); });
  const Stage last = options.last;
  const auto files = config.input_files();
  const fs::path& out = config.output_dir;
  tagged(Stage::Parse, "", [&] { fs::create_directories(out); });

  RunManifest man;
  man.version = LOBFEAT_VERSION;
  man.config = config.to_json();
  man.seeds = {{"global", config.seed},
               {"undersample", derive_seed(config.seed, stream::kUndersample)},
               {"init", derive_seed(config.seed, stream::kInit)},
               {"shuffle", derive_seed(config.seed, stream::kShuffle)},
               {"dropout", derive_seed(config.seed, stream::kDropout)}};

  // Instrument-days fan out; results land in sorted-day slots.
  const Stage day_last = std::min(last, Stage::Label);
  std::vector<DayOutput> days(files.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) if (config.parallel_days)
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      days[i] = process_day(config, files[i], day_last);
    } catch (...) {
#pragma omp critical(lobfeat_pipeline_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  auto day_ms = [&](Stage s) {
    double t = 0.0;
    for (const auto& d : days) {
      const auto it = d.ms.find(s);
      if (it != d.ms.end()) t += it->second;
    }
    return t;
  };
  auto sum = [&](auto field) {
    std::int64_t t = 0;
    for (const auto& d : days) t += static_cast<std::int64_t>(field(d));
    return t;
  };

  {
    StageRecord r{"parse", {}, day_ms(Stage::Parse)};
    r.add("files", static_cast<std::int64_t>(files.size()));
    r.add("events", sum([](const DayOutput& d) { return d.parsed; }));
    man.stages.push_back(r);
  }
  if (last >= Stage::Clean) {
    StageRecord r{"clean", {}, day_ms(Stage::Clean)};
    const auto in = sum([](const DayOutput& d) { return d.parsed; });
    const auto kept = sum([](const DayOutput& d) { return d.cleaned; });
    r.add("events_in", in);
    r.add("events_kept", kept);
    r.add("events_removed", in - kept);
    r.add("outside_session", sum([](const DayOutput& d) { return d.session.outside_session; }));
    r.add("zero_price", sum([](const DayOutput& d) { return d.session.zero_price; }));
    r.add("outliers_ask", sum([](const DayOutput& d) { return d.outliers_ask; }));
    r.add("outliers_bid", sum([](const DayOutput& d) { return d.outliers_bid; }));
    r.add("sides_too_short", sum([](const DayOutput& d) { return d.sides_unfiltered; }));
    man.stages.push_back(r);
  }
  if (last >= Stage::Book) {
    StageRecord r{"book", {}, day_ms(Stage::Book)};
    const auto snaps = sum([](const DayOutput& d) { return d.snapshots; });
    const auto two = sum([](const DayOutput& d) { return d.two_sided; });
    r.add("events_in", sum([](const DayOutput& d) { return d.cleaned; }));
    r.add("snapshots", snaps);
    r.add("two_sided", two);
    r.add("one_sided_or_crossed", snaps - two);
    r.add("crossed", sum([](const DayOutput& d) { return d.replay.crossed; }));
    r.add("unknown_orders", sum([](const DayOutput& d) { return d.replay.unknown_orders; }));
    r.add("clamped", sum([](const DayOutput& d) { return d.replay.clamped; }));
    r.add("missing_levels", sum([](const DayOutput& d) { return d.replay.missing_levels; }));
    man.stages.push_back(r);
  }
  if (last >= Stage::Features) {
    StageRecord r{"features", {}, day_ms(Stage::Features)};
    const auto t0 = Clock::now();
    tagged(Stage::Features, "", [&] {
      if (days.empty()) throw DomainError("no days");
      write_features(out / "features.csv", days);
    });
    r.elapsed_ms += ms_since(t0);
    const auto total = sum([](const DayOutput& d) { return d.features.total_windows; });
    const auto dropped = sum([](const DayOutput& d) { return d.features.dropped_windows; });
    r.add("windows", total);
    r.add("rows", total - dropped);
    r.add("dropped_windows", dropped);
    r.add("columns", static_cast<std::int64_t>(days.front().features.matrix.cols()));
    for (auto [flag, name] : {std::pair{kAmpdDegenerate, "rows_ampd_degenerate"},
                              std::pair{kOomenNegative, "rows_oomen_negative"},
                              std::pair{kShortNoiseWindow, "rows_short_noise_window"},
                              std::pair{kSpotVolFallback, "rows_spot_vol_fallback"},
                              std::pair{kMissingDepth, "rows_missing_depth"}}) {
      std::int64_t n = 0;
      for (const auto& d : days)
        for (auto f : d.features.flags) n += (f & flag) ? 1 : 0;
      r.add(name, n);
    }
    man.stages.push_back(r);
  }
  if (last < Stage::Label) {
    auto f = open_out(out / "manifest.json");
    f << man.to_json().dump(2) << '\n';
    return man;
  }

  // Label + split.
  const Protocol proto = config.protocol;
  const auto names = class_names(proto);
  SplitRows train_rows, test_rows;
  std::size_t n_train_days = 0;
  {
    StageRecord r{"label", {}, day_ms(Stage::Label)};
    const auto t0 = Clock::now();
    tagged(Stage::Label, "", [&] {
      if (days.size() < 2) throw DomainError("need at least two days for the train/test split");
      n_train_days = static_cast<std::size_t>(
          std::llround(config.split.train_fraction * static_cast<double>(days.size())));
      n_train_days = std::clamp<std::size_t>(n_train_days, 1, days.size() - 1);

      const fs::path lp = out / "labels.csv";
      auto f = open_out(lp);
      f << (proto == Protocol::I ? "window_id,direction,horizon\n" : "window_id,class\n");
      std::size_t id = 0;
      const std::size_t cols = days.front().features.matrix.cols();
      for (std::size_t di = 0; di < days.size(); ++di) {
        const auto& d = days[di];
        auto& dst = di < n_train_days ? train_rows : test_rows;
        man.day_split.emplace_back(d.name, di < n_train_days ? "train" : "test");
        dst.data.x.columns = days.front().features.matrix.columns;
        for (std::size_t row = 0; row < d.label.size(); ++row, ++id) {
          if (!d.labeled[row]) continue;
          f << id << ',' << d.label[row];
          if (proto == Protocol::I) f << ',' << static_cast<std::int64_t>(d.horizon[row]);
          f << '\n';
          dst.window_id.push_back(id);
          const auto* src = &d.features.matrix.values[row * cols];
          dst.data.x.values.insert(dst.data.x.values.end(), src, src + cols);
          dst.data.cls.push_back(model::class_index(proto, d.label[row]));
          if (proto == Protocol::I) dst.data.reg.push_back(d.horizon[row]);
        }
      }
      finish(f, lp);
    });
    const auto rows = sum([](const DayOutput& d) { return d.label.size(); });
    const auto labeled = static_cast<std::int64_t>(train_rows.window_id.size() + test_rows.window_id.size());
    r.add("rows_in", rows);
    r.add("labeled", labeled);
    r.add("unlabeled", rows - labeled);
    r.add("train_days", static_cast<std::int64_t>(n_train_days));
    r.add("test_days", static_cast<std::int64_t>(days.size() - n_train_days));
    r.add("train_rows", static_cast<std::int64_t>(train_rows.window_id.size()));
    r.add("test_rows", static_cast<std::int64_t>(test_rows.window_id.size()));
    r.elapsed_ms += ms_since(t0);
    man.stages.push_back(r);
  }

  // Validation tail, then undersampling of what remains for fitting.
  const std::size_t n_tr = train_rows.window_id.size();
  const std::size_t n_fit =
      static_cast<std::size_t>(static_cast<double>(n_tr) * (1.0 - config.split.validation_fraction));
  std::vector<std::size_t> fit_idx(n_fit);
  for (std::size_t i = 0; i < n_fit; ++i) fit_idx[i] = i;
  {
    std::vector<std::int64_t> before(names.size(), 0), after(names.size(), 0);
    for (std::size_t i = 0; i < n_fit; ++i) ++before[static_cast<std::size_t>(train_rows.data.cls[i])];
    if (config.split.undersample && n_fit) {
      tagged(Stage::Label, "", [&] {
        const std::vector<int> fit_cls(train_rows.data.cls.begin(), train_rows.data.cls.begin() + static_cast<std::ptrdiff_t>(n_fit));
        fit_idx = undersample(fit_cls, derive_seed(config.seed, stream::kUndersample));
      });
    }
    for (auto i : fit_idx) ++after[static_cast<std::size_t>(train_rows.data.cls[i])];
    for (std::size_t k = 0; k < names.size(); ++k) {
      man.balance_before.emplace_back(names[k], before[k]);
      man.balance_after.emplace_back(names[k], after[k]);
    }
    nlohmann::ordered_json split;
    split["seed"] = config.seed;
    split["undersample_seed"] = derive_seed(config.seed, stream::kUndersample);
    auto days_j = nlohmann::ordered_json::object();
    for (const auto& [d, s] : man.day_split) days_j[d] = s;
    split["days"] = days_j;
    split["rows"] = {{"train", n_fit},
                     {"validation", n_tr - n_fit},
                     {"test", test_rows.window_id.size()},
                     {"fit_after_undersampling", fit_idx.size()}};
    auto bal = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < names.size(); ++k) bal[names[k]] = {{"before", before[k]}, {"after", after[k]}};
    split["class_balance"] = bal;
    auto f = open_out(out / "split.json");
    f << split.dump(2) << '\n';
    finish(f, out / "split.json");
  }
  if (last == Stage::Label) {
    auto f = open_out(out / "manifest.json");
    f << man.to_json().dump(2) << '\n';
    return man;
  }

  // Normalize: fit on the training days only.
  model::Dataset fit_set, val_set, test_set;
  {
    StageRecord r{"normalize", {}, 0.0};
    const auto t0 = Clock::now();
    tagged(Stage::Normalize, "", [&] {
      if (n_tr == 0) throw DomainError("no labeled training rows");
      if (test_rows.window_id.empty()) throw DomainError("no labeled test rows");
      const auto params = minmax_fit(train_rows.data.x);
      const auto& cols = train_rows.data.x.columns;
      auto tr = minmax_apply(params, cols, train_rows.data.x);
      auto te = minmax_apply(params, cols, test_rows.data.x);
      r.add("columns", static_cast<std::int64_t>(cols.size()));
      std::int64_t constant = 0;
      for (auto k : params.constant) constant += k;
      r.add("constant_columns", constant);
      r.add("test_out_of_range_cells", static_cast<std::int64_t>(te.out_of_range));

      {
        const auto p = out / "minmax.csv";
        auto f = open_out(p);
        f << "column,min,max,constant\n";
        for (std::size_t k = 0; k < cols.size(); ++k)
          f << cols[k] << ',' << num(params.min[k]) << ',' << num(params.max[k]) << ','
            << static_cast<int>(params.constant[k]) << '\n';
        finish(f, p);
      }
      {
        const auto p = out / "normalized.csv";
        auto f = open_out(p);
        f << "window_id,split";
        for (const auto& c : cols) f << ',' << c;
        f << '\n';
        auto rows = [&](const SplitRows& s, const Matrix& m, auto split_of) {
          for (std::size_t i = 0; i < m.rows(); ++i) {
            f << s.window_id[i] << ',' << split_of(i);
            for (std::size_t k = 0; k < m.cols(); ++k) f << ',' << num(m.at(i, k));
            f << '\n';
          }
        };
        rows(train_rows, tr.normalized, [&](std::size_t i) { return i < n_fit ? "train" : "validation"; });
        rows(test_rows, te.normalized, [](std::size_t) { return "test"; });
        finish(f, p);
      }

      const std::size_t nc = cols.size();
      auto take = [&](const Matrix& m, const model::Dataset& src, auto begin, auto end) {
        model::Dataset d;
        d.x.columns = cols;
        for (auto it = begin; it != end; ++it) {
          const std::size_t i = *it;
          d.x.values.insert(d.x.values.end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * nc),
                            m.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * nc));
          d.cls.push_back(src.cls[i]);
          if (proto == Protocol::I) d.reg.push_back(src.reg[i]);
        }
        return d;
      };
      fit_set = take(tr.normalized, train_rows.data, fit_idx.begin(), fit_idx.end());
      std::vector<std::size_t> vi, ti;
      for (std::size_t i = n_fit; i < n_tr; ++i) vi.push_back(i);
      for (std::size_t i = 0; i < test_rows.window_id.size(); ++i) ti.push_back(i);
      val_set = take(tr.normalized, train_rows.data, vi.begin(), vi.end());
      test_set = take(te.normalized, test_rows.data, ti.begin(), ti.end());
    });
    r.add("train_rows", static_cast<std::int64_t>(fit_set.size()));
    r.add("validation_rows", static_cast<std::int64_t>(val_set.size()));
    r.add("test_rows", static_cast<std::int64_t>(test_set.size()));
    r.elapsed_ms = ms_since(t0);
    man.stages.push_back(r);
  }
  if (last == Stage::Normalize) {
    auto f = open_out(out / "manifest.json");
    f << man.to_json().dump(2) << '\n';
    return man;
  }

  model::ModelState state;
  {
    StageRecord r{"train", {}, 0.0};
    const auto t0 = Clock::now();
    tagged(Stage::Train, options.checkpoint ? options.checkpoint->string() : "", [&] {
      if (options.checkpoint) {
        state = model::load_checkpoint(*options.checkpoint);
        if (state.input_dim != fit_set.x.cols())
          throw DomainError("checkpoint expects " + std::to_string(state.input_dim) + " features, data has " +
                            std::to_string(fit_set.x.cols()));
        if (state.config.protocol != proto) throw DomainError("checkpoint was trained for another protocol");
        r.add("loaded", 1);
        return;
      }
      if (fit_set.size() == 0) throw DomainError("empty training set");
      auto res = model::train(config.model, fit_set, val_set);
      state = std::move(res.state);
      model::save_checkpoint(out / "checkpoint.bin", state);
      const auto p = out / "history.csv";
      auto f = open_out(p);
      model::write_history(f, res.history);
      finish(f, p);
      r.add("samples", static_cast<std::int64_t>(fit_set.size()));
      r.add("epochs", static_cast<std::int64_t>(config.model.epochs));
      r.add("parameters", static_cast<std::int64_t>(state.params.size()));
      r.add("steps", static_cast<std::int64_t>(state.step));
    });
    r.elapsed_ms = ms_since(t0);
    man.stages.push_back(r);
  }
  if (last == Stage::Train) {
    auto f = open_out(out / "manifest.json");
    f << man.to_json().dump(2) << '\n';
    return man;
  }

  {
    StageRecord r{"evaluate", {}, 0.0};
    const auto t0 = Clock::now();
    tagged(Stage::Evaluate, "", [&] {
      const auto pred = model::predict(state, test_set.x);
      man.eval = model::evaluate_predictions(proto, pred, test_set);
      const auto& e = *man.eval;
      nlohmann::ordered_json j;
      j["protocol"] = to_string(proto);
      j["samples"] = e.samples;
      j["f1"] = e.f1;
      j["precision"] = e.precision;
      j["recall"] = e.recall;
      if (proto == Protocol::I) j["rmse"] = e.rmse;
      auto cls = nlohmann::ordered_json::object();
      for (std::size_t k = 0; k < e.classes.size(); ++k)
        cls[names[k]] = {{"tp", e.classes[k].tp}, {"fp", e.classes[k].fp}, {"fn", e.classes[k].fn}};
      j["classes"] = cls;
      auto f = open_out(out / "eval.json");
      f << j.dump(2) << '\n';
      finish(f, out / "eval.json");

      const auto pp = out / "predictions.csv";
      auto g = open_out(pp);
      g << (proto == Protocol::I ? "window_id,truth,predicted,horizon,horizon_predicted\n"
                                 : "window_id,truth,predicted\n");
      for (std::size_t i = 0; i < test_set.size(); ++i) {
        g << test_rows.window_id[i] << ',' << model::label_of_class(proto, test_set.cls[i]) << ','
          << model::label_of_class(proto, pred.cls[i]);
        if (proto == Protocol::I) g << ',' << num(test_set.reg[i]) << ',' << num(pred.reg[i]);
        g << '\n';
      }
      finish(g, pp);
      r.add("samples", static_cast<std::int64_t>(e.samples));
    });
    r.elapsed_ms = ms_since(t0);
    man.stages.push_back(r);
  }

  if (last >= Stage::Report) {
    StageRecord r{"report", {}, 0.0};
    const auto t0 = Clock::now();
    tagged(Stage::Report, "", [&] {
      auto f = open_out(out / "report.txt");
      write_report(f, man, config);
      finish(f, out / "report.txt");
      auto g = open_out(out / "results.json");
      g << results_json(man, config).dump(2) << '\n';
      finish(g, out / "results.json");
    });
    r.elapsed_ms = ms_since(t0);
    man.stages.push_back(r);
  }
  auto f = open_out(out / "manifest.json");
  f << man.to_json().dump(2) << '\n';
  finish(f, out / "manifest.json");
  return man;
}

nlohmann::ordered_json results_json(const RunManifest& man, const RunConfig& config) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(config.protocol);
  auto rows = nlohmann::ordered_json::array();
  if (man.eval) {
    nlohmann::ordered_json row;
    row["model"] = config.model.name;
    row["feature_set"] = feature_set_name(config.features.select);
    row["balanced"] = config.split.undersample;
    if (config.protocol == Protocol::I) {
      row["f1"] = man.eval->f1;
      row["rmse"] = man.eval->rmse;
    } else {
      row["macro_f1"] = man.eval->f1;
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

void write_report(std::ostream& out, const RunManifest& man, const RunConfig& config) {
  out << "lobfeat " << man.version << " run report\n\n";
  out << "Stages\n";
  for (const auto& s : man.stages) {
    out << "  " << s.name << '\n';
    for (const auto& [k, v] : s.counts) out << "    " << k << " = " << v << '\n';
  }
  if (!man.balance_before.empty()) {
    out << "\nClass balance (training rows, before -> after undersampling)\n";
    for (std::size_t k = 0; k < man.balance_before.size(); ++k)
      out << "  " << man.balance_before[k].first << ": " << man.balance_before[k].second << " -> "
          << man.balance_after[k].second << '\n';
  }
  if (!man.eval) {
    out << "\nNo evaluation was run.\n";
    return;
  }
  char buf[160];
  out << "\nProtocol " << to_string(config.protocol) << " results\n";
  if (config.protocol == Protocol::I) {
    std::snprintf(buf, sizeof buf, "  %-8s %-16s %-9s %8s %10s\n", "model", "feature_set", "balanced", "f1", "rmse");
    out << buf;
    std::snprintf(buf, sizeof buf, "  %-8s %-16s %-9s %8.4f %10.4f\n", config.model.name.c_str(),
                  feature_set_name(config.features.select).c_str(), config.split.undersample ? "yes" : "no",
                  man.eval->f1, man.eval->rmse);
  } else {
    std::snprintf(buf, sizeof buf, "  %-8s %-16s %-9s %8s\n", "model", "feature_set", "balanced", "macro_f1");
    out << buf;
    std::snprintf(buf, sizeof buf, "  %-8s %-16s %-9s %8.4f\n", config.model.name.c_str(),
                  feature_set_name(config.features.select).c_str(), config.split.undersample ? "yes" : "no",
                  man.eval->f1);
  }
  out << buf;
}

}  // namespace lobfeat
