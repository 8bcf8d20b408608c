#include "lobfeat/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lobfeat/error.hpp"

namespace lobfeat {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"input", {"files", "dir", "tick"}},
      {"session", {"open", "close"}},
      {"cleaning", {"enabled", "k", "alpha", "gamma_ticks", "trim"}},
      {"window", {"length", "stride"}},
      {"protocol", {"type", "horizon", "alpha"}},
      {"split", {"train_fraction", "validation_fraction", "undersample"}},
      {"model", {"preset", "width_scale", "lambda", "lr", "beta1", "beta2", "epsilon", "log_clamp",
                 "epochs", "batch_size", "shards", "dropout"}},
      {"features", {"statistical", "volatility", "noise", "price_discovery", "quarticity_window",
                    "weighting", "backend"}},
      {"output", {"dir", "snapshot_format", "write_clean", "write_book"}},
      {"run", {"seed", "parallel_days"}},
      {"synth", {"mode", "days", "steps", "sigma", "horizon", "jumps", "jump_size", "noise_sd",
                 "mean_gap_ms", "price", "tick", "base_volume", "fillers", "dir"}},
  };
  return keys;
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, fs::path base) : tree_(tree), base_(std::move(base)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(section);
    if (!s) return nullptr;
    const auto v = s->get_child_optional(key);
    return v ? &v->data() : nullptr;
  }

  template <class F>
  void with(const std::string& section, const std::string& key, F&& f) const {
    if (const auto* r = raw(section, key)) {
      try {
        f(trim(*r));
      } catch (const Error& e) {
        throw ParseError("[" + section + "] " + key + ": " + e.what(), 0);
      } catch (const std::exception&) {
        throw ParseError("[" + section + "] " + key + ": invalid value '" + trim(*r) + "'", 0);
      }
    }
  }

  void get(const std::string& s, const std::string& k, double& out) const {
    with(s, k, [&](const std::string& v) { out = number(v); });
  }
  void get(const std::string& s, const std::string& k, bool& out) const {
    with(s, k, [&](const std::string& v) { out = boolean(v); });
  }
  void get(const std::string& s, const std::string& k, std::string& out) const {
    with(s, k, [&](const std::string& v) { out = v; });
  }
  void get(const std::string& s, const std::string& k, fs::path& out) const {
    with(s, k, [&](const std::string& v) { out = resolve(v); });
  }
  template <class I>
    requires std::is_integral_v<I>
  void get(const std::string& s, const std::string& k, I& out) const {
    with(s, k, [&](const std::string& v) { out = integer<I>(v); });
  }

  fs::path resolve(const std::string& v) const {
    fs::path p(v);
    return p.is_absolute() ? p : base_ / p;
  }

  static double number(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  }
  template <class I>
  static I integer(const std::string& v) {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    if constexpr (std::is_unsigned_v<I>)
      if (x < 0) throw DomainError("must be non-negative");
    return static_cast<I>(x);
  }
  static bool boolean(const std::string& v) {
    const auto l = lower(v);
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw DomainError("expected a boolean, got '" + v + "'");
  }

 private:
  const pt::ptree& tree_;
  fs::path base_;
};

// "HH:MM[:SS[.mmm]]" or plain milliseconds after midnight.
std::int64_t time_of_day(const std::string& v) {
  if (v.find(':') == std::string::npos) return Reader::integer<std::int64_t>(v);
  int h = 0, m = 0;
  double s = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(v);
  in >> h >> c1 >> m;
  if (!in || c1 != ':') throw DomainError("bad time '" + v + "'");
  if (in >> c2) {
    if (c2 != ':' || !(in >> s)) throw DomainError("bad time '" + v + "'");
  }
  if (h < 0 || h > 24 || m < 0 || m > 59 || s < 0.0 || s >= 60.0)
    throw DomainError("bad time '" + v + "'");
  return static_cast<std::int64_t>(h) * 3600000 + m * 60000 + std::llround(s * 1000.0);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::string to_string(Protocol p) { return p == Protocol::I ? "I" : "II"; }

Protocol protocol_from(const std::string& s) {
  const auto l = lower(s);
  if (l == "i" || l == "1") return Protocol::I;
  if (l == "ii" || l == "2") return Protocol::II;
  throw DomainError("unknown protocol '" + s + "' (expected I or II)");
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DomainError("train fraction must lie in (0, 1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw DomainError("validation fraction must lie in [0, 1)");
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string(), 0);
  return parse(in, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

RunConfig RunConfig::parse(std::istream& in, const fs::path& base) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: " + e.message(), e.line());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ParseError("config: unknown section [" + section + "]", 0);
    if (!body.data().empty()) throw ParseError("config: key '" + section + "' outside a section", 0);
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ParseError("config: unknown key '" + key + "' in [" + section + "]", 0);
  }

  RunConfig c;
  const Reader r(tree, base);
  r.with("input", "files", [&](const std::string& v) {
    for (const auto& f : split_list(v)) c.files.push_back(r.resolve(f));
  });
  r.get("input", "dir", c.dir);
  r.get("input", "tick", c.tick);
  r.with("session", "open", [&](const std::string& v) { c.session_open = time_of_day(v); });
  r.with("session", "close", [&](const std::string& v) { c.session_close = time_of_day(v); });

  r.get("cleaning", "enabled", c.cleaning);
  r.get("cleaning", "k", c.filter.k);
  r.get("cleaning", "alpha", c.filter.alpha_sd);
  r.get("cleaning", "gamma_ticks", c.gamma_ticks);
  r.get("cleaning", "trim", c.filter.trim_fraction);

  r.get("window", "length", c.window_length);
  r.get("window", "stride", c.window_stride);

  r.with("protocol", "type", [&](const std::string& v) { c.protocol = protocol_from(v); });
  r.get("protocol", "horizon", c.p2.horizon);
  r.with("protocol", "alpha", [&](const std::string& v) { c.p2.alpha = Rational::parse(v); });

  r.get("split", "train_fraction", c.split.train_fraction);
  r.get("split", "validation_fraction", c.split.validation_fraction);
  r.get("split", "undersample", c.split.undersample);

  r.get("model", "preset", c.preset);
  r.get("model", "width_scale", c.width_scale);
  for (const char* key : {"lambda", "lr", "beta1", "beta2", "epsilon", "log_clamp", "dropout"})
    r.with("model", key, [&](const std::string& v) { c.model_overrides_[key] = Reader::number(v); });
  for (const char* key : {"epochs", "batch_size", "shards"})
    r.with("model", key, [&](const std::string& v) { c.model_overrides_[key] = Reader::integer<std::size_t>(v); });

  auto& sel = c.features.select;
  r.get("features", "statistical", sel.statistical);
  r.get("features", "volatility", sel.volatility);
  r.get("features", "noise", sel.noise);
  r.get("features", "price_discovery", sel.price_discovery);
  r.get("features", "quarticity_window", c.features.quarticity_window);
  r.with("features", "weighting", [&](const std::string& v) {
    const auto l = lower(v);
    if (l == "as_printed") c.features.weighting = ImbalanceWeighting::AsPrinted;
    else if (l == "micro_price") c.features.weighting = ImbalanceWeighting::MicroPrice;
    else throw DomainError("expected as_printed or micro_price");
  });
  r.with("features", "backend", [&](const std::string& v) {
    const auto l = lower(v);
    if (l == "serial") c.backend = kernels::Backend::Serial;
    else if (l == "openmp") c.backend = kernels::Backend::OpenMP;
    else throw DomainError("expected serial or openmp");
  });

  r.get("output", "dir", c.output_dir);
  r.with("output", "snapshot_format", [&](const std::string& v) {
    const auto l = lower(v);
    if (l == "csv") c.snapshot_format = SnapshotFormat::Csv;
    else if (l == "binary") c.snapshot_format = SnapshotFormat::Binary;
    else throw DomainError("expected csv or binary");
  });
  r.get("output", "write_clean", c.write_clean);
  r.get("output", "write_book", c.write_book);

  r.get("run", "seed", c.seed);
  r.get("run", "parallel_days", c.parallel_days);

  auto& s = c.synth;
  r.with("synth", "mode", [&](const std::string& v) { s.mode = synth_mode_from(lower(v)); });
  r.get("synth", "days", s.days);
  r.get("synth", "steps", s.steps);
  r.get("synth", "sigma", s.path.sigma);
  r.get("synth", "horizon", s.path.horizon);
  r.get("synth", "jumps", s.path.jumps);
  r.get("synth", "jump_size", s.path.jump_size);
  r.get("synth", "noise_sd", s.path.noise_sd);
  r.get("synth", "mean_gap_ms", s.mean_gap_ms);
  r.get("synth", "price", s.price);
  r.get("synth", "tick", s.tick);
  r.get("synth", "base_volume", s.base_volume);
  r.get("synth", "fillers", s.fillers);
  r.get("synth", "dir", c.synth_dir);
  s.session_open = c.session_open;

  if (c.tick < 1) throw ParseError("config: [input] tick must be >= 1", 0);
  c.features.tick = TickSize(c.tick);
  c.filter.gamma = c.gamma_ticks * static_cast<double>(c.tick);
  c.rebuild_model();
  return c;
}

void RunConfig::rebuild_model() {
  try {
    model = model::ModelConfig::preset(preset, protocol, width_scale);
  } catch (const DomainError& e) {
    throw ParseError(std::string("config: [model] ") + e.what(), 0);
  }
  const auto& o = model_overrides_;
  if (o.contains("lambda")) model.lambda = o["lambda"].get<double>();
  if (o.contains("lr")) model.lr = o["lr"].get<double>();
  if (o.contains("beta1")) model.beta1 = o["beta1"].get<double>();
  if (o.contains("beta2")) model.beta2 = o["beta2"].get<double>();
  if (o.contains("epsilon")) model.epsilon = o["epsilon"].get<double>();
  if (o.contains("log_clamp")) model.log_clamp = o["log_clamp"].get<double>();
  if (o.contains("epochs")) model.epochs = o["epochs"].get<std::size_t>();
  if (o.contains("batch_size")) model.batch_size = o["batch_size"].get<std::size_t>();
  if (o.contains("shards")) model.shards = o["shards"].get<std::size_t>();
  if (o.contains("dropout"))
    for (auto& h : model.hidden)
      if (h.dropout > 0.0) h.dropout = o["dropout"].get<double>();
  model.seed = seed;
}

void RunConfig::set_protocol(Protocol p) {
  protocol = p;
  rebuild_model();
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  model.seed = s;
}

WindowSpec RunConfig::window() const {
  const std::size_t len = window_length ? window_length : 10;
  const std::size_t stride = window_stride ? window_stride : (protocol == Protocol::I ? 1 : len);
  return {len, stride};
}

void RunConfig::validate(bool check_inputs) const {
  if (session_open < 0 || session_close <= session_open || session_close > 86400000)
    throw DomainError("session bounds must satisfy 0 <= open < close <= 24:00");
  filter.validate(TickSize(tick));
  window().validate();
  if (window().length < 5) throw DomainError("window length must be >= 5");
  if (p2.horizon == 0) throw DomainError("Protocol II horizon must be positive");
  if (p2.alpha < Rational(0)) throw DomainError("Protocol II alpha must be non-negative");
  split.validate();
  model.validate();
  if (features.quarticity_window < 4) throw DomainError("quarticity window must be >= 4");
  const auto& sel = features.select;
  if (!sel.statistical && !sel.volatility && !sel.noise && !sel.price_discovery)
    throw DomainError("no feature group selected");
  if (check_inputs) {
    for (const auto& f : files)
      if (!fs::is_regular_file(f)) throw DomainError("input file not found: " + f.string());
    if (!dir.empty() && !fs::is_directory(dir)) throw DomainError("input directory not found: " + dir.string());
    if (input_files().empty()) throw DomainError("no input files (set [input] files or dir)");
  }
}

std::vector<fs::path> RunConfig::input_files() const {
  std::vector<fs::path> out = files;
  if (!dir.empty() && fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv" &&
          e.path().stem().string().find("_truth") == std::string::npos)
        out.push_back(e.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename() != b.filename() ? a.filename() < b.filename() : a < b;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  auto paths = nlohmann::ordered_json::array();
  for (const auto& f : input_files()) paths.push_back(f.filename().string());
  j["input"] = {{"files", paths}, {"tick", tick}};
  j["session"] = {{"open_ms", session_open}, {"close_ms", session_close}};
  j["cleaning"] = {{"enabled", cleaning},
                   {"k", filter.k},
                   {"alpha", filter.alpha_sd},
                   {"gamma_ticks", gamma_ticks},
                   {"gamma", filter.gamma},
                   {"trim", filter.trim_fraction}};
  j["window"] = {{"length", window().length}, {"stride", window().stride}};
  j["protocol"] = {{"type", to_string(protocol)}, {"horizon", p2.horizon}, {"alpha", p2.alpha.str()}};
  j["split"] = {{"train_fraction", split.train_fraction},
                {"validation_fraction", split.validation_fraction},
                {"undersample", split.undersample}};
  j["model"] = nlohmann::ordered_json::parse(model::config_json(model));
  j["model"]["width_scale"] = width_scale;
  const auto& sel = features.select;
  j["features"] = {{"statistical", sel.statistical},
                   {"volatility", sel.volatility},
                   {"noise", sel.noise},
                   {"price_discovery", sel.price_discovery},
                   {"quarticity_window", features.quarticity_window},
                   {"weighting", features.weighting == ImbalanceWeighting::AsPrinted ? "as_printed" : "micro_price"},
                   {"backend", backend == kernels::Backend::Serial ? "serial" : "openmp"}};
  j["output"] = {{"snapshot_format", snapshot_format == SnapshotFormat::Csv ? "csv" : "binary"},
                 {"write_clean", write_clean},
                 {"write_book", write_book}};
  j["run"] = {{"seed", seed}, {"parallel_days", parallel_days}};
  return j;
}

}  // namespace lobfeat
