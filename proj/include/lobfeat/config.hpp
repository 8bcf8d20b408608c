#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "lobfeat/cleaning.hpp"
#include "lobfeat/feature_matrix.hpp"
#include "lobfeat/model.hpp"
#include "lobfeat/protocol.hpp"
#include "lobfeat/synthetic.hpp"

namespace lobfeat {

struct SplitSpec {
  double train_fraction = 0.7;       // of days, in sorted day order
  double validation_fraction = 0.2;  // tail of the training rows
  bool undersample = true;           // training rows only
  void validate() const;
};

enum class SnapshotFormat { Csv, Binary };

/// Everything one run needs. Loaded from an INI file; every field has a
/// default and the effective values are echoed into the run manifest.
struct RunConfig {
  // [input]
  std::vector<std::filesystem::path> files;  // explicit day files, or
  std::filesystem::path dir;                 // every *.csv in dir (sorted)
  std::int64_t tick = 1;
  // [session] times of day, ms after midnight, inclusive
  std::int64_t session_open = 34200000;
  std::int64_t session_close = 57600000;
  // [cleaning]
  bool cleaning = true;
  FilterParams filter{};  // gamma derived from gamma_ticks when loaded
  double gamma_ticks = 2.0;
  // [window] length 0 means the protocol default
  std::size_t window_length = 10;
  std::size_t window_stride = 0;
  // [protocol]
  Protocol protocol = Protocol::I;
  LabelP2Params p2{};
  // [split]
  SplitSpec split{};
  // [model]
  std::string preset = "MLP_1";
  double width_scale = 1.0;
  model::ModelConfig model{};
  // [features]
  FeatureOptions features{};
  kernels::Backend backend = kernels::Backend::OpenMP;
  // [output]
  std::filesystem::path output_dir = "out";
  SnapshotFormat snapshot_format = SnapshotFormat::Csv;
  bool write_clean = false;  // cleaned message files for every day
  bool write_book = false;   // snapshot files for every day
  // [run]
  std::uint64_t seed = 42;
  bool parallel_days = true;
  // [synth]
  SynthSpec synth{};
  std::filesystem::path synth_dir = "data";

  /// Defaults merged with the file; unknown sections or keys are errors.
  /// Relative paths resolve against the file's directory.
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::istream& in, const std::filesystem::path& base = ".");

  WindowSpec window() const;
  /// Rebuilds the model config from preset/width plus the [model] overrides.
  void set_protocol(Protocol p);
  void set_seed(std::uint64_t s);

  /// Checks invariants. With `check_inputs`, input paths must exist and
  /// resolve to at least one file.
  void validate(bool check_inputs) const;
  std::vector<std::filesystem::path> input_files() const;

  nlohmann::ordered_json to_json() const;

 private:
  // Model overrides from the file applied on top of a preset.
  nlohmann::ordered_json model_overrides_ = nlohmann::ordered_json::object();
  void rebuild_model();
};

std::string to_string(Protocol p);
Protocol protocol_from(const std::string& s);

}  // namespace lobfeat
