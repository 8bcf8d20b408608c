#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lobfeat/config.hpp"
#include "lobfeat/model.hpp"

namespace lobfeat {

/// Stages in execution order. A run stops after `last`.
enum class Stage { Parse, Clean, Book, Features, Label, Normalize, Train, Evaluate, Report };

std::string to_string(Stage s);

struct StageRecord {
  std::string name;
  std::vector<std::pair<std::string, std::int64_t>> counts;
  double elapsed_ms = 0.0;  // wall clock; excluded from reproducibility
  void add(std::string key, std::int64_t value) { counts.emplace_back(std::move(key), value); }
};

struct RunManifest {
  std::string version;
  nlohmann::ordered_json config;
  std::vector<StageRecord> stages;
  std::vector<std::pair<std::string, std::string>> day_split;  // day -> train|test
  std::vector<std::pair<std::string, std::int64_t>> balance_before;
  std::vector<std::pair<std::string, std::int64_t>> balance_after;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::optional<model::EvalReport> eval;

  const StageRecord* stage(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
};

struct RunOptions {
  Stage last = Stage::Report;
  /// Evaluate this checkpoint instead of training a new model.
  std::optional<std::filesystem::path> checkpoint;
};

/// Runs the stages up to options.last, writing artifacts under
/// config.output_dir. Any failure raises StageError naming the stage and,
/// where one is involved, the input file.
RunManifest run_pipeline(const RunConfig& config, const RunOptions& options = {});

/// Human-readable summary: stage counts, then a metric table.
void write_report(std::ostream& out, const RunManifest& manifest, const RunConfig& config);
/// Machine-readable metric rows.
nlohmann::ordered_json results_json(const RunManifest& manifest, const RunConfig& config);

/// Feature-set name for a selection, e.g. "econ" for all four groups.
std::string feature_set_name(const FeatureSelection& s);

}  // namespace lobfeat
