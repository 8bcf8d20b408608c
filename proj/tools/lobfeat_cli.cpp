// lobfeat command line: one subcommand per pipeline stage plus `run`.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lobfeat/config.hpp"
#include "lobfeat/error.hpp"
#include "lobfeat/pipeline.hpp"
#include "lobfeat/synthetic.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string protocol;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "INI run configuration")->check(CLI::ExistingFile);
  app->add_option("-o,--out", c.out, "output directory (overrides [output] dir)");
  app->add_option("-s,--seed", c.seed, "global seed (overrides [run] seed)");
  app->add_option("-p,--protocol", c.protocol, "labeling protocol: I or II")->check(CLI::IsMember({"I", "II", "1", "2"}));
}

lobfeat::RunConfig load(const Common& c) {
  lobfeat::RunConfig cfg;
  if (c.config.empty()) {
    std::istringstream empty;
    cfg = lobfeat::RunConfig::parse(empty);
  } else {
    cfg = lobfeat::RunConfig::load(c.config);
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.protocol.empty()) cfg.set_protocol(lobfeat::protocol_from(c.protocol));
  if (c.inputs.size() == 1 && std::filesystem::is_directory(c.inputs.front())) {
    cfg.dir = c.inputs.front();
    cfg.files.clear();
  } else if (!c.inputs.empty()) {
    cfg.files.assign(c.inputs.begin(), c.inputs.end());
    cfg.dir.clear();
  }
  return cfg;
}

void summary(const lobfeat::RunManifest& m, const lobfeat::RunConfig& cfg) {
  for (const auto& s : m.stages) {
    std::cout << s.name << ':';
    for (const auto& [k, v] : s.counts) std::cout << ' ' << k << '=' << v;
    std::cout << '\n';
  }
  if (m.eval) {
    std::cout << "f1=" << m.eval->f1;
    if (cfg.protocol == lobfeat::Protocol::I) std::cout << " rmse=" << m.eval->rmse;
    std::cout << '\n';
  }
  std::cout << "artifacts in " << cfg.output_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limit order book features, labels and MLP baselines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LOBFEAT_VERSION);

  Common common;
  struct StageCmd {
    const char* name;
    const char* help;
    lobfeat::Stage last;
  };
  const StageCmd stages[] = {
      {"clean", "session filter and outlier removal; writes clean/", lobfeat::Stage::Clean},
      {"book", "rebuild order books; writes book/", lobfeat::Stage::Book},
      {"features", "window features; writes features.csv", lobfeat::Stage::Features},
      {"label", "labels and day split; writes labels.csv, split.json", lobfeat::Stage::Label},
      {"normalize", "MinMax scaling fitted on training days", lobfeat::Stage::Normalize},
      {"train", "train the MLP; writes checkpoint.bin, history.csv", lobfeat::Stage::Train},
      {"evaluate", "evaluate on the test days; writes eval.json", lobfeat::Stage::Evaluate},
      {"run", "all stages plus report", lobfeat::Stage::Report},
  };

  std::string checkpoint;
  std::vector<std::pair<CLI::App*, lobfeat::Stage>> cmds;
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, common);
    sub->add_option("-i,--input", common.inputs, "message files or one directory (override [input])")->check(CLI::ExistingPath);
    if (s.last == lobfeat::Stage::Evaluate)
      sub->add_option("--checkpoint", checkpoint, "evaluate this model instead of training")->check(CLI::ExistingFile);
    cmds.emplace_back(sub, s.last);
  }

  auto* synth = app.add_subcommand("synth", "generate synthetic message files");
  add_common(synth, common);
  std::string mode, synth_dir;
  std::optional<std::size_t> days, steps;
  synth->add_option("--mode", mode, "diffusion or linear_signal")->check(CLI::IsMember({"diffusion", "linear_signal"}));
  synth->add_option("--days", days, "number of days");
  synth->add_option("--steps", steps, "path steps or moves per day");
  synth->add_option("-d,--dir", synth_dir, "destination (overrides [synth] dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load(common);
    if (synth->parsed()) {
      auto spec = cfg.synth;
      if (!mode.empty()) spec.mode = lobfeat::synth_mode_from(mode);
      if (days) spec.days = *days;
      if (steps) spec.steps = *steps;
      const std::filesystem::path dir = synth_dir.empty() ? cfg.synth_dir : std::filesystem::path(synth_dir);
      try {
        const auto files = lobfeat::generate_synthetic(spec, cfg.seed, dir);
        std::cout << "wrote " << files.size() << " day files to " << dir.string() << '\n';
      } catch (const std::exception& e) {
        throw lobfeat::StageError("synth", e.what());
      }
      return 0;
    }
    for (const auto& [sub, last] : cmds) {
      if (!sub->parsed()) continue;
      lobfeat::RunOptions opt;
      opt.last = last;
      if (!checkpoint.empty()) opt.checkpoint = checkpoint;
      summary(lobfeat::run_pipeline(cfg, opt), cfg);
    }
    return 0;
  } catch (const lobfeat::StageError& e) {
    std::cerr << "lobfeat: " << e.what() << '\n';
    return 1;
  } catch (const lobfeat::Error& e) {
    std::cerr << "lobfeat: [config] " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lobfeat: " << e.what() << '\n';
    return 1;
  }
}
