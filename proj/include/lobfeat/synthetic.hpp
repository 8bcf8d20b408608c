#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lobfeat/book.hpp"

namespace lobfeat {

/// Log-price path on [0, horizon] with n equal steps:
///   X_i = X_{i-1} - sigma^2 dt / 2 + sigma sqrt(dt) Z_i  (+ planted jumps)
/// observed_i = X_i + noise_i, noise iid N(0, noise_sd^2).
struct PathSpec {
  std::size_t n = 100000;
  double sigma = 0.2;
  double horizon = 1.0;
  std::size_t jumps = 0;
  double jump_size = 5.0;  // in units of sigma * sqrt(dt); sign drawn at random
  double noise_sd = 0.0;
  double x0 = 0.0;
  void validate() const;
};

struct SimulatedPath {
  std::vector<double> efficient;  // n + 1 log prices
  std::vector<double> observed;   // n + 1 log prices
  std::vector<std::size_t> jump_steps;
  std::vector<double> jump_sizes;
  double integrated_variance = 0.0;  // sigma^2 * horizon
  double jump_variation = 0.0;       // sum of squared jumps
};

SimulatedPath simulate_path(const PathSpec& spec, std::uint64_t seed);

/// Standard normal draws by Box-Muller on a 53-bit uniform, so paths are
/// identical across standard libraries.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed);
  double operator()();
  double uniform();  // [0, 1)

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t next();
};

enum class SynthMode {
  Diffusion,     // mid follows a rounded simulated path
  LinearSignal,  // next mid direction is a linear rule on volume imbalance and duration
};

struct SynthSpec {
  SynthMode mode = SynthMode::Diffusion;
  std::size_t days = 10;
  std::size_t steps = 20000;     // path steps (diffusion) or mid moves (linear signal)
  PathSpec path;                 // path.n is overwritten with `steps`
  double mean_gap_ms = 100.0;    // diffusion: exponential inter-step gap
  std::int64_t price = 100000;   // initial mid, price units
  std::int64_t tick = 100;
  std::int64_t base_volume = 10000;
  std::size_t fillers = 2;       // linear signal: cancel/resubmit pairs per interval
  std::int64_t session_open = 34200000;  // ms after midnight
  void validate() const;
};

struct SynthDayTruth {
  std::string day;
  std::size_t events = 0;
  double integrated_variance = 0.0;
  double jump_variation = 0.0;
  double noise_variance = 0.0;
  // Diffusion: per path step, last event index and the target log mids.
  std::vector<std::size_t> step_event;
  std::vector<double> efficient;
  std::vector<double> observed;
};

struct SynthDay {
  std::vector<MessageEvent> events;
  SynthDayTruth truth;
};

/// One instrument-day of messages. Seeded per day so each day is
/// reproducible alone.
SynthDay generate_day(const SynthSpec& spec, std::size_t day, std::uint64_t seed);

/// Writes day_NNN.csv message files, day_NNN_truth.csv path files
/// (diffusion) and truth.json into `dir`. Returns the message file paths.
std::vector<std::filesystem::path> generate_synthetic(const SynthSpec& spec, std::uint64_t seed,
                                                      const std::filesystem::path& dir);

std::string to_string(SynthMode m);
SynthMode synth_mode_from(const std::string& s);

}  // namespace lobfeat
