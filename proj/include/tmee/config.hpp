#pragma once

// Experiment configuration files (JSON).
//
// Top-level keys, all optional unless a command needs them:
//
//   seed         unsigned 64-bit base seed (default 0)
//   workers      worker threads, 0 = one per logical core (default 0)
//   output_dir   output directory, relative to the working directory
//   algorithms   ["LMS" | "MCC" | "MEE" | "MEEF" | "TRIMMED_MEE", ...]
//   learner      {mu, sigma, window, fiducial, gradient_form}
//   quantile     {m, epsilon, beta}
//   stream       {filter_length, noise}
//   trial        {iterations, test_samples, tail_window, trials}
//   sweep        {mu, sigma}: each an array or {start, stop, step}
//   demo         {samples} or {error_stream: path of one value per line,
//                 relative to the config file}
//
// noise is one of
//   {"kind": "gaussian", "mean": m, "variance": v}
//   {"kind": "gaussian", "mean": m, "snr_db": s}      variance = 10^(-s/10)
//   {"kind": "exponential", "lambda": l}
//   {"kind": "exponential", "snr_db": s}              unit signal power
//   {"kind": "mixture", "components": [{"weight", "mean", "variance"}, ...]}
//
// Unknown keys are rejected. Errors carry the offending key and, where it can
// be located, its line in the file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmee/harness.hpp"
#include "tmee/learners.hpp"
#include "tmee/noise.hpp"

namespace tmee {

struct SweepGrid {
  std::vector<double> mu;
  std::vector<double> sigma;

  /// mu-major list of (mu, sigma) cells.
  std::vector<std::pair<double, double>> cells() const;
};

struct DemoConfig {
  std::size_t samples = 10000;
  std::optional<std::filesystem::path> error_stream;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::filesystem::path output_dir = ".";
  std::vector<Algorithm> algorithms{Algorithm::Mee, Algorithm::Meef, Algorithm::TrimmedMee};
  LearnerConfig learner;
  std::size_t filter_length = 5;
  NoiseSpec noise = GaussianNoise{0.0, 1e-3};
  std::size_t iterations = 2000;
  std::size_t test_samples = 2000;
  std::size_t tail_window = 200;
  std::size_t trials = 200;
  std::optional<SweepGrid> sweep;
  std::optional<DemoConfig> demo;

  TrialConfig trial_for(Algorithm algo) const;
};

/// Parses and validates a config document. `base_dir` resolves relative
/// paths inside it. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = ".");

/// Reads and parses a config file. Throws ConfigError, also when the file
/// cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace tmee
