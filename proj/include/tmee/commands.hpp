#pragma once

// Subcommands behind the tmee executable. Each reads a config file, writes
// its CSV/JSON outputs into the output directory and returns an exit code:
// 0 success, 1 I/O failure, 2 config error, 3 numeric failure.
//
// Output schemas (floats with 9 significant digits):
//
//   curves.csv     iteration,<ALGO>,...      iteration is 1-based
//   summary.json   {seed, trials, results: [{algorithm, steady_state_db,
//                   convergence_iteration, mae_mean, mae_std, trials_used,
//                   diverged, diagnostics}]}
//   sweep.csv      mu,sigma,algorithm,steady_state_db,convergence_iteration,diverged
//   quartiles.csv  step,q1,q3,exact_q1,exact_q3,lower_extreme,upper_extreme,recalibrated
//   outliers.csv   step,value,flagged
//   means.csv      step,plain_mean,trimmed_mean
//
// Steps and iterations are 1-based. convergence_iteration is empty (CSV) or
// null (JSON) when the curve never reaches steady state + 2 dB. Quartile
// cells are empty before they are defined.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace tmee {

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> workers;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int io_failure = 1;
inline constexpr int config_error = 2;
inline constexpr int numeric_failure = 3;
}  // namespace exit_code

/// Monte-Carlo learning curves for every configured algorithm.
int cmd_run(const CommandOptions& options, std::ostream& log, std::ostream& err);

/// Steady state and convergence over the configured (mu, sigma) grid.
int cmd_sweep(const CommandOptions& options, std::ostream& log, std::ostream& err);

/// Quartile tracking, fence flags and running means on one error stream.
int cmd_quantile_demo(const CommandOptions& options, std::ostream& log, std::ostream& err);

}  // namespace tmee
