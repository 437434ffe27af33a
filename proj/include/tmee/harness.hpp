#pragma once

// Monte-Carlo experiment engine: learning curves, steady state, convergence
// iteration, testing MAE, and (mu, sigma) sweeps.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tmee/learners.hpp"
#include "tmee/noise.hpp"

namespace tmee {

/// Misalignment reported when ||w - w_opt|| < 1e-12.
inline constexpr double kMisalignmentFloorDb = -240.0;

/// 20 log10 ||w - w_opt|| for unit-norm w_opt, floored at -240 dB.
double misalignment(const Vector<double>& w, const Vector<double>& w_opt);

/// Smallest index n with curve[n] <= steady_state_db + 2.
std::optional<std::size_t> convergence_iteration(std::span<const double> curve,
                                                 double steady_state_db);

/// Mean of the last `tail_window` entries.
double steady_state(std::span<const double> curve, std::size_t tail_window);

struct TrialConfig {
  Algorithm algorithm = Algorithm::Mee;
  LearnerConfig learner;
  std::size_t filter_length = 5;
  NoiseSpec noise = GaussianNoise{0.0, 1e-3};
  std::size_t iterations = 2000;
  std::size_t test_samples = 2000;
  std::size_t tail_window = 200;

  void validate() const;
};

struct LearningCurve {
  std::vector<double> misalignment_db;
  double steady_state_db = 0.0;
  std::optional<std::size_t> convergence_iteration;
};

struct TrialDiagnostics {
  std::size_t outlier_steps = 0;
  std::size_t empty_mask_steps = 0;
  std::size_t recalibrations = 0;
  bool median_fallback = false;
};

struct TrialResult {
  LearningCurve curve;
  std::optional<double> mae;
  bool diverged = false;
  TrialDiagnostics diagnostics;
  Vector<double> final_weights;
  double final_bias = 0.0;
};

/// One trial. Target weights, training stream and test stream come from
/// independent sub-seeds of (base_seed, trial_index), so every algorithm run
/// with the same pair sees the same data.
TrialResult run_trial(const TrialConfig& config, std::uint64_t base_seed,
                      std::size_t trial_index);

struct Aggregate {
  LearningCurve mean_curve;
  std::optional<double> mae_mean;
  /// Standard deviation of per-trial MAEs (n - 1 denominator; 0 for one trial).
  std::optional<double> mae_std;
  std::size_t trials = 0;
  std::size_t used = 0;
  std::size_t diverged = 0;
  TrialDiagnostics diagnostics;  // summed over used trials
};

/// Runs `trials` trials on up to `workers` threads (0 = hardware concurrency)
/// and reduces in trial order. Throws NumericError when every trial diverged.
Aggregate monte_carlo(const TrialConfig& config, std::size_t trials,
                      std::uint64_t base_seed, std::size_t workers = 0);

struct SweepPoint {
  double mu = 0.0;
  double sigma = 0.0;
  double steady_state_db = 0.0;
  std::optional<std::size_t> convergence_iteration;
  bool diverged = false;
};

/// One monte_carlo per (mu, sigma) cell, in grid order. A cell whose trials
/// all diverged is returned flagged instead of throwing.
std::vector<SweepPoint> sweep(const std::vector<std::pair<double, double>>& grid,
                              const TrialConfig& config, std::size_t trials,
                              std::uint64_t base_seed, std::size_t workers = 0);

}  // namespace tmee
