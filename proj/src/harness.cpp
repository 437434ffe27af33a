#include "tmee/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "tmee/error.hpp"

namespace tmee {

double misalignment(const Vector<double>& w, const Vector<double>& w_opt) {
  if (w.size() != w_opt.size()) throw DomainError("weight dimensions differ");
  const double dev = (w - w_opt).stableNorm();
  if (dev < 1e-12) return kMisalignmentFloorDb;
  return 20.0 * std::log10(dev);
}

std::optional<std::size_t> convergence_iteration(std::span<const double> curve,
                                                 double steady_state_db) {
  if (curve.empty()) throw DomainError("learning curve must be non-empty");
  for (std::size_t n = 0; n < curve.size(); ++n) {
    if (curve[n] <= steady_state_db + 2.0) return n;
  }
  return std::nullopt;
}

double steady_state(std::span<const double> curve, std::size_t tail_window) {
  if (tail_window == 0 || tail_window > curve.size()) {
    throw DomainError("tail window must be within the curve length");
  }
  const auto tail = curve.last(tail_window);
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail_window);
}

void TrialConfig::validate() const {
  learner.validate();
  tmee::validate(noise);
  if (filter_length == 0) throw DomainError("filter length must be positive");
  if (tail_window == 0) throw DomainError("tail window must be positive");
  if (iterations <= tail_window) throw DomainError("iterations must exceed the tail window");
}

TrialResult run_trial(const TrialConfig& config, std::uint64_t base_seed,
                      std::size_t trial_index) {
  config.validate();
  const Vector<double> w_opt = random_unit_vector(
      config.filter_length, derive_seed(base_seed, trial_index, SeedPurpose::TargetWeights));
  const StreamSpec train{w_opt, config.noise,
                         derive_seed(base_seed, trial_index, SeedPurpose::Training)};
  const auto samples = generate_stream(train, config.iterations);

  OnlineLearner<double> learner(config.algorithm, config.learner, w_opt.size());
  TrialResult result;
  result.curve.misalignment_db.reserve(config.iterations);
  for (const auto& s : samples) {
    StepOutcome<double> outcome{};
    try {
      outcome = learner.step(s);
    } catch (const InputError&) {
      // Overflowed weights produce a non-finite error before they turn NaN.
      result.diverged = true;
      break;
    }
    result.diagnostics.outlier_steps += outcome.was_outlier ? 1 : 0;
    result.diagnostics.empty_mask_steps += outcome.empty_mask ? 1 : 0;
    if (!learner.weights().allFinite() || !std::isfinite(learner.bias())) {
      result.diverged = true;
      break;
    }
    result.curve.misalignment_db.push_back(misalignment(learner.weights(), w_opt));
  }
  if (const auto& q = learner.quantizer()) {
    result.diagnostics.recalibrations = q->recalibrations();
    result.diagnostics.median_fallback = q->used_median_fallback();
  }
  result.final_weights = learner.weights();
  result.final_bias = learner.bias();
  if (result.diverged) return result;

  const auto& curve = result.curve.misalignment_db;
  result.curve.steady_state_db = steady_state(curve, config.tail_window);
  result.curve.convergence_iteration = convergence_iteration(curve, result.curve.steady_state_db);

  if (config.test_samples > 0) {
    const StreamSpec test{w_opt, config.noise,
                          derive_seed(base_seed, trial_index, SeedPurpose::Testing)};
    double total = 0.0;
    for (const auto& s : generate_stream(test, config.test_samples)) {
      total += std::abs(s.d - learner.predict(s.x));
    }
    result.mae = total / static_cast<double>(config.test_samples);
  }
  return result;
}

namespace {

std::size_t resolve_workers(std::size_t workers, std::size_t jobs) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(workers, jobs));
}

}  // namespace

Aggregate monte_carlo(const TrialConfig& config, std::size_t trials,
                      std::uint64_t base_seed, std::size_t workers) {
  if (trials == 0) throw DomainError("monte carlo needs at least one trial");
  config.validate();

  std::vector<TrialResult> results(trials);
  std::vector<std::exception_ptr> failures(trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      try {
        results[t] = run_trial(config, base_seed, t);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    }
  };
  const std::size_t threads = resolve_workers(workers, trials);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  Aggregate agg;
  agg.trials = trials;
  std::vector<double> sum(config.iterations, 0.0);
  std::vector<double> maes;
  for (const auto& r : results) {
    if (r.diverged) {
      ++agg.diverged;
      continue;
    }
    ++agg.used;
    for (std::size_t n = 0; n < sum.size(); ++n) sum[n] += r.curve.misalignment_db[n];
    if (r.mae) maes.push_back(*r.mae);
    agg.diagnostics.outlier_steps += r.diagnostics.outlier_steps;
    agg.diagnostics.empty_mask_steps += r.diagnostics.empty_mask_steps;
    agg.diagnostics.recalibrations += r.diagnostics.recalibrations;
    agg.diagnostics.median_fallback |= r.diagnostics.median_fallback;
  }
  if (agg.used == 0) throw NumericError("every monte carlo trial diverged");

  for (auto& v : sum) v /= static_cast<double>(agg.used);
  agg.mean_curve.misalignment_db = std::move(sum);
  agg.mean_curve.steady_state_db = steady_state(agg.mean_curve.misalignment_db, config.tail_window);
  agg.mean_curve.convergence_iteration =
      convergence_iteration(agg.mean_curve.misalignment_db, agg.mean_curve.steady_state_db);

  if (!maes.empty()) {
    const double n = static_cast<double>(maes.size());
    const double mean = std::accumulate(maes.begin(), maes.end(), 0.0) / n;
    double ss = 0.0;
    for (double m : maes) ss += (m - mean) * (m - mean);
    agg.mae_mean = mean;
    agg.mae_std = maes.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return agg;
}

std::vector<SweepPoint> sweep(const std::vector<std::pair<double, double>>& grid,
                              const TrialConfig& config, std::size_t trials,
                              std::uint64_t base_seed, std::size_t workers) {
  if (grid.empty()) throw DomainError("sweep grid must be non-empty");
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  for (const auto& [mu, sigma] : grid) {
    TrialConfig cell = config;
    cell.learner.mu = mu;
    cell.learner.sigma = sigma;
    SweepPoint point{mu, sigma, 0.0, std::nullopt, false};
    try {
      const Aggregate agg = monte_carlo(cell, trials, base_seed, workers);
      point.steady_state_db = agg.mean_curve.steady_state_db;
      point.convergence_iteration = agg.mean_curve.convergence_iteration;
    } catch (const NumericError&) {
      point.steady_state_db = std::numeric_limits<double>::quiet_NaN();
      point.diverged = true;
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace tmee
