#include "tmee/quantile.hpp"

#include <algorithm>
#include <cmath>

#include "tmee/error.hpp"

namespace tmee {

namespace {

const double kLn3 = std::log(3.0);

double logistic(double alpha, double e) { return 1.0 / (1.0 + std::exp(-alpha * e)); }

}  // namespace

void CompressorParams::validate() const {
  if (!(alpha_low > 0.0) || !(alpha_high > 0.0) || !std::isfinite(alpha_low) ||
      !std::isfinite(alpha_high)) {
    throw DomainError("compressor slopes must be positive and finite");
  }
}

double compress(double e, const CompressorParams& params) {
  return logistic(e < 0.0 ? params.alpha_low : params.alpha_high, e);
}

double decompress(double c, const CompressorParams& params) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("compressed value must lie in (0, 1)");
  const double alpha = c < 0.5 ? params.alpha_low : params.alpha_high;
  return -std::log(1.0 / c - 1.0) / alpha;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty range");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Quartiles exact_quartiles(std::span<const double> samples) {
  if (samples.size() < 4) throw DomainError("exact quartiles need at least 4 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return {sorted_quantile(sorted, 0.25), sorted_quantile(sorted, 0.75)};
}

CompressorParams calibrate(double q1, double q3) {
  if (!(q1 < 0.0) || !(q3 > 0.0)) {
    throw CalibrationError("compressor calibration needs q1 < 0 < q3");
  }
  return {-kLn3 / q1, kLn3 / q3};
}

QuantizerStep choose_step(const CompressorParams& params, double epsilon,
                          std::size_t m) {
  params.validate();
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (m < 4) throw DomainError("warm-up length must be at least 4");
  const double above = logistic(params.alpha_high, epsilon) - 0.5;
  const double below = 0.5 - 1.0 / (1.0 + std::exp(params.alpha_low * epsilon));
  const double delta = std::min({1.0 / static_cast<double>(m), above, below});
  if (!(delta > 0.0)) throw DomainError("quantizer step underflowed to zero");
  return {delta, static_cast<std::size_t>(std::ceil(1.0 / delta))};
}

FenceBounds fences(double q1, double q3) {
  if (q1 > q3) throw DomainError("fences need q1 <= q3");
  const double iqr = q3 - q1;
  return {q1 - 3.0 * iqr, q3 + 3.0 * iqr};
}

bool is_outlier(double e, const FenceBounds& bounds) {
  return e < bounds.lower_extreme || e > bounds.upper_extreme;
}

void QuartileTrackerConfig::validate() const {
  if (m < 4) throw DomainError("quantile warm-up m must be at least 4");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("quantile epsilon must be positive");
  }
  if (!(beta > 0.0 && beta < 0.2)) throw DomainError("quantile beta must lie in (0, 0.2)");
}

QuartileTracker::QuartileTracker(QuartileTrackerConfig config) : config_(config) {
  config_.validate();
  warmup_.reserve(config_.m);
}

FenceBounds QuartileTracker::current_fences() const {
  if (!has_quartiles_) return FenceBounds::unbounded();
  return fences(q1_, q3_);
}

double QuartileTracker::reconstruct(std::size_t index) const {
  double c = delta_ * static_cast<double>(index - 1);
  if (index <= 1) c = 0.5 * delta_;
  if (c >= 1.0) c = 1.0 - 0.5 * delta_;
  return center_ + decompress(c, params_);
}

void QuartileTracker::reset_counters() {
  for (std::size_t k = 0; k < counters_.size(); ++k) {
    counters_[k] = static_cast<std::int64_t>(k + 1);
  }
  num_samples_ = static_cast<std::int64_t>(counters_.size());
}

void QuartileTracker::finish_warmup() {
  std::vector<double> sorted = warmup_;
  std::sort(sorted.begin(), sorted.end());
  const Quartiles q{sorted_quantile(sorted, 0.25), sorted_quantile(sorted, 0.75)};
  q1_ = q.q1;
  q3_ = q.q3;

  if (q.q1 < 0.0 && q.q3 > 0.0) {
    params_ = calibrate(q.q1, q.q3);
  } else {
    // Quartiles on one side of the origin: calibrate around the median. A
    // side with zero spread falls back to the epsilon scale.
    center_ = sorted_quantile(sorted, 0.5);
    median_fallback_ = true;
    const double lo = q.q1 - center_;
    const double hi = q.q3 - center_;
    params_.alpha_low = lo < 0.0 ? -kLn3 / lo : kLn3 / config_.epsilon;
    params_.alpha_high = hi > 0.0 ? kLn3 / hi : kLn3 / config_.epsilon;
  }

  const QuantizerStep step = choose_step(params_, config_.epsilon, config_.m);
  delta_ = step.delta;
  counters_.assign(step.num_levels, 0);
  reset_counters();

  const auto levels = counters_.size();
  mid_index_ = static_cast<std::size_t>(std::floor(0.5 / delta_));
  const auto offset = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config_.beta * static_cast<double>(levels))));
  recal_low_ = mid_index_ > offset ? mid_index_ - offset : 1;
  recal_high_ = std::min(mid_index_ + offset, levels);
  calibrated_ = true;
}

ObserveOutcome QuartileTracker::observe(double e) {
  if (!std::isfinite(e)) throw InputError("quartile tracker received a non-finite error sample");
  ++samples_seen_;

  if (!calibrated_) {
    warmup_.push_back(e);
    if (warmup_.size() >= 4) {
      const Quartiles q = exact_quartiles(warmup_);
      q1_ = q.q1;
      q3_ = q.q3;
      has_quartiles_ = true;
    }
    if (warmup_.size() == config_.m) finish_warmup();
    return {};
  }

  const auto levels = counters_.size();
  const double c = compress(e - center_, params_);
  const auto bin = std::min(static_cast<std::size_t>(std::floor(c / delta_)), levels - 1);
  for (std::size_t k = bin; k < levels; ++k) ++counters_[k];
  ++num_samples_;

  // Cumulative counters are monotone, so both searches are partition points.
  // Integer comparisons: Bin <= 0.25 <=> 4 counter <= NES.
  const std::int64_t nes = num_samples_;
  const auto first_above_q1 = std::partition_point(
      counters_.begin(), counters_.end(), [nes](std::int64_t c) { return 4 * c <= nes; });
  const auto i1 = static_cast<std::size_t>(first_above_q1 - counters_.begin());
  const auto at_q3 = std::partition_point(
      counters_.begin(), counters_.end(), [nes](std::int64_t c) { return 4 * c < 3 * nes; });
  const auto i3 = static_cast<std::size_t>(at_q3 - counters_.begin()) + 1;

  ObserveOutcome out;
  if (i1 >= 1) {
    q1_ = reconstruct(i1);
  } else {
    out.q1_held = true;
  }
  if (i3 <= levels) {
    q3_ = reconstruct(i3);
  } else {
    out.q3_held = true;
  }
  q1_ = std::min(q1_, q3_);

  if ((i1 >= 1 && i1 == recal_low_) || (i3 <= levels && i3 == recal_high_)) {
    const double lo = q1_ - center_;
    const double hi = q3_ - center_;
    if (lo < 0.0) params_.alpha_low = -kLn3 / lo;
    if (hi > 0.0) params_.alpha_high = kLn3 / hi;
    reset_counters();
    ++recalibrations_;
    out.recalibrated = true;
  }
  return out;
}

}  // namespace tmee
