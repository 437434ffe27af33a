#pragma once

// Running first/third quartile estimation by non-uniform quantization.
//
// Errors are mapped into (0, 1) by a two-sided logistic compressor, counted
// in cumulative bins of width `delta` on the compressed axis, and the
// quartiles are read back from the bin counters. The first `m` samples are
// stored and sorted to calibrate the compressor; after that only the
// counters are kept.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tmee {

/// Logistic slopes of the compressor below (alpha_low) and above
/// (alpha_high) the origin. Both strictly positive.
struct CompressorParams {
  double alpha_low = 1.0;
  double alpha_high = 1.0;

  void validate() const;
};

/// C(e) = 1 / (1 + exp(-alpha e)), alpha taken from the side of e.
/// C(0) = 0.5; strictly increasing; saturates towards 0 and 1.
double compress(double e, const CompressorParams& params);

/// Inverse of `compress` for c in (0, 1).
double decompress(double c, const CompressorParams& params);

struct Quartiles {
  double q1;
  double q3;
};

/// 25th and 75th percentiles of `samples` with linear interpolation between
/// order statistics at zero-based position p (n - 1). Needs >= 4 samples.
Quartiles exact_quartiles(std::span<const double> samples);

/// Interpolated p-quantile of an already sorted, non-empty range.
double sorted_quantile(std::span<const double> sorted, double p);

/// Slopes that send q1 to 0.25 and q3 to 0.75. Throws CalibrationError unless
/// q1 < 0 < q3.
CompressorParams calibrate(double q1, double q3);

struct QuantizerStep {
  double delta;
  std::size_t num_levels;
};

/// Quantization step min{1/m, C(eps) - 0.5, 0.5 - C(-eps)} and the bin count
/// ceil(1/delta).
QuantizerStep choose_step(const CompressorParams& params, double epsilon,
                          std::size_t m);

/// Tukey outer fences.
struct FenceBounds {
  double lower_extreme = -std::numeric_limits<double>::infinity();
  double upper_extreme = std::numeric_limits<double>::infinity();

  static FenceBounds unbounded() { return {}; }
};

/// (q1 - 3 IQR, q3 + 3 IQR). Throws DomainError if q1 > q3.
FenceBounds fences(double q1, double q3);

/// Strictly outside the fences; values on a fence are not outliers.
bool is_outlier(double e, const FenceBounds& bounds);

struct QuartileTrackerConfig {
  std::size_t m = 100;     // warm-up length
  double epsilon = 0.01;   // max quantization error near the origin
  double beta = 0.1;       // recalibration offset, in (0, 0.2)

  void validate() const;
};

struct ObserveOutcome {
  bool recalibrated = false;
  // First-quartile or third-quartile bin search found no qualifying bin and
  // the previous value was kept.
  bool q1_held = false;
  bool q3_held = false;
};

class QuartileTracker {
 public:
  explicit QuartileTracker(QuartileTrackerConfig config = {});

  /// Feeds one raw error sample. Throws InputError on a non-finite value and
  /// leaves the tracker untouched.
  ObserveOutcome observe(double e);

  /// Quartiles are available once 4 samples have been seen.
  bool has_quartiles() const noexcept { return has_quartiles_; }
  /// True once the m-th sample has calibrated the quantizer.
  bool calibrated() const noexcept { return calibrated_; }

  double q1() const noexcept { return q1_; }
  double q3() const noexcept { return q3_; }

  /// Outer fences of the current quartiles; unbounded before any quartiles
  /// exist.
  FenceBounds current_fences() const;

  const QuartileTrackerConfig& config() const noexcept { return config_; }
  const CompressorParams& params() const noexcept { return params_; }
  double delta() const noexcept { return delta_; }
  std::size_t num_levels() const noexcept { return counters_.size(); }
  /// counters()[k] counts samples in bin k + 1 and every bin below it.
  std::span<const std::int64_t> counters() const noexcept { return counters_; }
  std::int64_t num_samples() const noexcept { return num_samples_; }
  std::size_t recal_low() const noexcept { return recal_low_; }
  std::size_t recal_high() const noexcept { return recal_high_; }
  std::size_t samples_seen() const noexcept { return samples_seen_; }
  std::size_t recalibrations() const noexcept { return recalibrations_; }

  /// Offset subtracted before compression; non-zero only when the warm-up
  /// quartiles did not straddle the origin and the median was used instead.
  double center() const noexcept { return center_; }
  bool used_median_fallback() const noexcept { return median_fallback_; }

  std::span<const double> warmup_buffer() const noexcept { return warmup_; }

  /// Error value at the lower edge of 1-based bin `index`, guarded so the
  /// compressed coordinate stays inside (0, 1).
  double reconstruct(std::size_t index) const;

 private:
  void finish_warmup();
  void reset_counters();

  QuartileTrackerConfig config_;
  CompressorParams params_;
  double delta_ = 0.0;
  std::vector<std::int64_t> counters_;
  std::int64_t num_samples_ = 0;
  std::size_t recal_low_ = 0;
  std::size_t recal_high_ = 0;
  std::size_t mid_index_ = 0;
  double q1_ = 0.0;
  double q3_ = 0.0;
  double center_ = 0.0;
  bool median_fallback_ = false;
  bool has_quartiles_ = false;
  bool calibrated_ = false;
  std::vector<double> warmup_;
  std::size_t samples_seen_ = 0;
  std::size_t recalibrations_ = 0;
};

}  // namespace tmee
