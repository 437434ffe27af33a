#pragma once

// Seeded noise models and synthetic system-identification streams.
//
// Gaussian parameters are (mean, variance) everywhere. Random variates are
// produced from std::mt19937_64 with explicit transforms (polar method,
// inverse CDF) so streams are identical across standard libraries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "tmee/learners.hpp"
#include "tmee/quantile.hpp"

namespace tmee {

/// Independent sub-streams of one experiment seed.
enum class SeedPurpose : std::uint64_t {
  TargetWeights = 1,
  Training = 2,
  Testing = 3,
  Demo = 4,
};

/// SplitMix64-mixed seed for (base, trial, purpose).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, SeedPurpose purpose);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  double exponential(double lambda);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct GaussianNoise {
  double mean = 0.0;
  double variance = 0.0;
};

struct ExponentialNoise {
  double lambda = 1.0;
};

struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

struct MixtureNoise {
  std::vector<MixtureComponent> components;
};

using NoiseSpec = std::variant<GaussianNoise, ExponentialNoise, MixtureNoise>;

/// Throws DomainError on negative variances, lambda <= 0, or mixture weights
/// that are not positive or do not sum to 1 within 1e-12.
void validate(const NoiseSpec& spec);

double draw_noise(const NoiseSpec& spec, Rng& rng);

/// Rate of exponential noise with second moment 2 / lambda^2 giving the
/// requested SNR: sqrt(2 * 10^(snr/10) / signal_power).
double lambda_from_snr(double snr_db, double signal_power);

/// L i.i.d. standard normals, normalized.
Vector<double> random_unit_vector(std::size_t length, std::uint64_t seed);

struct StreamSpec {
  Vector<double> w_opt;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  /// Throws DomainError unless ||w_opt|| = 1 within 1e-12 and the noise is valid.
  void validate() const;
};

/// d_n = x_n^T w_opt + nu_n with x_n ~ N(0, I). Per sample, the L input
/// entries are drawn before the noise value.
std::vector<StreamSample<double>> generate_stream(const StreamSpec& spec, std::size_t n);

/// Per-step running means of a raw sequence with and without the samples
/// flagged by the quartile fences.
struct RunningMeans {
  std::vector<double> values;
  std::vector<char> flagged;
  std::vector<double> plain;
  std::vector<double> trimmed;
};

/// Called after each sample with its zero-based index, the tracker state
/// and the observe outcome.
using TrackerObserver =
    std::function<void(std::size_t, const QuartileTracker&, const ObserveOutcome&)>;

/// Fence flags use the quartiles after the current sample has been observed.
/// Before any sample survives the fences the trimmed mean is reported as 0.
RunningMeans trimmed_running_means(std::span<const double> values,
                                   const QuartileTrackerConfig& config = {},
                                   const TrackerObserver& observer = {});

/// trimmed_running_means over n draws of `spec`. Needs n >= config.m.
RunningMeans trimmed_running_mean_demo(const NoiseSpec& spec, std::size_t n,
                                       std::uint64_t seed,
                                       const QuartileTrackerConfig& config = {},
                                       const TrackerObserver& observer = {});

}  // namespace tmee
