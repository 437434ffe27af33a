#include "tmee/noise.hpp"

#include <cmath>

#include "tmee/error.hpp"

namespace tmee {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, SeedPurpose purpose) {
  return splitmix64(splitmix64(splitmix64(base) ^ trial) ^
                    static_cast<std::uint64_t>(purpose));
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  return u * scale;
}

double Rng::exponential(double lambda) { return -std::log1p(-uniform()) / lambda; }

void validate(const NoiseSpec& spec) {
  std::visit(Overloaded{
                 [](const GaussianNoise& g) {
                   if (!(g.variance >= 0.0) || !std::isfinite(g.variance) ||
                       !std::isfinite(g.mean)) {
                     throw DomainError("gaussian noise needs a finite mean and variance >= 0");
                   }
                 },
                 [](const ExponentialNoise& e) {
                   if (!(e.lambda > 0.0) || !std::isfinite(e.lambda)) {
                     throw DomainError("exponential noise needs lambda > 0");
                   }
                 },
                 [](const MixtureNoise& m) {
                   if (m.components.empty()) throw DomainError("mixture needs at least one component");
                   double total = 0.0;
                   for (const auto& c : m.components) {
                     if (!(c.weight > 0.0)) throw DomainError("mixture weights must be positive");
                     if (!(c.variance >= 0.0) || !std::isfinite(c.variance) ||
                         !std::isfinite(c.mean)) {
                       throw DomainError("mixture components need finite mean and variance >= 0");
                     }
                     total += c.weight;
                   }
                   if (std::abs(total - 1.0) > 1e-12) {
                     throw DomainError("mixture weights must sum to 1");
                   }
                 },
             },
             spec);
}

double draw_noise(const NoiseSpec& spec, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const GaussianNoise& g) { return g.mean + std::sqrt(g.variance) * rng.normal(); },
          [&](const ExponentialNoise& e) { return rng.exponential(e.lambda); },
          [&](const MixtureNoise& m) {
            const double u = rng.uniform();
            double cumulative = 0.0;
            const MixtureComponent* pick = &m.components.back();
            for (const auto& c : m.components) {
              cumulative += c.weight;
              if (u < cumulative) {
                pick = &c;
                break;
              }
            }
            return pick->mean + std::sqrt(pick->variance) * rng.normal();
          },
      },
      spec);
}

double lambda_from_snr(double snr_db, double signal_power) {
  if (!(signal_power > 0.0)) throw DomainError("signal power must be positive");
  return std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0) / signal_power);
}

Vector<double> random_unit_vector(std::size_t length, std::uint64_t seed) {
  if (length == 0) throw DomainError("vector length must be positive");
  Rng rng(seed);
  Vector<double> w(static_cast<Eigen::Index>(length));
  do {
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
  } while (w.norm() == 0.0);
  w.normalize();
  return w;
}

void StreamSpec::validate() const {
  if (w_opt.size() == 0) throw DomainError("target weights must be non-empty");
  if (std::abs(w_opt.norm() - 1.0) > 1e-12) throw DomainError("target weights must have unit norm");
  tmee::validate(noise);
}

std::vector<StreamSample<double>> generate_stream(const StreamSpec& spec, std::size_t n) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<StreamSample<double>> out;
  out.reserve(n);
  const Eigen::Index dim = spec.w_opt.size();
  for (std::size_t k = 0; k < n; ++k) {
    StreamSample<double> s{Vector<double>(dim), 0.0};
    for (Eigen::Index i = 0; i < dim; ++i) s.x(i) = rng.normal();
    s.d = s.x.dot(spec.w_opt) + draw_noise(spec.noise, rng);
    out.push_back(std::move(s));
  }
  return out;
}

RunningMeans trimmed_running_means(std::span<const double> values,
                                   const QuartileTrackerConfig& config,
                                   const TrackerObserver& observer) {
  QuartileTracker tracker(config);
  RunningMeans out;
  out.values.assign(values.begin(), values.end());
  out.flagged.reserve(values.size());
  out.plain.reserve(values.size());
  out.trimmed.reserve(values.size());

  double plain = 0.0;
  double trimmed = 0.0;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    const ObserveOutcome outcome = tracker.observe(v);
    if (observer) observer(k, tracker, outcome);
    const bool outlier = is_outlier(v, tracker.current_fences());
    plain += (v - plain) / static_cast<double>(k + 1);
    if (!outlier) {
      ++kept;
      trimmed += (v - trimmed) / static_cast<double>(kept);
    }
    out.flagged.push_back(outlier ? 1 : 0);
    out.plain.push_back(plain);
    out.trimmed.push_back(trimmed);
  }
  return out;
}

RunningMeans trimmed_running_mean_demo(const NoiseSpec& spec, std::size_t n,
                                       std::uint64_t seed,
                                       const QuartileTrackerConfig& config,
                                       const TrackerObserver& observer) {
  validate(spec);
  if (n < config.m) throw DomainError("demo length must cover the quantile warm-up");
  Rng rng(seed);
  std::vector<double> values(n);
  for (auto& v : values) v = draw_noise(spec, rng);
  return trimmed_running_means(values, config, observer);
}

}  // namespace tmee
