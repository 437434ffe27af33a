#pragma once

// Online linear-regression learners sharing one step interface.
//
// All entropy and correntropy criteria are maximized by stochastic gradient
// ascent, w += mu * g; the LMS gradient is signed so the same update applies.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmee/error.hpp"
#include "tmee/kernel.hpp"
#include "tmee/quantile.hpp"

namespace tmee {

enum class Algorithm { Lms, Mcc, Mee, Meef, TrimmedMee };

enum class GradientForm { StochasticSingleSum, BatchDoubleSum };

std::string_view to_string(Algorithm algo);
std::string_view to_string(GradientForm form);
/// Accepts the names produced by to_string (upper-case, e.g. "TRIMMED_MEE").
std::optional<Algorithm> parse_algorithm(std::string_view name);
std::optional<GradientForm> parse_gradient_form(std::string_view name);

/// Single-sum for MEE/MEEF, double-sum for Trimmed MEE.
GradientForm default_gradient_form(Algorithm algo);

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct StreamSample {
  Vector<Scalar> x;
  Scalar d;
};

struct LearnerConfig {
  double mu = 0.05;
  double sigma = 1.0;
  std::size_t window = 10;
  std::size_t fiducial = 1;
  /// Empty means default_gradient_form for the algorithm.
  std::optional<GradientForm> gradient_form;
  QuartileTrackerConfig quantile;
  /// Replaces the tracked fences of Trimmed MEE (the tracker still runs).
  std::optional<FenceBounds> fence_override;

  void validate() const;
};

/// Windowed errors and regressors, newest first: column k of `inputs` pairs
/// with `errors(k)`.
template <typename Scalar>
struct WindowErrors {
  Vector<Scalar> errors;
  Matrix<Scalar> inputs;
};

/// Gradient plus the number of window entries that passed the fence mask.
template <typename Scalar>
struct MaskedGradient {
  Vector<Scalar> g;
  std::size_t active = 0;
};

namespace detail {

inline bool passes(double e, const std::optional<FenceBounds>& mask) {
  return !mask || !is_outlier(e, *mask);
}

}  // namespace detail

/// Ascent direction of G_sigma(d - w^T x) with respect to w:
/// G_sigma(e) e / sigma^2 * x.
template <typename Derived>
Vector<typename Derived::Scalar> mcc_gradient(typename Derived::Scalar e,
                                              const Eigen::MatrixBase<Derived>& x,
                                              Bandwidth<typename Derived::Scalar> sigma) {
  using Scalar = typename Derived::Scalar;
  const detail::GaussEval<Scalar> g(sigma);
  return (g(e) * e * g.inv_var) * x;
}

/// e x, the negative gradient of e^2 / 2.
template <typename Derived>
Vector<typename Derived::Scalar> lms_gradient(typename Derived::Scalar e,
                                              const Eigen::MatrixBase<Derived>& x) {
  return e * x;
}

/// Gradient of the information potential over a window.
///
/// BatchDoubleSum:     1/(N^2 s^2) sum_i sum_j G(e_i - e_j)(e_i - e_j)(x_i - x_j)
/// StochasticSingleSum: 1/(N s^2)  sum_i G(e_0 - e_i)(e_0 - e_i)(x_0 - x_i)
///
/// N is the full window length. With a mask, only entries inside the fences
/// contribute (both members of a pair for the double sum; the newest sample
/// and entry i for the single sum).
template <typename Scalar>
MaskedGradient<Scalar> mee_gradient(const Eigen::Ref<const Vector<Scalar>>& errors,
                                    const Eigen::Ref<const Matrix<Scalar>>& inputs,
                                    Bandwidth<Scalar> sigma, GradientForm form,
                                    const std::optional<FenceBounds>& mask = std::nullopt) {
  const Eigen::Index n = errors.size();
  if (n == 0) throw DomainError("gradient window must be non-empty");
  if (inputs.cols() != n) throw DomainError("window errors and inputs disagree in length");

  const detail::GaussEval<Scalar> g(sigma);
  MaskedGradient<Scalar> out{Vector<Scalar>::Zero(inputs.rows()), 0};
  std::vector<char> keep(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    keep[static_cast<std::size_t>(i)] = detail::passes(static_cast<double>(errors(i)), mask);
    out.active += keep[static_cast<std::size_t>(i)] ? 1 : 0;
  }

  const auto count = static_cast<Scalar>(n);
  if (form == GradientForm::BatchDoubleSum) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!keep[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!keep[static_cast<std::size_t>(j)]) continue;
        const Scalar u = errors(i) - errors(j);
        out.g.noalias() += (g(u) * u) * (inputs.col(i) - inputs.col(j));
      }
    }
    out.g *= g.inv_var / (count * count);
  } else {
    if (!keep[0]) {
      out.active = 0;
      return out;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!keep[static_cast<std::size_t>(i)]) continue;
      const Scalar u = errors(0) - errors(i);
      out.g.noalias() += (g(u) * u) * (inputs.col(0) - inputs.col(i));
    }
    out.g *= g.inv_var / count;
  }
  return out;
}

/// Stochastic MEE with `fiducial` zero-valued reference errors:
/// N/(N+M) single-sum MEE gradient + M/(N+M) MCC gradient of the newest error.
template <typename Scalar>
Vector<Scalar> meef_gradient(const Eigen::Ref<const Vector<Scalar>>& errors,
                             const Eigen::Ref<const Matrix<Scalar>>& inputs,
                             Bandwidth<Scalar> sigma, std::size_t fiducial) {
  const auto n = static_cast<Scalar>(errors.size());
  const auto m = static_cast<Scalar>(fiducial);
  const Vector<Scalar> entropy =
      mee_gradient<Scalar>(errors, inputs, sigma, GradientForm::StochasticSingleSum).g;
  const Vector<Scalar> correntropy = mcc_gradient(errors(0), inputs.col(0), sigma);
  return (n / (n + m)) * entropy + (m / (n + m)) * correntropy;
}

template <typename Scalar>
struct StepOutcome {
  Scalar error;
  bool was_outlier = false;
  /// Every window entry was masked out, so the entropy gradient is zero.
  bool empty_mask = false;
};

/// One online learner instance. Weights and bias start at zero.
template <typename Scalar = double>
class OnlineLearner {
 public:
  using Sample = StreamSample<Scalar>;

  OnlineLearner(Algorithm algo, LearnerConfig config, Eigen::Index dim)
      : algo_(algo),
        config_(std::move(config)),
        form_(config_.gradient_form.value_or(default_gradient_form(algo))),
        sigma_(static_cast<Scalar>(config_.sigma)),
        w_(Vector<Scalar>::Zero(checked_dim(dim))),
        x_bar_(Vector<Scalar>::Zero(dim)) {
    config_.validate();
    if (algo_ == Algorithm::TrimmedMee) quantizer_.emplace(config_.quantile);
  }

  /// x^T w + bias.
  Scalar predict(const Eigen::Ref<const Vector<Scalar>>& x) const {
    if (x.size() != w_.size()) throw DomainError("input dimension does not match the weights");
    return x.dot(w_) + bias_;
  }

  /// Errors of the current sample and the most recent window - 1 stored
  /// samples, recomputed against the present weights and bias.
  WindowErrors<Scalar> window_errors(const Sample& current) const {
    const std::size_t past = std::min(ring_.size(), config_.window - 1);
    const auto n = static_cast<Eigen::Index>(past + 1);
    WindowErrors<Scalar> out{Vector<Scalar>(n), Matrix<Scalar>(w_.size(), n)};
    out.errors(0) = current.d - predict(current.x);
    out.inputs.col(0) = current.x;
    for (std::size_t k = 0; k < past; ++k) {
      const Sample& s = ring_[ring_.size() - 1 - k];
      const auto col = static_cast<Eigen::Index>(k + 1);
      out.errors(col) = s.d - predict(s.x);
      out.inputs.col(col) = s.x;
    }
    return out;
  }

  /// Consumes one labeled observation. Throws InputError for non-finite or
  /// mis-sized samples with the learner left unchanged.
  StepOutcome<Scalar> step(const Sample& sample) {
    if (sample.x.size() != w_.size()) throw InputError("sample dimension does not match the learner");
    if (!std::isfinite(static_cast<double>(sample.d)) || !sample.x.allFinite()) {
      throw InputError("sample contains non-finite values");
    }

    StepOutcome<Scalar> out{sample.d - predict(sample.x)};
    std::optional<FenceBounds> mask;
    if (algo_ == Algorithm::TrimmedMee) {
      quantizer_->observe(static_cast<double>(out.error));
      mask = config_.fence_override.value_or(quantizer_->current_fences());
      if (is_outlier(static_cast<double>(out.error), *mask)) {
        out.was_outlier = true;
        push(sample);
        return out;
      }
    }

    const bool centered = algo_ == Algorithm::Mee || algo_ == Algorithm::TrimmedMee;
    if (centered) {
      const auto k = static_cast<Scalar>(counter_no_);
      d_bar_ = (sample.d + k * d_bar_) / (k + Scalar(1));
      x_bar_ = (sample.x + k * x_bar_) / (k + Scalar(1));
      ++counter_no_;
    }

    const Scalar mu = static_cast<Scalar>(config_.mu);
    switch (algo_) {
      case Algorithm::Lms:
        w_ += mu * lms_gradient(out.error, sample.x);
        break;
      case Algorithm::Mcc:
        w_ += mu * mcc_gradient(out.error, sample.x, sigma_);
        break;
      case Algorithm::Meef: {
        const WindowErrors<Scalar> win = window_errors(sample);
        w_ += mu * meef_gradient<Scalar>(win.errors, win.inputs, sigma_, config_.fiducial);
        break;
      }
      case Algorithm::Mee:
      case Algorithm::TrimmedMee: {
        const WindowErrors<Scalar> win = window_errors(sample);
        const MaskedGradient<Scalar> grad =
            mee_gradient<Scalar>(win.errors, win.inputs, sigma_, form_, mask);
        out.empty_mask = grad.active == 0;
        w_ += mu * grad.g;
        break;
      }
    }
    if (centered) bias_ = d_bar_ - x_bar_.dot(w_);
    push(sample);
    return out;
  }

  Algorithm algorithm() const noexcept { return algo_; }
  const LearnerConfig& config() const noexcept { return config_; }
  GradientForm gradient_form() const noexcept { return form_; }
  const Vector<Scalar>& weights() const noexcept { return w_; }
  Scalar bias() const noexcept { return bias_; }
  const std::deque<Sample>& ring() const noexcept { return ring_; }
  Scalar d_bar() const noexcept { return d_bar_; }
  const Vector<Scalar>& x_bar() const noexcept { return x_bar_; }
  std::size_t counter_no() const noexcept { return counter_no_; }
  /// Present only for Trimmed MEE.
  const std::optional<QuartileTracker>& quantizer() const noexcept { return quantizer_; }

 private:
  static Eigen::Index checked_dim(Eigen::Index dim) {
    if (dim <= 0) throw DomainError("filter length must be positive");
    return dim;
  }

  void push(const Sample& sample) {
    ring_.push_back(sample);
    while (ring_.size() > config_.window) ring_.pop_front();
  }

  Algorithm algo_;
  LearnerConfig config_;
  GradientForm form_;
  Bandwidth<Scalar> sigma_;
  Vector<Scalar> w_;
  Scalar bias_ = Scalar(0);
  std::deque<Sample> ring_;
  Scalar d_bar_ = Scalar(0);
  Vector<Scalar> x_bar_;
  std::size_t counter_no_ = 0;
  std::optional<QuartileTracker> quantizer_;
};

}  // namespace tmee
