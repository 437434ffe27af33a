#pragma once

// Gaussian kernel, Parzen density, information potential and correntropy.
//
// Sequences of error samples are taken as Eigen dense vector expressions, so
// callers can pass e.g. `errors.array() + c` without materializing a copy.
// Double sums always run outer index ascending, inner index ascending.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <type_traits>

#include "tmee/error.hpp"

namespace tmee {

/// Kernel width sigma > 0, in the units of the error samples.
template <typename Scalar>
class Bandwidth {
  static_assert(std::is_floating_point_v<Scalar>);

 public:
  explicit Bandwidth(Scalar sigma) : sigma_(sigma) {
    if (!std::isfinite(sigma) || !(sigma > Scalar(0))) {
      throw DomainError("kernel bandwidth must be positive and finite");
    }
  }

  Scalar value() const noexcept { return sigma_; }

 private:
  Scalar sigma_;
};

template <typename Scalar>
Bandwidth(Scalar) -> Bandwidth<Scalar>;

namespace detail {

// Precomputed constants for repeated kernel evaluations.
template <typename Scalar>
struct GaussEval {
  explicit GaussEval(Bandwidth<Scalar> sigma)
      : norm(Scalar(1) / (std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) *
                          sigma.value())),
        inv_two_var(Scalar(1) / (Scalar(2) * sigma.value() * sigma.value())),
        inv_var(Scalar(1) / (sigma.value() * sigma.value())) {}

  Scalar operator()(Scalar e) const { return norm * std::exp(-e * e * inv_two_var); }

  Scalar norm;
  Scalar inv_two_var;
  Scalar inv_var;
};

template <typename Derived>
void require_non_empty(const Eigen::DenseBase<Derived>& v) {
  static_assert(Derived::ColsAtCompileTime == 1 || Derived::RowsAtCompileTime == 1,
                "error samples must be a vector expression");
  if (v.size() == 0) throw DomainError("error sequence must be non-empty");
}

}  // namespace detail

/// G_sigma(e) = exp(-e^2 / (2 sigma^2)) / (sqrt(2 pi) sigma).
template <typename Scalar>
Scalar gaussian_kernel(Scalar e, Bandwidth<Scalar> sigma) {
  if (!std::isfinite(e)) throw DomainError("kernel argument must be finite");
  return detail::GaussEval<Scalar>(sigma)(e);
}

/// Parzen-window density estimate at `e`: mean of G_sigma(e - e_i).
template <typename Derived>
typename Derived::Scalar parzen_pdf(typename Derived::Scalar e,
                                    const Eigen::DenseBase<Derived>& errors,
                                    Bandwidth<typename Derived::Scalar> sigma) {
  using Scalar = typename Derived::Scalar;
  detail::require_non_empty(errors);
  const detail::GaussEval<Scalar> g(sigma);
  const auto& v = errors.derived();
  Scalar sum(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += g(e - v(i));
  return sum / static_cast<Scalar>(v.size());
}

/// Sample information potential (1/N^2) sum_i sum_j G_sigma(e_i - e_j).
/// Bounded above by G_sigma(0), attained iff all samples coincide.
template <typename Derived>
typename Derived::Scalar information_potential(
    const Eigen::DenseBase<Derived>& errors,
    Bandwidth<typename Derived::Scalar> sigma) {
  using Scalar = typename Derived::Scalar;
  detail::require_non_empty(errors);
  const detail::GaussEval<Scalar> g(sigma);
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> v = errors.derived();
  Scalar sum(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (Eigen::Index j = 0; j < v.size(); ++j) sum += g(v(i) - v(j));
  }
  const auto n = static_cast<Scalar>(v.size());
  return sum / (n * n);
}

/// Sample correntropy (1/N) sum_i G_sigma(e_i); identical to the Parzen
/// density of the errors evaluated at the origin.
template <typename Derived>
typename Derived::Scalar correntropy_estimate(
    const Eigen::DenseBase<Derived>& errors,
    Bandwidth<typename Derived::Scalar> sigma) {
  return parzen_pdf(typename Derived::Scalar(0), errors, sigma);
}

/// Uniform trapezoidal grid on [lower, upper] with `points` nodes.
struct QuadratureGrid {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t points = std::size_t{1} << 14;

  /// +-`spread` standard deviations around `center`.
  static QuadratureGrid covering(double center, double sd, double spread = 10.0,
                                 std::size_t points = std::size_t{1} << 14) {
    return {center - spread * sd, center + spread * sd, points};
  }
};

/// Trapezoidal integral of f over the grid.
template <typename F>
double trapezoid(F&& f, const QuadratureGrid& grid) {
  if (grid.points < 2 || !(grid.upper > grid.lower)) {
    throw DomainError("quadrature grid needs >= 2 points on a non-empty interval");
  }
  const double h = (grid.upper - grid.lower) / static_cast<double>(grid.points - 1);
  double sum = 0.5 * (f(grid.lower) + f(grid.upper));
  for (std::size_t k = 1; k + 1 < grid.points; ++k) {
    sum += f(grid.lower + h * static_cast<double>(k));
  }
  return sum * h;
}

/// Residual of the identity linking information potential, correntropy and
/// the Euclidean distance between a density p and the kernel:
///   |I2 + 1/(2 sigma sqrt(pi)) - 2 v - D_ED|
/// with I2 = int p^2, v = int p G, D_ED = int (p - G)^2 each by quadrature.
/// Throws PreconditionError if p does not integrate to 1 within 1e-6.
template <typename Pdf>
double euclidean_gap_identity_residual(Pdf&& pdf, Bandwidth<double> sigma,
                                       const QuadratureGrid& grid) {
  const detail::GaussEval<double> g(sigma);
  const double mass = trapezoid([&](double e) { return pdf(e); }, grid);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw PreconditionError("density does not normalize on the quadrature grid");
  }
  const double ip = trapezoid([&](double e) { const double p = pdf(e); return p * p; }, grid);
  const double v = trapezoid([&](double e) { return pdf(e) * g(e); }, grid);
  const double ded = trapezoid(
      [&](double e) { const double d = pdf(e) - g(e); return d * d; }, grid);
  const double kernel_energy =
      1.0 / (2.0 * sigma.value() * std::sqrt(std::numbers::pi));
  return std::abs(ip + kernel_energy - 2.0 * v - ded);
}

}  // namespace tmee
