#include "tmee/learners.hpp"

#include <array>
#include <utility>

namespace tmee {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 5> kAlgorithmNames{{
    {Algorithm::Lms, "LMS"},
    {Algorithm::Mcc, "MCC"},
    {Algorithm::Mee, "MEE"},
    {Algorithm::Meef, "MEEF"},
    {Algorithm::TrimmedMee, "TRIMMED_MEE"},
}};

}  // namespace

std::string_view to_string(Algorithm algo) {
  for (const auto& [a, name] : kAlgorithmNames) {
    if (a == algo) return name;
  }
  return "?";
}

std::string_view to_string(GradientForm form) {
  return form == GradientForm::BatchDoubleSum ? "batch_double_sum" : "stochastic_single_sum";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& [a, n] : kAlgorithmNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::optional<GradientForm> parse_gradient_form(std::string_view name) {
  if (name == "batch_double_sum") return GradientForm::BatchDoubleSum;
  if (name == "stochastic_single_sum") return GradientForm::StochasticSingleSum;
  return std::nullopt;
}

GradientForm default_gradient_form(Algorithm algo) {
  return algo == Algorithm::TrimmedMee ? GradientForm::BatchDoubleSum
                                       : GradientForm::StochasticSingleSum;
}

void LearnerConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("learning rate mu must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("kernel bandwidth sigma must be positive");
  if (window < 1) throw DomainError("window must hold at least one sample");
  quantile.validate();
  if (fence_override && fence_override->lower_extreme > fence_override->upper_extreme) {
    throw DomainError("fence override must satisfy lower <= upper");
  }
}

}  // namespace tmee
