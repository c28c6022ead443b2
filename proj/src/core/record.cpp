#include "fullece/record.hpp"

#include <cmath>

#include "fullece/errors.hpp"

namespace fullece {

std::optional<std::string> record_violation(std::span<const double> probs, std::uint32_t label) {
  if (probs.empty()) return "empty probability vector";
  if (label >= probs.size()) {
    return "label " + std::to_string(label) + " outside [0, " + std::to_string(probs.size()) + ")";
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      return "probability " + std::to_string(p) + " at class " + std::to_string(k) + " outside [0, 1]";
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    return "probabilities sum to " + std::to_string(sum) + ", not 1";
  }
  return std::nullopt;
}

void validate_record(std::span<const double> probs, std::uint32_t label) {
  if (auto why = record_violation(probs, label)) throw DomainError(*why);
}

}  // namespace fullece
