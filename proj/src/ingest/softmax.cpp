#include <algorithm>
#include <cmath>
#include <string>

#include "fullece/errors.hpp"
#include "fullece/ingest.hpp"

namespace fullece {

void softmax_into(std::span<const double> logits, std::vector<double>& out) {
  if (logits.empty()) throw DomainError("softmax of an empty logit vector");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (!std::isfinite(logits[k])) {
      throw DomainError("non-finite logit at class " + std::to_string(k));
    }
    max_logit = std::max(max_logit, logits[k]);
  }
  out.resize(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - max_logit);
    total += out[k];
  }
  for (double& p : out) p /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out;
  softmax_into(logits, out);
  return out;
}

}  // namespace fullece
