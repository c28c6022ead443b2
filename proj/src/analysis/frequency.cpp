#include <string>

#include "fullece/analysis.hpp"
#include "fullece/errors.hpp"

namespace fullece {

std::size_t frequency_bucket(std::uint64_t occurrences) {
  if (occurrences == 0) return 0;
  if (occurrences <= 10) return 1;
  if (occurrences <= 100) return 2;
  if (occurrences <= 1000) return 3;
  return 4;
}

TokenCounter::TokenCounter(std::uint32_t num_classes) : occurrences_(num_classes, 0) {
  if (num_classes == 0) throw DomainError("token frequency needs K >= 1");
}

void TokenCounter::add(std::uint32_t label) {
  if (label >= occurrences_.size()) {
    throw DomainError("label " + std::to_string(label) + " outside [0, " + std::to_string(occurrences_.size()) + ")");
  }
  ++occurrences_[label];
  ++total_;
}

FrequencyReport TokenCounter::report() const {
  FrequencyReport rep;
  rep.num_classes = static_cast<std::uint32_t>(occurrences_.size());
  rep.total_tokens = total_;
  for (const auto c : occurrences_) ++rep.class_counts[frequency_bucket(c)];
  for (std::size_t b = 0; b < FrequencyReport::kBuckets; ++b) {
    rep.fractions[b] = static_cast<double>(rep.class_counts[b]) / static_cast<double>(rep.num_classes);
  }
  return rep;
}

FrequencyReport token_frequency(std::span<const std::uint32_t> labels, std::uint32_t num_classes) {
  TokenCounter counter(num_classes);
  for (const auto y : labels) counter.add(y);
  return counter.report();
}

}  // namespace fullece
