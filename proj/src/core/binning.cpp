#include "fullece/binning.hpp"

#include <string>

#include "fullece/errors.hpp"

namespace fullece {

std::string_view normalization_name(Normalization n) {
  return n == Normalization::PaperFull ? "paper" : "per-entry";
}

std::optional<Normalization> parse_normalization(std::string_view name) {
  if (name == "paper" || name == "paper-full") return Normalization::PaperFull;
  if (name == "per-entry" || name == "entry") return Normalization::PerEntry;
  return std::nullopt;
}

std::uint32_t bin_index(double p, std::uint32_t num_bins) {
  if (num_bins == 0) throw DomainError("bin count must be at least 1");
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw DomainError("probability " + std::to_string(p) + " outside [0, 1]");
  }
  return detail::bin_slot(p, num_bins) + 1;
}

}  // namespace fullece
