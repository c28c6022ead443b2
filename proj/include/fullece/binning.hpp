#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <optional>

namespace fullece {

/// Divisor policy for Full-ECE bin weights.
///
/// PaperFull divides by N, so the weights sum to K and the metric lies in
/// [0, K]. PerEntry divides by N*K, giving weights that sum to 1.
enum class Normalization { PaperFull, PerEntry };

std::string_view normalization_name(Normalization n);
std::optional<Normalization> parse_normalization(std::string_view name);

struct BinningConfig {
  std::uint32_t num_bins = 10;
  Normalization normalization = Normalization::PaperFull;
};

/// 1-based bin of probability `p` among `num_bins` equispaced bins.
///
/// Bin m covers ((m-1)/M, m/M] with edges evaluated as double(m)/double(M);
/// the first bin is closed at zero. Throws DomainError for p outside [0, 1],
/// non-finite p, or num_bins == 0.
std::uint32_t bin_index(double p, std::uint32_t num_bins);

inline double bin_upper_edge(std::uint32_t bin, std::uint32_t num_bins) {
  return static_cast<double>(bin) / static_cast<double>(num_bins);
}
inline double bin_lower_edge(std::uint32_t bin, std::uint32_t num_bins) {
  return static_cast<double>(bin - 1) / static_cast<double>(num_bins);
}

namespace detail {

// 0-based slot for a validated p. The ceil estimate can be one off near an
// edge, so it is corrected against the exact edge values.
inline std::uint32_t bin_slot(double p, std::uint32_t num_bins) {
  if (p <= 0.0) return 0;
  const double m_d = static_cast<double>(num_bins);
  auto m = static_cast<std::uint32_t>(std::ceil(p * m_d));
  if (m < 1) m = 1;
  if (m > num_bins) m = num_bins;
  if (m > 1 && p <= static_cast<double>(m - 1) / m_d) {
    --m;
  } else if (m < num_bins && p > static_cast<double>(m) / m_d) {
    ++m;
  }
  return m - 1;
}

}  // namespace detail

}  // namespace fullece
