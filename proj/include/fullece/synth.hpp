#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fullece/binning.hpp"
#include "fullece/philox.hpp"
#include "fullece/record.hpp"

namespace fullece {

enum class GeneratorKind { Dirichlet, ZipfImbalanced, OneHot };

std::string_view generator_kind_name(GeneratorKind kind);
std::optional<GeneratorKind> parse_generator_kind(std::string_view name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Dirichlet;
  std::uint64_t num_records = 1000;
  std::uint32_t num_classes = 10;
  double alpha = 1.0;        // Dirichlet concentration (per class for Dirichlet; total / K for Zipf)
  double zipf_exponent = 1.2;
  double temperature = 1.0;  // applied after the label is drawn; 1 keeps the stream calibrated
  std::uint64_t seed = 0;

  /// Spec for shard `index`: seed XOR index, counter restarted.
  GeneratorSpec for_shard(std::uint64_t index) const {
    GeneratorSpec s = *this;
    s.seed ^= index;
    return s;
  }
};

/// Throws DomainError when the spec is invalid.
void validate(const GeneratorSpec& spec);

/// Streams records for a spec. Dirichlet and Zipf records draw their label
/// from the record's own (pre-temperature) distribution, so with T = 1 the
/// source is fully calibrated.
///
///  - Dirichlet: probs ~ Dir(alpha * 1_K).
///  - ZipfImbalanced: probs ~ Dir(alpha * K * prior), where prior_k is
///    proportional to k^-s (k = 1..K) and normalized; most classes are rare.
///  - OneHot: record i is the one-hot vector of class i mod K with that label.
class Generator final : public RecordStream {
 public:
  explicit Generator(const GeneratorSpec& spec);

  bool next(PredictionRecord& out) override;
  std::optional<std::uint32_t> num_classes() const override { return spec_.num_classes; }

  const std::vector<double>& concentration() const { return concentration_; }

 private:
  GeneratorSpec spec_;
  CounterRng rng_;
  std::uint64_t produced_ = 0;
  std::vector<double> concentration_;
  std::vector<double> logs_;
};

/// Materializes the whole stream of a spec.
std::vector<PredictionRecord> generate(const GeneratorSpec& spec);

/// Normalized Zipf(s) prior over classes 1..K.
std::vector<double> zipf_prior(std::uint32_t num_classes, double exponent);

/// p_k <- p_k^(1/T) / sum_j p_j^(1/T); zero entries stay zero. Label unchanged.
PredictionRecord apply_temperature(const PredictionRecord& record, double temperature);
void apply_temperature_in_place(std::vector<double>& probs, double temperature);

// --- brute-force oracle -----------------------------------------------------

/// Reference metric values and bin counts computed from stored records by
/// materializing every bin as an index list and evaluating the sums
/// literally. Shares no accumulation code with the streaming accumulators.
struct OracleMetrics {
  double ece = 0.0;
  double cw_ece = 0.0;
  double full_ece = 0.0;
  std::vector<std::uint64_t> confidence_counts;  // M
  std::vector<std::uint64_t> classwise_counts;   // K * M, class-major
  std::vector<std::uint64_t> full_counts;        // M
};

OracleMetrics oracle_metrics(std::span<const PredictionRecord> records, std::uint32_t num_bins,
                             Normalization normalization = Normalization::PaperFull);

}  // namespace fullece
