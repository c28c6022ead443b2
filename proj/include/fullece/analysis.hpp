#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fullece/accumulators.hpp"
#include "fullece/metrics.hpp"
#include "fullece/record.hpp"

namespace fullece {

// --- bin-count stability ------------------------------------------------------

/// Default bin counts of the stability sweep.
inline constexpr std::array<std::uint32_t, 7> kStabilityBins{5, 10, 20, 50, 100, 200, 500};

struct RsdStats {
  double mean = 0.0;
  double stddev = 0.0;                // population (divisor n)
  std::optional<double> rsd_percent;  // 100 * stddev / mean, only when mean > 0
};

RsdStats population_rsd(std::span<const double> values);

struct StabilityReport {
  Metric metric = Metric::FullEce;
  Normalization normalization = Normalization::PaperFull;
  std::vector<std::pair<std::uint32_t, double>> values;  // (M, metric)
  RsdStats stats;
};

/// Accumulates every requested metric at every bin count in a single pass
/// over `source`. The classwise budget is checked for the largest M before
/// any record is accumulated.
std::vector<StabilityReport> stability_sweep(RecordStream& source, std::span<const std::uint32_t> bin_counts,
                                             std::span<const Metric> metrics, Normalization normalization,
                                             std::uint64_t cell_budget = kDefaultCellBudget);

// --- token frequency ----------------------------------------------------------

/// Per-class occurrence buckets: 0, 1-10, 11-100, 101-1000, >1000.
struct FrequencyReport {
  static constexpr std::size_t kBuckets = 5;
  static constexpr std::array<const char*, kBuckets> kBucketNames{"0", "1-10", "11-100", "101-1000", ">1000"};

  std::uint32_t num_classes = 0;
  std::uint64_t total_tokens = 0;
  std::array<std::uint64_t, kBuckets> class_counts{};
  std::array<double, kBuckets> fractions{};
};

std::size_t frequency_bucket(std::uint64_t occurrences);

/// Streaming counter behind token_frequency.
class TokenCounter {
 public:
  explicit TokenCounter(std::uint32_t num_classes);
  void add(std::uint32_t label);
  FrequencyReport report() const;

 private:
  std::vector<std::uint64_t> occurrences_;
  std::uint64_t total_ = 0;
};

FrequencyReport token_frequency(std::span<const std::uint32_t> labels, std::uint32_t num_classes);

// --- checkpoint series --------------------------------------------------------

struct CheckpointInput {
  std::string label;
  /// Opens a fresh stream over the checkpoint's records.
  std::function<std::unique_ptr<RecordStream>()> open;
};

struct SeriesEntry {
  std::string label;
  double full_ece = 0.0;
  std::uint64_t num_records = 0;
  std::uint32_t num_classes = 0;
  std::uint32_t num_bins = 0;
};

struct SeriesReport {
  Normalization normalization = Normalization::PaperFull;
  std::vector<SeriesEntry> entries;
};

/// Full-ECE for each checkpoint in input order with one shared config.
/// Ingest errors are rethrown with the checkpoint label prepended.
SeriesReport checkpoint_series(std::span<const CheckpointInput> checkpoints, std::uint32_t num_bins,
                               Normalization normalization);

}  // namespace fullece
