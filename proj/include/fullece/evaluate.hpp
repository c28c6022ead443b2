#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>

#include "fullece/accumulators.hpp"
#include "fullece/ingest.hpp"
#include "fullece/metrics.hpp"

namespace fullece {

struct EvalConfig {
  BinningConfig binning;
  std::set<Metric> metrics{Metric::Ece, Metric::ClasswiseEce, Metric::FullEce};
  std::uint64_t cell_budget = kDefaultCellBudget;
  unsigned threads = 1;
};

/// The accumulators a metric set needs, created once K is known.
class AccumulatorSet {
 public:
  AccumulatorSet() = default;
  /// Throws BudgetError if cw-ECE is requested and K*M exceeds the budget.
  AccumulatorSet(std::uint32_t num_classes, const EvalConfig& config);

  bool initialized() const { return num_classes_ != 0; }
  std::uint32_t num_classes() const { return num_classes_; }
  std::uint64_t total_records() const;

  void add(const PredictionRecord& record) { accumulate(record, conf_ ? &*conf_ : nullptr, cw_ ? &*cw_ : nullptr, full_ ? &*full_ : nullptr); }
  /// Merging into an uninitialized set adopts `other`.
  void merge(const AccumulatorSet& other);

  const std::optional<ConfidenceAccumulator>& confidence() const { return conf_; }
  const std::optional<ClasswiseAccumulator>& classwise() const { return cw_; }
  const std::optional<FullAccumulator>& full() const { return full_; }

  std::optional<ConfidenceAccumulator>& confidence() { return conf_; }
  std::optional<ClasswiseAccumulator>& classwise() { return cw_; }
  std::optional<FullAccumulator>& full() { return full_; }

  /// Metric values in Metric order for every accumulator present.
  std::map<Metric, double> metrics(Normalization normalization) const;

 private:
  std::uint32_t num_classes_ = 0;
  std::optional<ConfidenceAccumulator> conf_;
  std::optional<ClasswiseAccumulator> cw_;
  std::optional<FullAccumulator> full_;
};

struct EvalResult {
  AccumulatorSet accumulators;
  bool saw_sparse = false;
};

/// Single-threaded accumulation of a whole stream.
EvalResult evaluate_stream(RecordStream& stream, const EvalConfig& config);

/// Accumulates a file, sharding across `config.threads` workers. Shards are
/// merged in file order, so the result depends only on the thread count.
EvalResult evaluate_file(const std::filesystem::path& path, const RecordSource& source,
                         const EvalConfig& config);

}  // namespace fullece
