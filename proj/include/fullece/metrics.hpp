#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fullece/accumulators.hpp"
#include "fullece/binning.hpp"

namespace fullece {

enum class Metric { Ece, ClasswiseEce, FullEce };

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

/// Top-1 ECE: sum over bins of |B_m|/N * |A_m - C_m|.
double compute_ece(const ConfidenceAccumulator& conf);

/// Classwise ECE: sum over (class, bin) of |B_mk|/(N K) * |A_mk - C_mk|.
double compute_cw_ece(const ClasswiseAccumulator& cw);

/// Full-ECE over the class-merged bins. The divisor is N under PaperFull and
/// N*K under PerEntry.
double compute_full_ece(const FullAccumulator& full,
                        Normalization normalization = Normalization::PaperFull);

/// One row of a reliability table. Empty bins have weight 0 and no accuracy
/// or confidence.
struct ReliabilityRow {
  std::optional<std::uint32_t> class_index;  // set for classwise curves only
  std::uint32_t bin = 0;                     // 1-based
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t count = 0;
  double weight = 0.0;
  std::optional<double> accuracy;
  std::optional<double> confidence;
};

struct ReliabilityCurve {
  Metric metric = Metric::Ece;
  Normalization normalization = Normalization::PaperFull;
  std::uint32_t num_bins = 0;
  std::uint32_t num_classes = 0;  // 0 for confidence curves
  std::uint64_t total_records = 0;
  std::vector<ReliabilityRow> rows;

  /// sum(weight * |accuracy - confidence|) over nonempty rows, in row order.
  double aggregate() const;
};

ReliabilityCurve reliability_curve(const ConfidenceAccumulator& conf);
ReliabilityCurve reliability_curve(const ClasswiseAccumulator& cw);
ReliabilityCurve reliability_curve(const FullAccumulator& full,
                                   Normalization normalization = Normalization::PaperFull);

}  // namespace fullece
