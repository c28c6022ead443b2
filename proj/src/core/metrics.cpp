#include "fullece/metrics.hpp"

#include <cmath>

#include "fullece/errors.hpp"

namespace fullece {

namespace {

// The scalar metrics and the reliability rows share these expressions so that
// re-aggregating a curve reproduces the metric bit for bit.
struct BinTerm {
  double weight;
  double accuracy;
  double confidence;
};

BinTerm bin_term(const BinStats& b, double divisor) {
  const double count = static_cast<double>(b.count);
  return {count / divisor, static_cast<double>(b.hits) / count, b.prob_sum.value() / count};
}

double gap(const BinTerm& t) { return t.weight * std::abs(t.accuracy - t.confidence); }

void require_records(std::uint64_t total) {
  if (total == 0) throw EmptyAccumulatorError("metric is undefined for an empty accumulator");
}

double sum_terms(std::span<const BinStats> bins, double divisor) {
  double total = 0.0;
  for (const BinStats& b : bins) {
    if (b.count != 0) total += gap(bin_term(b, divisor));
  }
  return total;
}

double full_divisor(const FullAccumulator& full, Normalization normalization) {
  const double n = static_cast<double>(full.total_records());
  return normalization == Normalization::PaperFull ? n : n * static_cast<double>(full.num_classes());
}

ReliabilityRow make_row(const BinStats& b, std::uint32_t slot, std::uint32_t num_bins, double divisor) {
  ReliabilityRow row;
  row.bin = slot + 1;
  row.lower = bin_lower_edge(row.bin, num_bins);
  row.upper = bin_upper_edge(row.bin, num_bins);
  row.count = b.count;
  if (b.count != 0) {
    const BinTerm t = bin_term(b, divisor);
    row.weight = t.weight;
    row.accuracy = t.accuracy;
    row.confidence = t.confidence;
  }
  return row;
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Ece:
      return "ece";
    case Metric::ClasswiseEce:
      return "cw-ece";
    case Metric::FullEce:
      return "full-ece";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "ece") return Metric::Ece;
  if (name == "cw-ece") return Metric::ClasswiseEce;
  if (name == "full-ece") return Metric::FullEce;
  return std::nullopt;
}

double compute_ece(const ConfidenceAccumulator& conf) {
  require_records(conf.total_records());
  return sum_terms(conf.bins(), static_cast<double>(conf.total_records()));
}

double compute_cw_ece(const ClasswiseAccumulator& cw) {
  require_records(cw.total_records());
  const double divisor = static_cast<double>(cw.total_records()) * static_cast<double>(cw.num_classes());
  return sum_terms(cw.cells(), divisor);
}

double compute_full_ece(const FullAccumulator& full, Normalization normalization) {
  require_records(full.total_records());
  return sum_terms(full.bins(), full_divisor(full, normalization));
}

double ReliabilityCurve::aggregate() const {
  double total = 0.0;
  for (const auto& row : rows) {
    if (row.count != 0) total += gap({row.weight, *row.accuracy, *row.confidence});
  }
  return total;
}

ReliabilityCurve reliability_curve(const ConfidenceAccumulator& conf) {
  require_records(conf.total_records());
  ReliabilityCurve curve;
  curve.metric = Metric::Ece;
  curve.num_bins = conf.num_bins();
  curve.total_records = conf.total_records();
  const double divisor = static_cast<double>(conf.total_records());
  for (std::uint32_t m = 0; m < conf.num_bins(); ++m) {
    curve.rows.push_back(make_row(conf.bins()[m], m, conf.num_bins(), divisor));
  }
  return curve;
}

ReliabilityCurve reliability_curve(const ClasswiseAccumulator& cw) {
  require_records(cw.total_records());
  ReliabilityCurve curve;
  curve.metric = Metric::ClasswiseEce;
  curve.normalization = Normalization::PerEntry;
  curve.num_bins = cw.num_bins();
  curve.num_classes = cw.num_classes();
  curve.total_records = cw.total_records();
  const double divisor = static_cast<double>(cw.total_records()) * static_cast<double>(cw.num_classes());
  curve.rows.reserve(cw.cells().size());
  for (std::uint32_t k = 0; k < cw.num_classes(); ++k) {
    for (std::uint32_t m = 0; m < cw.num_bins(); ++m) {
      ReliabilityRow row = make_row(cw.cell(k, m), m, cw.num_bins(), divisor);
      row.class_index = k;
      curve.rows.push_back(row);
    }
  }
  return curve;
}

ReliabilityCurve reliability_curve(const FullAccumulator& full, Normalization normalization) {
  require_records(full.total_records());
  ReliabilityCurve curve;
  curve.metric = Metric::FullEce;
  curve.normalization = normalization;
  curve.num_bins = full.num_bins();
  curve.num_classes = full.num_classes();
  curve.total_records = full.total_records();
  const double divisor = full_divisor(full, normalization);
  for (std::uint32_t m = 0; m < full.num_bins(); ++m) {
    curve.rows.push_back(make_row(full.bins()[m], m, full.num_bins(), divisor));
  }
  return curve;
}

}  // namespace fullece
