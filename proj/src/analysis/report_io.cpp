#include "fullece/report_io.hpp"

#include <iomanip>
#include <limits>

namespace fullece {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Precise {
  explicit Precise(std::ostream& out) : out_(out), flags_(out.flags()), precision_(out.precision()) {
    out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  ~Precise() {
    out_.flags(flags_);
    out_.precision(precision_);
  }
  std::ostream& out_;
  std::ios::fmtflags flags_;
  std::streamsize precision_;
};

void csv_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

// Checkpoint labels are free text.
std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

json to_json(const std::map<Metric, double>& metrics) {
  json j = json::object();
  for (const auto& [m, v] : metrics) j[std::string(metric_name(m))] = v;
  return j;
}

json to_json(std::span<const StabilityReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json values = json::array();
    for (const auto& [m, v] : r.values) values.push_back({{"bins", m}, {"value", v}});
    arr.push_back({{"metric", metric_name(r.metric)},
                   {"normalization", normalization_name(r.normalization)},
                   {"values", values},
                   {"mean", r.stats.mean},
                   {"stddev", r.stats.stddev},
                   {"rsd_percent", optional_number(r.stats.rsd_percent)}});
  }
  return arr;
}

json to_json(const FrequencyReport& report) {
  json buckets = json::array();
  for (std::size_t b = 0; b < FrequencyReport::kBuckets; ++b) {
    buckets.push_back({{"bucket", FrequencyReport::kBucketNames[b]},
                       {"classes", report.class_counts[b]},
                       {"fraction", report.fractions[b]}});
  }
  return {{"num_classes", report.num_classes}, {"total_tokens", report.total_tokens}, {"buckets", buckets}};
}

json to_json(const SeriesReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"checkpoint", e.label},
                       {"full_ece", e.full_ece},
                       {"records", e.num_records},
                       {"num_classes", e.num_classes},
                       {"bins", e.num_bins}});
  }
  return {{"normalization", normalization_name(report.normalization)}, {"checkpoints", entries}};
}

json to_json(const ReliabilityCurve& curve) {
  json rows = json::array();
  for (const auto& r : curve.rows) {
    json row{{"bin", r.bin},
             {"lower", r.lower},
             {"upper", r.upper},
             {"count", r.count},
             {"weight", r.weight},
             {"accuracy", optional_number(r.accuracy)},
             {"confidence", optional_number(r.confidence)}};
    if (r.class_index) row["class"] = *r.class_index;
    rows.push_back(std::move(row));
  }
  return {{"metric", metric_name(curve.metric)},
          {"normalization", normalization_name(curve.normalization)},
          {"bins", curve.num_bins},
          {"num_classes", curve.num_classes},
          {"records", curve.total_records},
          {"rows", rows}};
}

void write_csv(std::ostream& out, const std::map<Metric, double>& metrics) {
  Precise p(out);
  out << "metric,value\n";
  for (const auto& [m, v] : metrics) out << metric_name(m) << ',' << v << '\n';
}

void write_csv(std::ostream& out, std::span<const StabilityReport> reports) {
  Precise p(out);
  out << "metric,normalization,bins,value,mean,stddev,rsd_percent\n";
  for (const auto& r : reports) {
    for (const auto& [m, v] : r.values) {
      out << metric_name(r.metric) << ',' << normalization_name(r.normalization) << ',' << m << ',' << v << ','
          << r.stats.mean << ',' << r.stats.stddev << ',';
      csv_optional(out, r.stats.rsd_percent);
      out << '\n';
    }
  }
}

void write_csv(std::ostream& out, const FrequencyReport& report) {
  Precise p(out);
  out << "bucket,classes,fraction\n";
  for (std::size_t b = 0; b < FrequencyReport::kBuckets; ++b) {
    out << FrequencyReport::kBucketNames[b] << ',' << report.class_counts[b] << ',' << report.fractions[b] << '\n';
  }
}

void write_csv(std::ostream& out, const SeriesReport& report) {
  Precise p(out);
  out << "checkpoint,full_ece,records,num_classes,bins,normalization\n";
  for (const auto& e : report.entries) {
    out << csv_quote(e.label) << ',' << e.full_ece << ',' << e.num_records << ',' << e.num_classes << ','
        << e.num_bins << ',' << normalization_name(report.normalization) << '\n';
  }
}

void write_csv(std::ostream& out, const ReliabilityCurve& curve) {
  Precise p(out);
  out << "class,bin,lower,upper,count,weight,accuracy,confidence\n";
  for (const auto& r : curve.rows) {
    if (r.class_index) out << *r.class_index;
    out << ',' << r.bin << ',' << r.lower << ',' << r.upper << ',' << r.count << ',' << r.weight << ',';
    csv_optional(out, r.accuracy);
    out << ',';
    csv_optional(out, r.confidence);
    out << '\n';
  }
}

}  // namespace fullece
