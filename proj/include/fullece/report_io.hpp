#pragma once

#include <map>
#include <ostream>
#include <span>

#include <json.hpp>

#include "fullece/analysis.hpp"
#include "fullece/metrics.hpp"

namespace fullece {

/// Version of the JSON report schema emitted by the CLI.
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const std::map<Metric, double>& metrics);
nlohmann::json to_json(std::span<const StabilityReport> reports);
nlohmann::json to_json(const FrequencyReport& report);
nlohmann::json to_json(const SeriesReport& report);
nlohmann::json to_json(const ReliabilityCurve& curve);

// CSV: one row per metric, per (metric, M), per bucket, per checkpoint or
// per bin. Doubles are written with 17 significant digits.
void write_csv(std::ostream& out, const std::map<Metric, double>& metrics);
void write_csv(std::ostream& out, std::span<const StabilityReport> reports);
void write_csv(std::ostream& out, const FrequencyReport& report);
void write_csv(std::ostream& out, const SeriesReport& report);
void write_csv(std::ostream& out, const ReliabilityCurve& curve);

}  // namespace fullece
