#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fullece/errors.hpp"
#include "fullece/synth.hpp"

namespace fullece {

std::string_view generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Dirichlet:
      return "dirichlet";
    case GeneratorKind::ZipfImbalanced:
      return "zipf";
    case GeneratorKind::OneHot:
      return "onehot";
  }
  return "unknown";
}

std::optional<GeneratorKind> parse_generator_kind(std::string_view name) {
  if (name == "dirichlet") return GeneratorKind::Dirichlet;
  if (name == "zipf" || name == "zipf-imbalanced") return GeneratorKind::ZipfImbalanced;
  if (name == "onehot" || name == "one-hot") return GeneratorKind::OneHot;
  return std::nullopt;
}

void validate(const GeneratorSpec& spec) {
  if (spec.num_records < 1) throw DomainError("generator needs N >= 1");
  if (spec.num_classes < 2) throw DomainError("generator needs K >= 2");
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) throw DomainError("alpha must be positive");
  if (!(spec.temperature > 0.0) || !std::isfinite(spec.temperature)) {
    throw DomainError("temperature must be positive");
  }
  if (spec.kind == GeneratorKind::ZipfImbalanced &&
      (!(spec.zipf_exponent > 0.0) || !std::isfinite(spec.zipf_exponent))) {
    throw DomainError("Zipf exponent must be positive");
  }
}

std::vector<double> zipf_prior(std::uint32_t num_classes, double exponent) {
  std::vector<double> prior(num_classes);
  double total = 0.0;
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    prior[k] = std::pow(static_cast<double>(k + 1), -exponent);
    total += prior[k];
  }
  for (double& p : prior) p /= total;
  return prior;
}

Generator::Generator(const GeneratorSpec& spec) : spec_(spec), rng_(spec.seed) {
  validate(spec_);
  const std::uint32_t k = spec_.num_classes;
  if (spec_.kind == GeneratorKind::Dirichlet) {
    concentration_.assign(k, spec_.alpha);
  } else if (spec_.kind == GeneratorKind::ZipfImbalanced) {
    concentration_ = zipf_prior(k, spec_.zipf_exponent);
    for (double& c : concentration_) c *= spec_.alpha * static_cast<double>(k);
  }
  logs_.resize(k);
}

bool Generator::next(PredictionRecord& out) {
  if (produced_ == spec_.num_records) return false;
  const std::uint32_t k = spec_.num_classes;
  out.probs.assign(k, 0.0);

  if (spec_.kind == GeneratorKind::OneHot) {
    const auto cls = static_cast<std::uint32_t>(produced_ % k);
    out.probs[cls] = 1.0;
    out.label = cls;
    ++produced_;
    return true;
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < k; ++c) {
    logs_[c] = rng_.log_gamma(concentration_[c]);
    max_log = std::max(max_log, logs_[c]);
  }
  double total = 0.0;
  for (std::uint32_t c = 0; c < k; ++c) {
    out.probs[c] = std::exp(logs_[c] - max_log);
    total += out.probs[c];
  }
  for (double& p : out.probs) p /= total;

  // Inverse-CDF draw of the label from the record's own distribution.
  const double u = rng_.uniform();
  double cumulative = 0.0;
  std::uint32_t label = k;
  std::uint32_t last_positive = 0;
  for (std::uint32_t c = 0; c < k; ++c) {
    if (out.probs[c] > 0.0) last_positive = c;
    cumulative += out.probs[c];
    if (label == k && u < cumulative) label = c;
  }
  out.label = label == k ? last_positive : label;

  if (spec_.temperature != 1.0) apply_temperature_in_place(out.probs, spec_.temperature);
  ++produced_;
  return true;
}

std::vector<PredictionRecord> generate(const GeneratorSpec& spec) {
  Generator gen(spec);
  std::vector<PredictionRecord> records;
  records.reserve(spec.num_records);
  PredictionRecord r;
  while (gen.next(r)) records.push_back(r);
  return records;
}

void apply_temperature_in_place(std::vector<double>& probs, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw DomainError("temperature must be positive");
  if (temperature == 1.0) return;
  // Work in log space relative to the largest entry so extreme exponents
  // cannot overflow.
  double max_log = -std::numeric_limits<double>::infinity();
  for (const double p : probs) {
    if (p > 0.0) max_log = std::max(max_log, std::log(p));
  }
  if (!std::isfinite(max_log)) throw DomainError("probability vector has no positive entry");
  const double inv_t = 1.0 / temperature;
  double total = 0.0;
  for (double& p : probs) {
    p = p > 0.0 ? std::exp((std::log(p) - max_log) * inv_t) : 0.0;
    total += p;
  }
  for (double& p : probs) p /= total;
}

PredictionRecord apply_temperature(const PredictionRecord& record, double temperature) {
  PredictionRecord out = record;
  apply_temperature_in_place(out.probs, temperature);
  return out;
}

}  // namespace fullece
