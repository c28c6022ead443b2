#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fullece/accumulators.hpp"
#include "fullece/analysis.hpp"
#include "fullece/binning.hpp"
#include "fullece/errors.hpp"
#include "fullece/ingest.hpp"
#include "fullece/metrics.hpp"
#include "fullece/synth.hpp"

namespace py = pybind11;
using namespace fullece;

namespace {

using ProbArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Normalization to_normalization(const std::string& name) {
  auto n = parse_normalization(name);
  if (!n) throw DomainError("unknown normalization '" + name + "' (expected paper or per-entry)");
  return *n;
}

std::uint32_t to_label(std::int64_t v) {
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
    throw DomainError("label " + std::to_string(v) + " is negative or too large");
  }
  return static_cast<std::uint32_t>(v);
}

// Calls fn(row_span, label) for every row of an (N, K) array.
template <typename Fn>
void for_each_row(const ProbArray& probs, const LabelArray& labels, Fn&& fn) {
  if (probs.ndim() != 2) throw ShapeError("probs must be a 2-D array of shape (N, K)");
  if (labels.ndim() != 1 || labels.shape(0) != probs.shape(0)) {
    throw ShapeError("labels must be a 1-D array with one entry per row of probs");
  }
  const auto n = static_cast<std::size_t>(probs.shape(0));
  const auto k = static_cast<std::size_t>(probs.shape(1));
  const double* data = probs.data();
  const std::int64_t* lab = labels.data();
  for (std::size_t i = 0; i < n; ++i) fn(std::span<const double>(data + i * k, k), to_label(lab[i]));
}

std::vector<PredictionRecord> to_records(const ProbArray& probs, const LabelArray& labels) {
  std::vector<PredictionRecord> out;
  for_each_row(probs, labels, [&](std::span<const double> row, std::uint32_t label) {
    validate_record(row, label);
    out.push_back({{row.begin(), row.end()}, label});
  });
  return out;
}

template <typename Acc>
void add_batch(Acc& acc, const ProbArray& probs, const LabelArray& labels) {
  py::gil_scoped_release release;
  for_each_row(probs, labels, [&](std::span<const double> row, std::uint32_t label) {
    validate_record(row, label);
    acc.add(row, label);
  });
}

py::dict bins_to_dict(std::span<const BinStats> bins) {
  std::vector<std::uint64_t> counts, hits;
  std::vector<double> sums;
  for (const auto& b : bins) {
    counts.push_back(b.count);
    hits.push_back(b.hits);
    sums.push_back(b.prob_sum.value());
  }
  py::dict d;
  d["count"] = counts;
  d["hits"] = hits;
  d["prob_sum"] = sums;
  return d;
}

py::dict curve_to_dict(const ReliabilityCurve& curve) {
  py::list rows;
  for (const auto& r : curve.rows) {
    py::dict row;
    if (r.class_index) row["class"] = *r.class_index;
    row["bin"] = r.bin;
    row["lower"] = r.lower;
    row["upper"] = r.upper;
    row["count"] = r.count;
    row["weight"] = r.weight;
    row["accuracy"] = r.accuracy ? py::object(py::float_(*r.accuracy)) : py::none();
    row["confidence"] = r.confidence ? py::object(py::float_(*r.confidence)) : py::none();
    rows.append(row);
  }
  py::dict d;
  d["metric"] = std::string(metric_name(curve.metric));
  d["bins"] = curve.num_bins;
  d["rows"] = rows;
  d["value"] = curve.aggregate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming ECE, classwise ECE and Full-ECE over equal-width bins.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<EmptyAccumulatorError>(m, "EmptyAccumulatorError", base.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.attr("DEFAULT_CELL_BUDGET") = kDefaultCellBudget;
  m.attr("STABILITY_BINS") = std::vector<std::uint32_t>(kStabilityBins.begin(), kStabilityBins.end());

  m.def("bin_index", &bin_index, py::arg("p"), py::arg("num_bins"),
        "1-based bin of p: [0, 1/M] for the first bin, ((m-1)/M, m/M] after.");
  m.def(
      "softmax", [](std::vector<double> logits) { return softmax(logits); }, py::arg("logits"));
  m.def(
      "apply_temperature",
      [](std::vector<double> probs, double temperature) {
        apply_temperature_in_place(probs, temperature);
        return probs;
      },
      py::arg("probs"), py::arg("temperature"), "p_k^(1/T) renormalized.");

  py::class_<ConfidenceAccumulator>(m, "ConfidenceAccumulator")
      .def(py::init<std::uint32_t>(), py::arg("num_bins"))
      .def(
          "add", [](ConfidenceAccumulator& a, std::vector<double> p, std::uint32_t y) {
            validate_record(p, y);
            a.add(p, y);
          },
          py::arg("probs"), py::arg("label"))
      .def("add_batch", &add_batch<ConfidenceAccumulator>, py::arg("probs"), py::arg("labels"))
      .def("merge", &ConfidenceAccumulator::merge, py::arg("other"))
      .def_property_readonly("num_bins", &ConfidenceAccumulator::num_bins)
      .def_property_readonly("total_records", &ConfidenceAccumulator::total_records)
      .def("bins", [](const ConfidenceAccumulator& a) { return bins_to_dict(a.bins()); });

  py::class_<ClasswiseAccumulator>(m, "ClasswiseAccumulator")
      .def(py::init<std::uint32_t, std::uint32_t, std::uint64_t>(), py::arg("num_classes"), py::arg("num_bins"),
           py::arg("cell_budget") = kDefaultCellBudget)
      .def(
          "add", [](ClasswiseAccumulator& a, std::vector<double> p, std::uint32_t y) {
            validate_record(p, y);
            a.add(p, y);
          },
          py::arg("probs"), py::arg("label"))
      .def("add_batch", &add_batch<ClasswiseAccumulator>, py::arg("probs"), py::arg("labels"))
      .def("merge", &ClasswiseAccumulator::merge, py::arg("other"))
      .def_property_readonly("num_classes", &ClasswiseAccumulator::num_classes)
      .def_property_readonly("num_bins", &ClasswiseAccumulator::num_bins)
      .def_property_readonly("total_records", &ClasswiseAccumulator::total_records)
      .def("cells", [](const ClasswiseAccumulator& a) { return bins_to_dict(a.cells()); });

  py::class_<FullAccumulator>(m, "FullAccumulator")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("num_classes"), py::arg("num_bins"))
      .def(
          "add", [](FullAccumulator& a, std::vector<double> p, std::uint32_t y) {
            validate_record(p, y);
            a.add(p, y);
          }, py::arg("probs"),
          py::arg("label"))
      .def("add_batch", &add_batch<FullAccumulator>, py::arg("probs"), py::arg("labels"))
      .def("merge", &FullAccumulator::merge, py::arg("other"))
      .def_property_readonly("num_classes", &FullAccumulator::num_classes)
      .def_property_readonly("num_bins", &FullAccumulator::num_bins)
      .def_property_readonly("total_records", &FullAccumulator::total_records)
      .def("bins", [](const FullAccumulator& a) { return bins_to_dict(a.bins()); });

  m.def("compute_ece", &compute_ece, py::arg("acc"));
  m.def("compute_cw_ece", &compute_cw_ece, py::arg("acc"));
  m.def(
      "compute_full_ece",
      [](const FullAccumulator& acc, const std::string& normalization) {
        return compute_full_ece(acc, to_normalization(normalization));
      },
      py::arg("acc"), py::arg("normalization") = "paper");
  m.def("merge_full_from_classwise", &merge_full_from_classwise, py::arg("acc"));

  m.def(
      "reliability_curve", [](const ConfidenceAccumulator& a) { return curve_to_dict(reliability_curve(a)); },
      py::arg("acc"));
  m.def(
      "reliability_curve", [](const ClasswiseAccumulator& a) { return curve_to_dict(reliability_curve(a)); },
      py::arg("acc"));
  m.def(
      "reliability_curve",
      [](const FullAccumulator& a, const std::string& normalization) {
        return curve_to_dict(reliability_curve(a, to_normalization(normalization)));
      },
      py::arg("acc"), py::arg("normalization") = "paper");

  m.def(
      "oracle_metrics",
      [](const ProbArray& probs, const LabelArray& labels, std::uint32_t num_bins, const std::string& normalization) {
        const auto o = oracle_metrics(to_records(probs, labels), num_bins, to_normalization(normalization));
        py::dict d;
        d["ece"] = o.ece;
        d["cw-ece"] = o.cw_ece;
        d["full-ece"] = o.full_ece;
        return d;
      },
      py::arg("probs"), py::arg("labels"), py::arg("num_bins"), py::arg("normalization") = "paper",
      "Brute-force reference metrics over stored records.");

  m.def(
      "stability",
      [](const ProbArray& probs, const LabelArray& labels, std::vector<std::uint32_t> bins,
         std::vector<std::string> metrics, const std::string& normalization, std::uint64_t cell_budget) {
        std::vector<Metric> parsed;
        for (const auto& name : metrics) {
          auto metric = parse_metric(name);
          if (!metric) throw DomainError("unknown metric '" + name + "'");
          parsed.push_back(*metric);
        }
        const auto records = to_records(probs, labels);
        VectorStream stream(records);
        const auto reports = stability_sweep(stream, bins, parsed, to_normalization(normalization), cell_budget);
        py::dict out;
        for (const auto& r : reports) {
          py::dict d;
          std::vector<double> values;
          for (const auto& [mm, v] : r.values) values.push_back(v);
          d["bins"] = bins;
          d["values"] = values;
          d["mean"] = r.stats.mean;
          d["stddev"] = r.stats.stddev;
          d["rsd_percent"] = r.stats.rsd_percent ? py::object(py::float_(*r.stats.rsd_percent)) : py::none();
          out[py::str(std::string(metric_name(r.metric)))] = d;
        }
        return out;
      },
      py::arg("probs"), py::arg("labels"),
      py::arg("bins") = std::vector<std::uint32_t>(kStabilityBins.begin(), kStabilityBins.end()),
      py::arg("metrics") = std::vector<std::string>{"cw-ece", "full-ece"}, py::arg("normalization") = "paper",
      py::arg("cell_budget") = kDefaultCellBudget);

  m.def(
      "population_rsd",
      [](std::vector<double> values) {
        const auto s = population_rsd(values);
        py::dict d;
        d["mean"] = s.mean;
        d["stddev"] = s.stddev;
        d["rsd_percent"] = s.rsd_percent ? py::object(py::float_(*s.rsd_percent)) : py::none();
        return d;
      },
      py::arg("values"));

  m.def(
      "token_frequency",
      [](const LabelArray& labels, std::uint32_t num_classes) {
        if (labels.ndim() != 1) throw ShapeError("labels must be 1-D");
        std::vector<std::uint32_t> converted;
        converted.reserve(static_cast<std::size_t>(labels.shape(0)));
        for (py::ssize_t i = 0; i < labels.shape(0); ++i) converted.push_back(to_label(labels.data()[i]));
        const auto rep = token_frequency(converted, num_classes);
        py::dict fractions;
        for (std::size_t b = 0; b < FrequencyReport::kBuckets; ++b) {
          fractions[py::str(FrequencyReport::kBucketNames[b])] = rep.fractions[b];
        }
        return fractions;
      },
      py::arg("labels"), py::arg("num_classes"), "Fraction of classes per occurrence bucket.");

  m.def(
      "generate",
      [](const std::string& kind, std::uint64_t n, std::uint32_t k, double alpha, double zipf_s, double temperature,
         std::uint64_t seed) {
        GeneratorSpec spec;
        auto parsed = parse_generator_kind(kind);
        if (!parsed) throw DomainError("unknown generator kind '" + kind + "'");
        spec.kind = *parsed;
        spec.num_records = n;
        spec.num_classes = k;
        spec.alpha = alpha;
        spec.zipf_exponent = zipf_s;
        spec.temperature = temperature;
        spec.seed = seed;
        validate(spec);
        py::array_t<double> probs({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(k)});
        py::array_t<std::int64_t> labels(static_cast<py::ssize_t>(n));
        double* p = probs.mutable_data();
        std::int64_t* y = labels.mutable_data();
        {
          py::gil_scoped_release release;
          Generator gen(spec);
          PredictionRecord r;
          for (std::uint64_t i = 0; gen.next(r); ++i) {
            std::copy(r.probs.begin(), r.probs.end(), p + i * k);
            y[i] = r.label;
          }
        }
        return py::make_tuple(probs, labels);
      },
      py::arg("kind") = "dirichlet", py::arg("n") = 1000, py::arg("k") = 10, py::arg("alpha") = 1.0,
      py::arg("zipf_s") = 1.2, py::arg("temperature") = 1.0, py::arg("seed") = 0,
      "Synthetic records as (probs[N, K], labels[N]).");
}
