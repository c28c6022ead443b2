#include "fullece/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fullece/analysis.hpp"
#include "fullece/checkpoint.hpp"
#include "fullece/errors.hpp"
#include "fullece/evaluate.hpp"
#include "fullece/ingest.hpp"
#include "fullece/report_io.hpp"
#include "fullece/synth.hpp"

namespace fullece::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kSparseWarning =
    "sparse records were densified with the tail-uniform rule; metrics are exact for the "
    "densified surrogate, not the original distribution";

/// Bad flags, missing files, budget violations.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t default_budget() {
  if (const char* env = std::getenv(kBudgetEnvVar)) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string(kBudgetEnvVar) + " must be a positive integer");
  }
  return kDefaultCellBudget;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<Metric> parse_metric_list(const std::string& s) {
  std::vector<Metric> out;
  for (const auto& name : split_list(s)) {
    auto m = parse_metric(name);
    if (!m) throw UsageError("unknown metric '" + name + "' (expected ece, cw-ece, full-ece)");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw UsageError("empty metric list");
  return out;
}

std::vector<std::uint32_t> parse_bin_list(const std::string& s) {
  std::vector<std::uint32_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v == 0 || v > std::numeric_limits<std::uint32_t>::max()) {
      throw UsageError("invalid bin count '" + item + "'");
    }
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) throw UsageError("empty bin list");
  return out;
}

Normalization parse_norm(const std::string& s) {
  auto n = parse_normalization(s);
  if (!n) throw UsageError("unknown normalization '" + s + "' (expected paper or per-entry)");
  return *n;
}

/// Options shared by every subcommand that reads records.
struct InputOptions {
  std::string input;
  std::string format;
  std::uint32_t num_classes = 0;
  bool renormalize = false;

  void attach(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("--input,-i", input, "Record file");
    if (required) opt->required();
    app->add_option("--format", format, "ndjson | fcal | sparse-ndjson (default: from extension)");
    app->add_option("--k", num_classes, "Declared class count K");
    app->add_flag("--renormalize", renormalize, "Rescale records whose probabilities do not sum to 1");
  }

  RecordSource source_for(const std::string& path) const {
    RecordSource src;
    if (!format.empty()) {
      auto f = parse_format(format);
      if (!f) throw UsageError("unknown format '" + format + "'");
      src.format = *f;
    } else if (auto f = format_from_path(path)) {
      src.format = *f;
    } else {
      throw UsageError("cannot infer format of '" + path + "'; pass --format");
    }
    if (num_classes != 0) {
      if (num_classes < 2) throw UsageError("--k must be at least 2");
      src.num_classes = num_classes;
    }
    src.renormalize = renormalize;
    return src;
  }

  json echo(const RecordSource& src) const {
    json j{{"input", input}, {"format", format_name(src.format)}, {"renormalize", renormalize}};
    j["k"] = num_classes != 0 ? json(num_classes) : json(nullptr);
    return j;
  }
};

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("input file not found: " + path);
}

struct OutputOptions {
  std::string path;
  std::string format = "json";

  void attach(CLI::App* app) {
    app->add_option("--output,-o", path, "Write the report here instead of standard output");
    app->add_option("--output-format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  }

  template <typename CsvWriter>
  void emit(std::ostream& out, const json& report, CsvWriter&& csv) const {
    std::ofstream file;
    std::ostream* dst = &out;
    if (!path.empty()) {
      file.open(path, std::ios::binary);
      if (!file) throw UsageError("cannot open output file " + path);
      dst = &file;
    }
    if (format == "csv") {
      csv(*dst);
    } else {
      *dst << report.dump(2) << '\n';
    }
  }
};

json report_header(const char* command, json config) {
  return json{{"schema_version", kReportSchemaVersion},
              {"command", command},
              {"generated_at", timestamp()},
              {"config", std::move(config)}};
}

// A reader that owns its file.
struct FileStream final : RecordStream {
  std::ifstream in;
  std::unique_ptr<RecordReader> reader;
  bool next(PredictionRecord& out) override { return reader->next(out); }
  std::optional<std::uint32_t> num_classes() const override { return reader->num_classes(); }
  bool saw_sparse() const { return reader->saw_sparse(); }
};

std::unique_ptr<FileStream> open_file_stream(const std::string& path, const RecordSource& src) {
  auto s = std::make_unique<FileStream>();
  s->in.open(path, std::ios::binary);
  if (!s->in) throw UsageError("cannot open " + path);
  s->reader = open_reader(src, s->in);
  return s;
}

void warn_sparse(std::ostream& err, json& report) {
  err << "warning: " << kSparseWarning << '\n';
  report["warnings"].push_back(kSparseWarning);
}

// --- subcommands ----------------------------------------------------------------

struct EvalCommand {
  InputOptions input;
  OutputOptions output;
  std::uint32_t bins = 10;
  std::string metrics = "ece,cw-ece,full-ece";
  std::string normalization = "paper";
  std::uint64_t budget = 0;
  unsigned threads = 1;
  std::string save_state;
  std::string resume_from;

  void attach(CLI::App* app) {
    input.attach(app);
    output.attach(app);
    app->add_option("--bins,-M", bins, "Number of equispaced bins")->check(CLI::PositiveNumber);
    app->add_option("--metrics", metrics, "Comma list of ece, cw-ece, full-ece");
    app->add_option("--normalization", normalization, "Full-ECE divisor: paper (N) | per-entry (N*K)");
    app->add_option("--memory-budget", budget, "Classwise cell budget (default 2^28 or $FULLECE_MEMORY_BUDGET)");
    app->add_option("--threads,-j", threads, "Ingestion shards")->check(CLI::PositiveNumber);
    app->add_option("--save-state", save_state, "Write accumulator checkpoint JSON");
    app->add_option("--resume-from", resume_from, "Merge a previously saved checkpoint before reporting");
  }

  EvalConfig config() const {
    EvalConfig c;
    c.binning.num_bins = bins;
    c.binning.normalization = parse_norm(normalization);
    const auto list = parse_metric_list(metrics);
    c.metrics = {list.begin(), list.end()};
    c.cell_budget = budget != 0 ? budget : default_budget();
    c.threads = threads;
    return c;
  }

  json config_echo(const RecordSource& src, const EvalConfig& c) const {
    json j = input.echo(src);
    j["bins"] = bins;
    json names = json::array();
    for (const auto m : c.metrics) names.push_back(metric_name(m));
    j["metrics"] = names;
    j["normalization"] = normalization_name(c.binning.normalization);
    j["memory_budget"] = c.cell_budget;
    j["threads"] = threads;
    return j;
  }

  // Loads input (and any resumed state) into an accumulator set.
  EvalResult accumulate(const RecordSource& src, const EvalConfig& c) const {
    require_file(input.input);
    EvalResult result = evaluate_file(input.input, src, c);
    if (!resume_from.empty()) {
      std::ifstream in(resume_from);
      if (!in) throw UsageError("cannot open checkpoint " + resume_from);
      json state;
      try {
        state = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError("malformed checkpoint " + resume_from + ": " + e.what());
      }
      AccumulatorSet prior;
      const auto k = state.at("num_classes").get<std::uint32_t>();
      prior = AccumulatorSet(k, c);
      if (prior.confidence()) {
        if (!state.contains("confidence")) throw UsageError("checkpoint lacks confidence statistics");
        prior.confidence() = confidence_from_checkpoint(state["confidence"]);
      }
      if (prior.classwise()) {
        if (!state.contains("classwise")) throw UsageError("checkpoint lacks classwise statistics");
        prior.classwise() = classwise_from_checkpoint(state["classwise"], c.cell_budget);
      }
      if (prior.full()) {
        if (!state.contains("full")) throw UsageError("checkpoint lacks full statistics");
        prior.full() = full_from_checkpoint(state["full"]);
      }
      prior.merge(result.accumulators);
      result.accumulators = std::move(prior);
    }
    if (!save_state.empty()) {
      const auto& acc = result.accumulators;
      json state{{"schema_version", kCheckpointSchemaVersion}, {"num_classes", acc.num_classes()}, {"num_bins", bins}};
      if (acc.confidence()) state["confidence"] = to_checkpoint(*acc.confidence());
      if (acc.classwise()) state["classwise"] = to_checkpoint(*acc.classwise());
      if (acc.full()) state["full"] = to_checkpoint(*acc.full());
      std::ofstream out(save_state);
      if (!out) throw UsageError("cannot write checkpoint " + save_state);
      out << state.dump() << '\n';
    }
    if (result.accumulators.total_records() == 0) {
      throw EmptyAccumulatorError("input contains no records");
    }
    return result;
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RecordSource src = input.source_for(input.input);
    const EvalConfig c = config();
    EvalResult result = accumulate(src, c);
    const auto values = result.accumulators.metrics(c.binning.normalization);
    json report = report_header("eval", config_echo(src, c));
    report["records"] = result.accumulators.total_records();
    report["num_classes"] = result.accumulators.num_classes();
    report["metrics"] = to_json(values);
    report["warnings"] = json::array();
    if (result.saw_sparse) warn_sparse(err, report);
    output.emit(out, report, [&](std::ostream& o) { write_csv(o, values); });
    return kExitOk;
  }
};

struct ReliabilityCommand {
  EvalCommand eval;
  std::string metric = "full-ece";

  void attach(CLI::App* app) {
    eval.attach(app);
    app->remove_option(app->get_option("--metrics"));
    app->add_option("--metric", metric, "ece | cw-ece | full-ece");
  }

  int run(std::ostream& out, std::ostream& err) {
    auto m = parse_metric(metric);
    if (!m) throw UsageError("unknown metric '" + metric + "'");
    eval.metrics = std::string(metric_name(*m));
    const RecordSource src = eval.input.source_for(eval.input.input);
    const EvalConfig c = eval.config();
    EvalResult result = eval.accumulate(src, c);
    const auto& acc = result.accumulators;
    ReliabilityCurve curve;
    switch (*m) {
      case Metric::Ece:
        curve = reliability_curve(*acc.confidence());
        break;
      case Metric::ClasswiseEce:
        curve = reliability_curve(*acc.classwise());
        break;
      case Metric::FullEce:
        curve = reliability_curve(*acc.full(), c.binning.normalization);
        break;
    }
    json report = report_header("reliability", eval.config_echo(src, c));
    report["curve"] = to_json(curve);
    report["value"] = curve.aggregate();
    report["warnings"] = json::array();
    if (result.saw_sparse) warn_sparse(err, report);
    eval.output.emit(out, report, [&](std::ostream& o) { write_csv(o, curve); });
    return kExitOk;
  }
};

struct StabilityCommand {
  InputOptions input;
  OutputOptions output;
  std::string bins = "5,10,20,50,100,200,500";
  std::string metrics = "cw-ece,full-ece";
  std::string normalization = "paper";
  std::uint64_t budget = 0;

  void attach(CLI::App* app) {
    input.attach(app);
    output.attach(app);
    app->add_option("--bins,-M", bins, "Comma list of bin counts");
    app->add_option("--metrics", metrics, "Comma list of cw-ece, full-ece (ece also accepted)");
    app->add_option("--normalization", normalization, "Full-ECE divisor: paper | per-entry");
    app->add_option("--memory-budget", budget, "Classwise cell budget");
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RecordSource src = input.source_for(input.input);
    const auto bin_list = parse_bin_list(bins);
    const auto metric_list = parse_metric_list(metrics);
    const Normalization norm = parse_norm(normalization);
    const std::uint64_t cell_budget = budget != 0 ? budget : default_budget();
    require_file(input.input);
    auto stream = open_file_stream(input.input, src);
    const auto reports = stability_sweep(*stream, bin_list, metric_list, norm, cell_budget);

    json cfg = input.echo(src);
    cfg["bins"] = bin_list;
    json names = json::array();
    for (const auto m : metric_list) names.push_back(metric_name(m));
    cfg["metrics"] = names;
    cfg["normalization"] = normalization_name(norm);
    cfg["memory_budget"] = cell_budget;
    json report = report_header("stability", cfg);
    report["reports"] = to_json(reports);
    report["warnings"] = json::array();
    if (stream->saw_sparse()) warn_sparse(err, report);
    output.emit(out, report, [&](std::ostream& o) { write_csv(o, reports); });
    return kExitOk;
  }
};

struct TokenFreqCommand {
  InputOptions input;
  OutputOptions output;

  void attach(CLI::App* app) {
    input.attach(app);
    output.attach(app);
  }

  int run(std::ostream& out, std::ostream&) const {
    const RecordSource src = input.source_for(input.input);
    require_file(input.input);
    auto stream = open_file_stream(input.input, src);
    std::optional<TokenCounter> counter;
    if (auto k = stream->num_classes()) counter.emplace(*k);
    PredictionRecord r;
    while (stream->next(r)) {
      if (!counter) counter.emplace(r.num_classes());
      counter->add(r.label);
    }
    if (!counter) throw UsageError("cannot determine K for an empty input; pass --k");
    const FrequencyReport rep = counter->report();
    json report = report_header("tokenfreq", input.echo(src));
    report["frequency"] = to_json(rep);
    output.emit(out, report, [&](std::ostream& o) { write_csv(o, rep); });
    return kExitOk;
  }
};

struct SeriesCommand {
  InputOptions input;
  OutputOptions output;
  std::vector<std::string> checkpoints;
  std::uint32_t bins = 10;
  std::string normalization = "paper";

  void attach(CLI::App* app) {
    input.attach(app, false);
    output.attach(app);
    app->add_option("--checkpoint,-c", checkpoints, "label=path, repeated in training order")->required();
    app->add_option("--bins,-M", bins, "Number of equispaced bins")->check(CLI::PositiveNumber);
    app->add_option("--normalization", normalization, "Full-ECE divisor: paper | per-entry");
  }

  int run(std::ostream& out, std::ostream&) const {
    if (!input.input.empty()) throw UsageError("series takes --checkpoint label=path, not --input");
    const Normalization norm = parse_norm(normalization);
    std::vector<CheckpointInput> inputs;
    json echo = json::array();
    for (const auto& spec : checkpoints) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        throw UsageError("checkpoint must be label=path, got '" + spec + "'");
      }
      std::string label = spec.substr(0, eq);
      std::string path = spec.substr(eq + 1);
      require_file(path);
      const RecordSource src = input.source_for(path);
      inputs.push_back({label, [path, src]() -> std::unique_ptr<RecordStream> { return open_file_stream(path, src); }});
      echo.push_back({{"checkpoint", label}, {"input", path}, {"format", format_name(src.format)}});
    }
    const SeriesReport rep = checkpoint_series(inputs, bins, norm);
    json report = report_header("series", {{"checkpoints", echo},
                                           {"bins", bins},
                                           {"normalization", normalization_name(norm)},
                                           {"renormalize", input.renormalize}});
    report["series"] = to_json(rep);
    output.emit(out, report, [&](std::ostream& o) { write_csv(o, rep); });
    return kExitOk;
  }
};

struct SynthCommand {
  std::string kind = "dirichlet";
  std::uint64_t n = 1000;
  std::uint32_t k = 10;
  double alpha = 1.0;
  double zipf_s = 1.2;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format;

  void attach(CLI::App* app) {
    app->add_option("--kind", kind, "dirichlet | zipf | onehot");
    app->add_option("--n", n, "Number of records");
    app->add_option("--k", k, "Number of classes");
    app->add_option("--alpha", alpha, "Dirichlet concentration");
    app->add_option("--zipf-s", zipf_s, "Zipf exponent of the class prior");
    app->add_option("--temperature", temperature, "Distortion applied after the label is drawn");
    app->add_option("--seed", seed, "64-bit seed");
    app->add_option("--out,-o", out_path, "Output file")->required();
    app->add_option("--format", format, "ndjson | fcal (default: from extension, else fcal)");
  }

  int run(std::ostream& out, std::ostream&) const {
    GeneratorSpec spec;
    auto parsed = parse_generator_kind(kind);
    if (!parsed) throw UsageError("unknown generator kind '" + kind + "'");
    spec.kind = *parsed;
    spec.num_records = n;
    spec.num_classes = k;
    spec.alpha = alpha;
    spec.zipf_exponent = zipf_s;
    spec.temperature = temperature;
    spec.seed = seed;
    try {
      validate(spec);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }

    Format fmt = Format::Fcal;
    if (!format.empty()) {
      auto f = parse_format(format);
      if (!f || *f == Format::SparseNdjson) throw UsageError("synth writes ndjson or fcal");
      fmt = *f;
    } else if (auto f = format_from_path(out_path); f && *f != Format::SparseNdjson) {
      fmt = *f;
    }

    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw UsageError("cannot open output file " + out_path);
    Generator gen(spec);
    PredictionRecord r;
    if (fmt == Format::Fcal) {
      FcalWriter writer(file, spec.num_classes);
      while (gen.next(r)) writer.write(r);
    } else {
      while (gen.next(r)) write_ndjson_record(file, r);
    }
    file.close();
    if (!file) throw UsageError("failed writing " + out_path);

    json cfg{{"kind", generator_kind_name(spec.kind)},
             {"n", spec.num_records},
             {"k", spec.num_classes},
             {"alpha", spec.alpha},
             {"zipf_s", spec.zipf_exponent},
             {"temperature", spec.temperature},
             {"seed", spec.seed},
             {"out", out_path},
             {"format", format_name(fmt)}};
    json report = report_header("synth", cfg);
    report["records"] = spec.num_records;
    out << report.dump(2) << '\n';
    return kExitOk;
  }
};

void error_line(std::ostream& err, const char* kind, const std::string& message,
                std::optional<std::uint64_t> record = std::nullopt, std::optional<std::uint64_t> offset = std::nullopt) {
  json j{{"error", kind}, {"message", message}};
  if (record) j["record_index"] = *record;
  if (offset) j["byte_offset"] = *offset;
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming ECE / classwise-ECE / Full-ECE calibration metrics", "fullece"};
  app.require_subcommand(1);

  EvalCommand eval_cmd;
  StabilityCommand stability_cmd;
  TokenFreqCommand tokenfreq_cmd;
  SynthCommand synth_cmd;
  ReliabilityCommand reliability_cmd;
  SeriesCommand series_cmd;

  auto* eval_app = app.add_subcommand("eval", "Compute calibration metrics of a record file");
  eval_cmd.attach(eval_app);
  auto* stability_app = app.add_subcommand("stability", "Metric stability (RSD) across bin counts");
  stability_cmd.attach(stability_app);
  auto* tokenfreq_app = app.add_subcommand("tokenfreq", "Bucket classes by label occurrence count");
  tokenfreq_cmd.attach(tokenfreq_app);
  auto* synth_app = app.add_subcommand("synth", "Write a synthetic record stream");
  synth_cmd.attach(synth_app);
  auto* reliability_app = app.add_subcommand("reliability", "Export a reliability table");
  reliability_cmd.attach(reliability_app);
  auto* series_app = app.add_subcommand("series", "Full-ECE across training checkpoints");
  series_cmd.attach(series_app);

  std::vector<const char*> argv{"fullece"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_line(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (eval_app->parsed()) return eval_cmd.run(out, err);
    if (stability_app->parsed()) return stability_cmd.run(out, err);
    if (tokenfreq_app->parsed()) return tokenfreq_cmd.run(out, err);
    if (synth_app->parsed()) return synth_cmd.run(out, err);
    if (reliability_app->parsed()) return reliability_cmd.run(out, err);
    if (series_app->parsed()) return series_cmd.run(out, err);
  } catch (const UsageError& e) {
    error_line(err, "usage", e.what());
    return kExitUsage;
  } catch (const BudgetError& e) {
    error_line(err, "budget", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    error_line(err, "data", e.reason(), e.record_index(), e.byte_offset());
    return kExitData;
  } catch (const Error& e) {
    error_line(err, "data", e.what());
    return kExitData;
  } catch (const json::exception& e) {
    error_line(err, "data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    error_line(err, "internal", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace fullece::cli
