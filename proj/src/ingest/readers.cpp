#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include <json.hpp>

#include "fullece/errors.hpp"
#include "fullece/ingest.hpp"

namespace fullece {

namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::uint32_t read_u32le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

float read_f32le(const unsigned char* p) {
  const std::uint32_t bits = read_u32le(p);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

std::uint32_t json_label(const json& obj) {
  auto it = obj.find("label");
  if (it == obj.end()) throw DomainError("missing \"label\"");
  if (!it->is_number_integer()) throw DomainError("\"label\" must be an integer");
  if (it->is_number_unsigned()) {
    const auto v = it->get<std::uint64_t>();
    if (v > std::numeric_limits<std::uint32_t>::max()) throw DomainError("\"label\" out of range");
    return static_cast<std::uint32_t>(v);
  }
  const auto v = it->get<std::int64_t>();
  if (v < 0) throw DomainError("label " + std::to_string(v) + " is negative");
  return static_cast<std::uint32_t>(v);
}

void json_numbers(const json& arr, const char* field, std::vector<double>& out) {
  if (!arr.is_array()) throw DomainError(std::string("\"") + field + "\" must be an array");
  out.clear();
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw DomainError(std::string("\"") + field + "\" must contain only numbers");
    out.push_back(v.get<double>());
  }
}

void densify_sparse(const json& obj, PredictionRecord& out) {
  const auto k_it = obj.find("k");
  if (k_it == obj.end() || !k_it->is_number_unsigned()) throw DomainError("sparse record needs integer \"k\"");
  const auto k64 = k_it->get<std::uint64_t>();
  if (k64 < 2 || k64 > std::numeric_limits<std::uint32_t>::max()) throw DomainError("\"k\" out of range");
  const auto k = static_cast<std::uint32_t>(k64);

  const auto rest_it = obj.find("rest_mass");
  if (rest_it == obj.end() || !rest_it->is_number()) throw DomainError("sparse record needs numeric \"rest_mass\"");
  const double rest = rest_it->get<double>();
  if (!std::isfinite(rest) || rest < 0.0) throw DomainError("\"rest_mass\" must be finite and non-negative");

  const auto top_it = obj.find("top");
  if (top_it == obj.end() || !top_it->is_array()) throw DomainError("sparse record needs array \"top\"");

  out.probs.assign(k, 0.0);
  std::vector<bool> listed(k, false);
  std::uint32_t listed_count = 0;
  for (const auto& pair : *top_it) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number()) {
      throw DomainError("\"top\" entries must be [index, probability]");
    }
    const auto idx = pair[0].get<std::uint64_t>();
    if (idx >= k) throw DomainError("sparse index " + std::to_string(idx) + " outside [0, k)");
    if (listed[idx]) throw DomainError("sparse index " + std::to_string(idx) + " listed twice");
    listed[idx] = true;
    ++listed_count;
    out.probs[idx] = pair[1].get<double>();
  }
  const std::uint32_t unlisted = k - listed_count;
  if (unlisted == 0) {
    if (rest > kProbSumTolerance) throw DomainError("\"rest_mass\" > 0 but every class is listed");
  } else {
    const double share = rest / static_cast<double>(unlisted);
    for (std::uint32_t c = 0; c < k; ++c) {
      if (!listed[c]) out.probs[c] = share;
    }
  }
  out.label = json_label(obj);
}

}  // namespace

std::string_view format_name(Format f) {
  switch (f) {
    case Format::Ndjson:
      return "ndjson";
    case Format::Fcal:
      return "fcal";
    case Format::SparseNdjson:
      return "sparse-ndjson";
  }
  return "unknown";
}

std::optional<Format> parse_format(std::string_view name) {
  if (name == "ndjson" || name == "jsonl") return Format::Ndjson;
  if (name == "fcal") return Format::Fcal;
  if (name == "sparse-ndjson" || name == "sparse") return Format::SparseNdjson;
  return std::nullopt;
}

std::optional<Format> format_from_path(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".sparse.ndjson") || ends_with(".sparse.jsonl")) return Format::SparseNdjson;
  if (ends_with(".fcal")) return Format::Fcal;
  if (ends_with(".ndjson") || ends_with(".jsonl")) return Format::Ndjson;
  return std::nullopt;
}

void check_ingested(PredictionRecord& record, const RecordSource& source, std::uint64_t record_index,
                    std::optional<std::uint64_t> byte_offset) {
  auto fail = [&](const std::string& why) { throw ParseError(why, record_index, byte_offset); };
  const auto& probs = record.probs;
  if (probs.size() < 2) fail("record has fewer than 2 classes");
  if (source.num_classes && probs.size() != *source.num_classes) {
    fail("record has " + std::to_string(probs.size()) + " classes, expected " + std::to_string(*source.num_classes));
  }
  if (record.label >= probs.size()) {
    fail("label " + std::to_string(record.label) + " outside [0, " + std::to_string(probs.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!std::isfinite(probs[k]) || probs[k] < 0.0) {
      fail("invalid probability " + std::to_string(probs[k]) + " at class " + std::to_string(k));
    }
    sum += probs[k];
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    if (!source.renormalize || !(sum > 0.0)) fail("probabilities sum to " + std::to_string(sum) + ", not 1");
    for (double& p : record.probs) p /= sum;
  }
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 1.0) fail("probability " + std::to_string(probs[k]) + " above 1 at class " + std::to_string(k));
  }
}

// --- NDJSON -----------------------------------------------------------------

NdjsonReader::NdjsonReader(std::istream& in, RecordSource source, std::uint64_t begin_offset,
                           std::uint64_t end_offset, std::uint64_t first_record_index)
    : in_(in), source_(std::move(source)), offset_(begin_offset), end_offset_(end_offset) {
  next_index_ = first_record_index;
  if (begin_offset != 0) in_.seekg(static_cast<std::streamoff>(begin_offset));
}

bool NdjsonReader::next(PredictionRecord& out) {
  while (offset_ < end_offset_ && std::getline(in_, line_)) {
    const std::uint64_t line_start = offset_;
    offset_ += line_.size() + (in_.eof() ? 0 : 1);
    if (is_blank(line_)) continue;
    const std::uint64_t index = next_index_;
    try {
      parse_line(line_, out);
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), index, line_start);
    } catch (const Error& e) {
      throw ParseError(e.what(), index, line_start);
    }
    check_ingested(out, source_, index, line_start);
    if (!source_.num_classes) source_.num_classes = out.num_classes();
    ++next_index_;
    return true;
  }
  if (in_.bad()) throw ParseError("I/O error while reading NDJSON", next_index_, offset_);
  return false;
}

void NdjsonReader::parse_line(std::string_view line, PredictionRecord& out) {
  const json obj = json::parse(line);
  if (!obj.is_object()) throw DomainError("record must be a JSON object");

  const bool has_probs = obj.contains("probs");
  const bool has_logits = obj.contains("logits");
  const bool has_top = obj.contains("top");

  if (has_top) {
    if (source_.format != Format::SparseNdjson) {
      throw DomainError("sparse record in a dense NDJSON stream (use format sparse-ndjson)");
    }
    if (has_probs || has_logits) throw DomainError("sparse record must not also carry \"probs\" or \"logits\"");
    densify_sparse(obj, out);
    saw_sparse_ = true;
    return;
  }
  if (has_probs == has_logits) throw DomainError("record needs exactly one of \"probs\" or \"logits\"");
  if (has_probs) {
    json_numbers(obj["probs"], "probs", out.probs);
  } else {
    json_numbers(obj["logits"], "logits", scratch_);
    softmax_into(scratch_, out.probs);
  }
  out.label = json_label(obj);
}

// --- FCAL -------------------------------------------------------------------

std::uint32_t read_fcal_header(std::istream& in) {
  unsigned char header[kFcalHeaderSize];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != static_cast<std::streamsize>(sizeof header)) {
    throw ParseError("truncated FCAL header", std::nullopt, 0);
  }
  if (std::memcmp(header, kFcalMagic, 4) != 0) throw ParseError("bad FCAL magic", std::nullopt, 0);
  if (header[4] != kFcalVersion) {
    throw ParseError("unsupported FCAL version " + std::to_string(header[4]), std::nullopt, 4);
  }
  const std::uint32_t k = read_u32le(header + 5);
  if (k < 2) throw ParseError("FCAL class count must be at least 2", std::nullopt, 5);
  return k;
}

FcalReader::FcalReader(std::istream& in, RecordSource source, std::uint64_t first_record,
                       std::uint64_t record_limit)
    : in_(in), source_(std::move(source)), remaining_(record_limit) {
  num_classes_ = read_fcal_header(in_);
  if (source_.num_classes && *source_.num_classes != num_classes_) {
    throw ParseError("FCAL header declares K=" + std::to_string(num_classes_) + ", expected " +
                         std::to_string(*source_.num_classes),
                     std::nullopt, 5);
  }
  source_.num_classes = num_classes_;
  next_index_ = first_record;
  if (first_record != 0) {
    in_.seekg(static_cast<std::streamoff>(first_record * fcal_record_size(num_classes_)), std::ios::cur);
    if (!in_) throw ParseError("cannot seek to FCAL record", first_record, std::nullopt);
  }
  const std::uint64_t rec = fcal_record_size(num_classes_);
  const std::uint64_t per_chunk = std::max<std::uint64_t>(1, (std::uint64_t{1} << 20) / rec);
  buffer_.resize(per_chunk * rec);
}

bool FcalReader::refill() {
  const std::uint64_t rec = fcal_record_size(num_classes_);
  const std::uint64_t want = std::min<std::uint64_t>(buffer_.size() / rec, remaining_) * rec;
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(want));
  buffer_len_ = static_cast<std::size_t>(in_.gcount());
  buffer_pos_ = 0;
  if (buffer_len_ % rec != 0) {
    const std::uint64_t index = next_index_ + buffer_len_ / rec;
    throw ParseError("truncated FCAL record", index, kFcalHeaderSize + index * rec);
  }
  return buffer_len_ != 0;
}

bool FcalReader::next(PredictionRecord& out) {
  if (remaining_ == 0) return false;
  if (buffer_pos_ == buffer_len_ && !refill()) return false;
  const unsigned char* p = buffer_.data() + buffer_pos_;
  out.probs.resize(num_classes_);
  for (std::uint32_t k = 0; k < num_classes_; ++k, p += 4) out.probs[k] = read_f32le(p);
  out.label = read_u32le(p);
  buffer_pos_ += fcal_record_size(num_classes_);
  const std::uint64_t index = next_index_;
  check_ingested(out, source_, index, kFcalHeaderSize + index * fcal_record_size(num_classes_));
  ++next_index_;
  --remaining_;
  return true;
}

// --- helpers ----------------------------------------------------------------

std::unique_ptr<RecordReader> open_reader(const RecordSource& source, std::istream& in) {
  if (source.format == Format::Fcal) return std::make_unique<FcalReader>(in, source);
  return std::make_unique<NdjsonReader>(in, source);
}

std::vector<PredictionRecord> read_all(const RecordSource& source, std::istream& in) {
  auto reader = open_reader(source, in);
  std::vector<PredictionRecord> records;
  PredictionRecord r;
  while (reader->next(r)) records.push_back(r);
  return records;
}

std::vector<ByteShard> plan_ndjson_shards(std::istream& in, unsigned parts) {
  parts = std::max(parts, 1u);
  in.clear();
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  std::vector<ByteShard> shards;
  ByteShard current{0, 0, 0};
  std::uint64_t offset = 0;
  std::uint64_t records = 0;
  unsigned next_cut = 1;
  std::string line;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = offset;
    offset += line.size() + (in.eof() ? 0 : 1);
    if (next_cut < parts && line_start > current.begin && line_start >= size * next_cut / parts) {
      current.end = line_start;
      shards.push_back(current);
      current = ByteShard{line_start, 0, records};
      while (next_cut < parts && line_start >= size * next_cut / parts) ++next_cut;
    }
    if (!is_blank(line)) ++records;
  }
  current.end = offset;
  shards.push_back(current);
  in.clear();
  in.seekg(0);
  return shards;
}

std::vector<ByteShard> plan_fcal_shards(std::uint64_t record_count, unsigned parts) {
  parts = std::max(parts, 1u);
  std::vector<ByteShard> shards;
  for (unsigned i = 0; i < parts; ++i) {
    const std::uint64_t begin = record_count * i / parts;
    const std::uint64_t end = record_count * (i + 1) / parts;
    if (end > begin) shards.push_back({begin, end, begin});
  }
  if (shards.empty()) shards.push_back({0, 0, 0});
  return shards;
}

}  // namespace fullece
