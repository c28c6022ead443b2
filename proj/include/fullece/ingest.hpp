#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fullece/record.hpp"

namespace fullece {

enum class Format { Ndjson, Fcal, SparseNdjson };

std::string_view format_name(Format f);
std::optional<Format> parse_format(std::string_view name);

/// Guess a format from a file extension (.fcal, .ndjson/.jsonl, .sparse.ndjson).
std::optional<Format> format_from_path(const std::filesystem::path& path);

struct RecordSource {
  Format format = Format::Ndjson;
  /// Declared class count; taken from the data when absent.
  std::optional<std::uint32_t> num_classes;
  std::optional<std::uint64_t> record_count;
  /// Rescale records whose probabilities miss the sum tolerance instead of
  /// rejecting them.
  bool renormalize = false;
};

/// Numerically safe softmax (max-subtracted). Throws DomainError on a
/// non-finite logit.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::vector<double>& out);

// --- FCAL binary layout -----------------------------------------------------
// "FCAL" | u8 version=1 | u32le K | records of (K x f32le, u32le label)

inline constexpr char kFcalMagic[4] = {'F', 'C', 'A', 'L'};
inline constexpr std::uint8_t kFcalVersion = 1;
inline constexpr std::uint64_t kFcalHeaderSize = 9;

inline std::uint64_t fcal_record_size(std::uint32_t num_classes) {
  return 4 * std::uint64_t{num_classes} + 4;
}

/// Streaming record reader. `records_read()` counts records yielded so far,
/// offset by the first record index of the shard.
class RecordReader : public RecordStream {
 public:
  std::uint64_t next_record_index() const { return next_index_; }
  /// True once any sparse (densified) record has been produced.
  bool saw_sparse() const { return saw_sparse_; }

 protected:
  std::uint64_t next_index_ = 0;
  bool saw_sparse_ = false;
};

/// Reads newline-delimited JSON records. Dense lines carry exactly one of
/// "probs"/"logits" plus "label"; sparse lines carry "top", "rest_mass", "k"
/// and "label". Blank lines are skipped and do not count as records.
///
/// The reader consumes bytes [begin_offset, end_offset) of the stream;
/// `begin_offset` must sit at a line start, and `first_record_index` is the
/// number of records before it (used in error messages).
class NdjsonReader final : public RecordReader {
 public:
  NdjsonReader(std::istream& in, RecordSource source, std::uint64_t begin_offset = 0,
               std::uint64_t end_offset = std::numeric_limits<std::uint64_t>::max(),
               std::uint64_t first_record_index = 0);

  bool next(PredictionRecord& out) override;
  std::optional<std::uint32_t> num_classes() const override { return source_.num_classes; }

 private:
  void parse_line(std::string_view line, PredictionRecord& out);

  std::istream& in_;
  RecordSource source_;
  std::uint64_t offset_;
  std::uint64_t end_offset_;
  std::string line_;
  std::vector<double> scratch_;
};

/// Reads FCAL binary records [first_record, first_record + record_limit).
class FcalReader final : public RecordReader {
 public:
  FcalReader(std::istream& in, RecordSource source, std::uint64_t first_record = 0,
             std::uint64_t record_limit = std::numeric_limits<std::uint64_t>::max());

  bool next(PredictionRecord& out) override;
  std::optional<std::uint32_t> num_classes() const override { return num_classes_; }

 private:
  bool refill();

  std::istream& in_;
  RecordSource source_;
  std::uint32_t num_classes_ = 0;
  std::uint64_t remaining_;
  std::vector<unsigned char> buffer_;
  std::size_t buffer_pos_ = 0;
  std::size_t buffer_len_ = 0;
};

/// Header of an FCAL stream; throws ParseError on bad magic/version.
std::uint32_t read_fcal_header(std::istream& in);

/// Opens a reader for a whole stream.
std::unique_ptr<RecordReader> open_reader(const RecordSource& source, std::istream& in);

/// Reads every record of a stream into memory.
std::vector<PredictionRecord> read_all(const RecordSource& source, std::istream& in);

/// Applies validation (and optional renormalization) to a dense record.
/// Throws ParseError naming `record_index`/`byte_offset`.
void check_ingested(PredictionRecord& record, const RecordSource& source, std::uint64_t record_index,
                    std::optional<std::uint64_t> byte_offset);

// --- sharding ---------------------------------------------------------------

struct ByteShard {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t first_record = 0;
};

/// Splits an NDJSON stream into at most `parts` line-aligned byte ranges of
/// roughly equal size, counting records before each range.
std::vector<ByteShard> plan_ndjson_shards(std::istream& in, unsigned parts);

/// Splits `record_count` FCAL records into `parts` contiguous ranges
/// (begin/end are record indices).
std::vector<ByteShard> plan_fcal_shards(std::uint64_t record_count, unsigned parts);

// --- writers ------------------------------------------------------------------

class FcalWriter {
 public:
  FcalWriter(std::ostream& out, std::uint32_t num_classes);
  void write(const PredictionRecord& record);

 private:
  std::ostream& out_;
  std::uint32_t num_classes_;
  std::vector<unsigned char> buffer_;
};

/// Writes `{"probs":[...],"label":y}` followed by a newline.
void write_ndjson_record(std::ostream& out, const PredictionRecord& record);

}  // namespace fullece
