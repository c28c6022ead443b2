#include <cstring>
#include <string>

#include <json.hpp>

#include "fullece/errors.hpp"
#include "fullece/ingest.hpp"

namespace fullece {

namespace {

void put_u32le(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

}  // namespace

FcalWriter::FcalWriter(std::ostream& out, std::uint32_t num_classes)
    : out_(out), num_classes_(num_classes), buffer_(fcal_record_size(num_classes)) {
  if (num_classes < 2) throw DomainError("FCAL needs at least 2 classes");
  unsigned char header[kFcalHeaderSize];
  std::memcpy(header, kFcalMagic, 4);
  header[4] = kFcalVersion;
  put_u32le(header + 5, num_classes);
  out_.write(reinterpret_cast<const char*>(header), sizeof header);
}

void FcalWriter::write(const PredictionRecord& record) {
  if (record.probs.size() != num_classes_) {
    throw ShapeError("record has " + std::to_string(record.probs.size()) + " classes, FCAL stream has " +
                     std::to_string(num_classes_));
  }
  unsigned char* p = buffer_.data();
  for (const double prob : record.probs) {
    const float f = static_cast<float>(prob);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32le(p, bits);
    p += 4;
  }
  put_u32le(p, record.label);
  out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
}

void write_ndjson_record(std::ostream& out, const PredictionRecord& record) {
  const nlohmann::json j{{"probs", record.probs}, {"label", record.label}};
  out << j.dump() << '\n';
}

}  // namespace fullece
