#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hosdetect/common.hpp"
#include "hosdetect/dq.hpp"

namespace hosdetect::recio {

enum class RecordFormat { Abc, Dq };

// Header block of a waveform record file. The file is CSV with leading
// comment lines:
//
//   # hosdetect-record v1
//   # format=abc            (or dq)
//   # sample_rate_hz=4000
//   # nominal_freq_hz=50
//   # seed=1234             (optional)
//   t,ia,ib,ic              (or t,id,iq)
//   0,...
//
// Unrecognized "# key=value" lines are preserved in order through a round
// trip, which lets generators attach provenance (event logs, config hashes).
struct RecordMeta {
  RecordFormat format = RecordFormat::Abc;
  double sample_rate_hz = 0.0;
  double nominal_freq_hz = 0.0;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> extra;
  void validate() const;
};

struct Record {
  RecordMeta meta;
  // Abc: {ia, ib, ic}; Dq: {id, iq}. Equal lengths, finite values.
  std::vector<std::vector<double>> channels;
  std::size_t size() const { return channels.empty() ? 0 : channels.front().size(); }
  void validate() const;
  // Abc only; throws Config for a dq record.
  dq::WaveformRecord to_waveform() const;
};

// Throws Parse with a line-numbered message on malformed input; the time
// column must be uniform (jitter below 1e-9 of the sampling interval) or the
// message names non-uniform sampling.
Record parse_record(std::istream& in);
Record read_record(const std::filesystem::path& path);

// Values serialized with 17 significant digits; rereading reproduces every
// double bit-exactly. Equal inputs produce byte-identical files.
void format_record(std::ostream& out, const Record& rec);
void write_record(const std::filesystem::path& path, const Record& rec);

// FNV-1a 64-bit over raw bytes; digest strings look like "fnv1a64:9ae16a3b...".
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_string(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

}  // namespace hosdetect::recio
