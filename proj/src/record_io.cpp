#include "hosdetect/record_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hosdetect::recio {

namespace {

constexpr const char* kMagic = "# hosdetect-record v1";

const char* header_of(RecordFormat f) {
  return f == RecordFormat::Abc ? "t,ia,ib,ic" : "t,id,iq";
}

std::size_t channel_count(RecordFormat f) { return f == RecordFormat::Abc ? 3 : 2; }

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& msg) {
  fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    parse_fail(line_no, "bad number '" + std::string(field) + "'");
  if (!std::isfinite(v)) parse_fail(line_no, "non-finite value");
  return v;
}

void print17(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void RecordMeta::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    fail(ErrorKind::Config, "sample_rate_hz must be positive");
  if (!(nominal_freq_hz > 0.0) || !std::isfinite(nominal_freq_hz))
    fail(ErrorKind::Config, "nominal_freq_hz must be positive");
}

void Record::validate() const {
  meta.validate();
  if (channels.size() != channel_count(meta.format))
    fail(ErrorKind::Config, "channel count does not match the format");
  for (const auto& ch : channels) {
    if (ch.size() != size()) fail(ErrorKind::Config, "channels differ in length");
    for (const double v : ch)
      if (!std::isfinite(v)) fail(ErrorKind::Config, "non-finite sample");
  }
  if (size() < 2) fail(ErrorKind::InsufficientData, "record needs at least two samples");
}

dq::WaveformRecord Record::to_waveform() const {
  if (meta.format != RecordFormat::Abc)
    fail(ErrorKind::Config, "three-phase waveform requested from a dq record");
  dq::WaveformRecord rec;
  rec.dt = 1.0 / meta.sample_rate_hz;
  rec.nominal_freq = meta.nominal_freq_hz;
  rec.ia = channels[0];
  rec.ib = channels[1];
  rec.ic = channels[2];
  return rec;
}

Record parse_record(std::istream& in) {
  Record rec;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail(ErrorKind::Parse, "empty file");
  ++line_no;
  if (line != kMagic) parse_fail(line_no, "missing record signature");

  // Metadata comments until the column header.
  bool have_format = false, have_fs = false, have_f0 = false;
  for (;;) {
    if (!std::getline(in, line)) parse_fail(line_no, "record ends before the column header");
    ++line_no;
    if (!line.starts_with("# ")) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(line_no, "metadata line without '='");
    const std::string key = line.substr(2, eq - 2);
    const std::string value = line.substr(eq + 1);
    if (key == "format") {
      if (value == "abc") rec.meta.format = RecordFormat::Abc;
      else if (value == "dq") rec.meta.format = RecordFormat::Dq;
      else parse_fail(line_no, "unknown format '" + value + "'");
      have_format = true;
    } else if (key == "sample_rate_hz") {
      rec.meta.sample_rate_hz = parse_double(value, line_no);
      have_fs = true;
    } else if (key == "nominal_freq_hz") {
      rec.meta.nominal_freq_hz = parse_double(value, line_no);
      have_f0 = true;
    } else if (key == "seed") {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
      if (ec != std::errc{} || ptr != value.data() + value.size())
        parse_fail(line_no, "bad seed '" + value + "'");
      rec.meta.seed = s;
    } else {
      rec.meta.extra.emplace_back(key, value);
    }
  }
  if (!have_format) fail(ErrorKind::Parse, "missing format metadata");
  if (!have_fs) fail(ErrorKind::Parse, "missing sample_rate_hz metadata");
  if (!have_f0) fail(ErrorKind::Parse, "missing nominal_freq_hz metadata");
  rec.meta.validate();

  if (line != header_of(rec.meta.format))
    parse_fail(line_no, "column header does not match the format");

  const std::size_t ncols = channel_count(rec.meta.format) + 1;
  rec.channels.assign(ncols - 1, {});
  std::vector<double> t;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t col = 0, pos = 0;
    while (col < ncols) {
      const auto comma = line.find(',', pos);
      const bool last = comma == std::string::npos;
      if (last != (col == ncols - 1))
        parse_fail(line_no, "expected " + std::to_string(ncols) + " columns");
      const std::string_view field(line.data() + pos, (last ? line.size() : comma) - pos);
      if (field.empty()) parse_fail(line_no, "missing cell");
      const double v = parse_double(field, line_no);
      if (col == 0) t.push_back(v);
      else rec.channels[col - 1].push_back(v);
      pos = last ? line.size() : comma + 1;
      ++col;
    }
  }
  if (t.size() < 2) fail(ErrorKind::Parse, "record needs at least two samples");

  const double dt = 1.0 / rec.meta.sample_rate_hz;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double expect = t.front() + static_cast<double>(k) * dt;
    if (std::abs(t[k] - expect) > 1e-9 * dt)
      fail(ErrorKind::Parse, "non-uniform sampling at row " + std::to_string(k));
  }

  rec.validate();
  return rec;
}

Record read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return parse_record(in);
}

void format_record(std::ostream& out, const Record& rec) {
  rec.validate();
  out << kMagic << '\n';
  out << "# format=" << (rec.meta.format == RecordFormat::Abc ? "abc" : "dq") << '\n';
  out << "# sample_rate_hz=";
  print17(out, rec.meta.sample_rate_hz);
  out << '\n';
  out << "# nominal_freq_hz=";
  print17(out, rec.meta.nominal_freq_hz);
  out << '\n';
  if (rec.meta.seed) out << "# seed=" << *rec.meta.seed << '\n';
  for (const auto& [key, value] : rec.meta.extra) out << "# " << key << '=' << value << '\n';
  out << header_of(rec.meta.format) << '\n';

  const double dt = 1.0 / rec.meta.sample_rate_hz;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    print17(out, static_cast<double>(k) * dt);
    for (const auto& ch : rec.channels) {
      out << ',';
      print17(out, ch[k]);
    }
    out << '\n';
  }
}

void write_record(const std::filesystem::path& path, const Record& rec) {
  std::ostringstream buf;
  format_record(buf, rec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << buf.str();
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string digest_string(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return digest_string(buf.str());
}

}  // namespace hosdetect::recio
