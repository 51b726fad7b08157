#include "hosdetect/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace hosdetect::report {

namespace {

using nlohmann::ordered_json;

const char* classification_name(detect::Classification c) {
  switch (c) {
    case detect::Classification::UnilateralSaturation: return "unilateral_saturation";
    case detect::Classification::BilateralSaturation: return "bilateral_saturation";
    case detect::Classification::NoHardLimitNonlinearity: return "none";
  }
  return "none";
}

double finite(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::Config, "non-finite value in report");
  return v;
}

ordered_json peaks_json(const detect::PeakList& list) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : list.entries) {
    ordered_json e;
    e["bins"] = p.coords;
    ordered_json freqs = ordered_json::array();
    for (const double f : p.freqs_hz) freqs.push_back(finite(f));
    e["freqs_hz"] = std::move(freqs);
    e["value"] = finite(std::min(p.value, 1.0));
    e["raw_value"] = finite(p.value);
    arr.push_back(std::move(e));
  }
  return arr;
}

ordered_json config_json(const hos::SegmentConfig& cfg) {
  ordered_json c;
  c["segments"] = cfg.segments;
  c["segment_len"] = cfg.segment_len;
  c["window"] = cfg.window == hos::Window::Hann ? "hann" : "rect";
  c["sigma_floor"] = finite(cfg.sigma_floor);
  c["floor_replacement"] = finite(cfg.replacement_scale());
  c["max_tri_bin"] = cfg.tri_cap();
  c["mean_before_window"] = cfg.mean_before_window;
  return c;
}

ordered_json channel_json(const detect::ChannelAnalysis& ch) {
  const auto& rep = ch.report;
  ordered_json j;
  j["axis"] = rep.axis == detect::Axis::D ? "d" : "q";
  j["classification"] = classification_name(rep.classification);
  if (rep.fundamental_hz) j["fundamental_hz"] = finite(*rep.fundamental_hz);
  else j["fundamental_hz"] = nullptr;
  if (rep.saturation) {
    ordered_json s;
    s["eta"] = finite(rep.saturation->eta);
    s["hd"] = finite(rep.saturation->hd);
    s["fundamental_amplitude"] = finite(rep.saturation->fundamental_amplitude);
    s["harmonic_amplitude"] = finite(rep.saturation->harmonic_amplitude);
    j["saturation"] = std::move(s);
  } else {
    j["saturation"] = nullptr;
  }
  j["bicoherence_peaks"] = peaks_json(rep.bic_peaks);
  j["tricoherence_peaks"] = peaks_json(rep.tric_peaks);
  j["warnings"] = rep.warnings;
  j["config"] = config_json(ch.config);
  j["df_hz"] = finite(ch.power.df);
  return j;
}

void print_cell(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void df_header(std::ostream& out, double df) {
  out << "# df_hz=";
  print_cell(out, df);
  out << '\n';
}

}  // namespace

std::string render_report(const detect::ChannelAnalysis* d, const detect::ChannelAnalysis* q,
                          const std::string& input_digest) {
  ordered_json doc;
  doc["schema"] = "hosdetect-report-v1";
  doc["tool_version"] = kVersion;
  doc["input_digest"] = input_digest;
  doc["axes"] = ordered_json::object();
  doc["axes"]["d"] = d != nullptr ? channel_json(*d) : ordered_json(nullptr);
  doc["axes"]["q"] = q != nullptr ? channel_json(*q) : ordered_json(nullptr);
  return doc.dump(2) + "\n";
}

void write_power_csv(std::ostream& out, const hos::PowerSpectrum& p) {
  df_header(out, p.df);
  out << "m,value\n";
  for (std::size_t m = 1; m <= p.half(); ++m) {
    out << m << ',';
    print_cell(out, p.at(m));
    out << '\n';
  }
}

void write_bispectrum_csv(std::ostream& out, const hos::BispectrumGrid& g) {
  df_header(out, g.df);
  out << "m,n,re,im\n";
  for (std::size_t m = 1; m <= g.dom.half; ++m)
    for (std::size_t n = m; g.dom.contains(m, n); ++n) {
      const auto v = g.at(m, n);
      out << m << ',' << n << ',';
      print_cell(out, v.real());
      out << ',';
      print_cell(out, v.imag());
      out << '\n';
    }
}

void write_trispectrum_csv(std::ostream& out, const hos::TrispectrumGrid& g) {
  df_header(out, g.df);
  out << "m,n,o,re,im\n";
  for (std::size_t m = 1; m <= g.dom.cap; ++m)
    for (std::size_t n = m; n <= g.dom.cap; ++n)
      for (std::size_t o = n; g.dom.contains(m, n, o); ++o) {
        const auto v = g.at(m, n, o);
        out << m << ',' << n << ',' << o << ',';
        print_cell(out, v.real());
        out << ',';
        print_cell(out, v.imag());
        out << '\n';
      }
}

void write_coherence_csv(std::ostream& out, const hos::CoherenceMap& m) {
  df_header(out, m.df);
  if (m.order == hos::CoherenceOrder::Bi) {
    out << "m,n,value\n";
    for (std::size_t i = 1; i <= m.bi.half; ++i)
      for (std::size_t n = i; m.bi.contains(i, n); ++n) {
        out << i << ',' << n << ',';
        print_cell(out, m.raw_at(i, n));
        out << '\n';
      }
  } else {
    out << "m,n,o,value\n";
    for (std::size_t i = 1; i <= m.tri.cap; ++i)
      for (std::size_t n = i; n <= m.tri.cap; ++n)
        for (std::size_t o = n; m.tri.contains(i, n, o); ++o) {
          out << i << ',' << n << ',' << o << ',';
          print_cell(out, m.raw_at(i, n, o));
          out << '\n';
        }
  }
}

}  // namespace hosdetect::report
