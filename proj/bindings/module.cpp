// Python bindings. Thin argument conversion only; all numerics live in the
// core library. Enum-like choices cross the boundary as strings, reports as
// the same JSON the command-line tool emits.
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hosdetect/common.hpp"
#include "hosdetect/detect.hpp"
#include "hosdetect/hardlimit.hpp"
#include "hosdetect/hos.hpp"
#include "hosdetect/record_io.hpp"
#include "hosdetect/report.hpp"
#include "hosdetect/synth.hpp"
#include "hosdetect/vscsim.hpp"

namespace py = pybind11;
using namespace hosdetect;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const DoubleArray& a) {
  if (a.ndim() != 1) fail(ErrorKind::Config, "expected a one-dimensional array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

DoubleArray to_array(const std::vector<double>& v) {
  DoubleArray out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

hardlimit::LimitKind kind_from(const std::string& s) {
  if (s == "unilateral") return hardlimit::LimitKind::Unilateral;
  if (s == "bilateral") return hardlimit::LimitKind::Bilateral;
  fail(ErrorKind::Config, "kind must be 'unilateral' or 'bilateral'");
}

hos::Window window_from(const std::string& s) {
  if (s == "hann") return hos::Window::Hann;
  if (s == "rect") return hos::Window::Rectangular;
  fail(ErrorKind::Config, "window must be 'hann' or 'rect'");
}

hos::SegmentConfig config_from(std::size_t segments, std::size_t seglen,
                               const std::string& window, double sigma,
                               std::size_t max_tri_bin) {
  hos::SegmentConfig cfg;
  cfg.segments = segments;
  cfg.segment_len = seglen;
  cfg.window = window_from(window);
  cfg.sigma_floor = sigma;
  cfg.max_tri_bin = max_tri_bin;
  return cfg;
}

std::string array_digest(const DoubleArray& a) {
  return recio::digest_string(std::string_view(
      reinterpret_cast<const char*>(a.data()), static_cast<std::size_t>(a.size()) * sizeof(double)));
}

std::string analyze_json(std::optional<DoubleArray> xd, std::optional<DoubleArray> xq, double fs,
                         std::size_t segments, std::size_t seglen, const std::string& window,
                         double sigma, double threshold, std::size_t max_tri_bin) {
  if (!xd && !xq) fail(ErrorKind::Config, "provide xd, xq, or both");
  if ((segments == 0) != (seglen == 0))
    fail(ErrorKind::Config, "segments and seglen must be given together");

  detect::DetectionConfig det;
  det.sigma_b = threshold;
  std::string digest_src;
  const auto run_axis = [&](const DoubleArray& a, detect::Axis axis) {
    const auto x = as_span(a);
    std::optional<hos::SegmentConfig> cfg;
    if (segments != 0) cfg = config_from(segments, seglen, window, sigma, max_tri_bin);
    else {
      cfg = detect::auto_segment_config(x, fs);
      cfg->window = window_from(window);
      cfg->sigma_floor = sigma;
      cfg->max_tri_bin = max_tri_bin;
    }
    digest_src += array_digest(a);
    return detect::analyze_channel(x, fs, axis, cfg, det);
  };

  std::optional<detect::ChannelAnalysis> d, q;
  if (xd) d = run_axis(*xd, detect::Axis::D);
  if (xq) q = run_axis(*xq, detect::Axis::Q);
  return report::render_report(d ? &*d : nullptr, q ? &*q : nullptr,
                               recio::digest_string(digest_src));
}

py::dict spectra(const DoubleArray& xa, double fs, std::size_t segments, std::size_t seglen,
                 const std::string& window, double sigma, std::size_t max_tri_bin) {
  const auto x = as_span(xa);
  const auto cfg = config_from(segments, seglen, window, sigma, max_tri_bin);
  const auto s = hos::segment_window_fft(x, cfg, fs);
  const auto p = hos::power_spectrum(s);
  const auto b = hos::bispectrum(s);
  const auto t = hos::trispectrum(s, cfg);
  const auto bic = hos::bicoherence(p, b);
  const auto tric = hos::tricoherence(p, t);

  const std::size_t half = cfg.half();
  const std::size_t cap = cfg.tri_cap();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  py::dict out;
  out["df_hz"] = p.df;
  out["tri_cap"] = cap;
  out["power"] = to_array(p.values);

  // Dense grids indexed by bin so plots need no reindexing; cells outside the
  // estimated domain hold NaN.
  const auto n1 = static_cast<py::ssize_t>(half + 1);
  py::array_t<std::complex<double>> bisp({n1, n1});
  py::array_t<double> bico({n1, n1});
  auto* bisp_p = bisp.mutable_data();
  auto* bico_p = bico.mutable_data();
  for (py::ssize_t i = 0; i < n1 * n1; ++i) {
    bisp_p[i] = {nan, nan};
    bico_p[i] = nan;
  }
  for (std::size_t m = 1; m <= half; ++m)
    for (std::size_t n = m; n <= half; ++n) {
      if (!b.contains(m, n)) continue;
      const auto v = b.at(m, n);
      const auto c = bic.at(m, n);
      bisp_p[m * (half + 1) + n] = v;
      bisp_p[n * (half + 1) + m] = v;
      bico_p[m * (half + 1) + n] = c;
      bico_p[n * (half + 1) + m] = c;
    }
  out["bispectrum"] = bisp;
  out["bicoherence"] = bico;

  const auto c1 = static_cast<py::ssize_t>(cap + 1);
  py::array_t<double> trico({c1, c1, c1});
  auto* trico_p = trico.mutable_data();
  for (py::ssize_t i = 0; i < c1 * c1 * c1; ++i) trico_p[i] = nan;
  const auto put3 = [&](std::size_t a, std::size_t bb, std::size_t c, double v) {
    trico_p[(a * (cap + 1) + bb) * (cap + 1) + c] = v;
  };
  for (std::size_t m = 1; m <= cap; ++m)
    for (std::size_t n = m; n <= cap; ++n)
      for (std::size_t o = n; o <= cap; ++o) {
        if (!t.contains(m, n, o)) continue;
        const double v = tric.at(m, n, o);
        put3(m, n, o, v);
        put3(m, o, n, v);
        put3(n, m, o, v);
        put3(n, o, m, v);
        put3(o, m, n, v);
        put3(o, n, m, v);
      }
  out["tricoherence"] = trico;
  return out;
}

DoubleArray gen_clipped(double amplitude, double freq_hz, double offset, const std::string& kind,
                        double a, double a0, double fs, std::size_t length, std::uint64_t seed,
                        std::optional<double> noise_db) {
  const hardlimit::SineInput input{amplitude, freq_hz, offset};
  const hardlimit::HardLimitSpec lim{kind_from(kind), a, a0};
  return to_array(synth::gen_clipped_sine(input, lim, fs, length, seed,
                                          noise_db.value_or(synth::kNoiseOff)));
}

DoubleArray gen_tones(double fs, std::size_t length,
                      const std::vector<std::tuple<double, double, double, std::string>>& tones,
                      std::optional<double> phase_noise_db, std::optional<double> additive_noise_db,
                      std::size_t segment_len, std::uint64_t seed) {
  synth::ToneSpec spec;
  spec.fs = fs;
  spec.length = length;
  for (const auto& [f, amp, ph, mode] : tones) {
    synth::PhaseMode m;
    if (mode == "fixed") m = synth::PhaseMode::Fixed;
    else if (mode == "segment-random") m = synth::PhaseMode::PerSegmentRandom;
    else fail(ErrorKind::Config, "tone mode must be 'fixed' or 'segment-random'");
    spec.tones.push_back({f, amp, ph, m});
  }
  spec.phase_noise_db = phase_noise_db.value_or(synth::kNoiseOff);
  spec.additive_noise_db = additive_noise_db.value_or(synth::kNoiseOff);
  spec.segment_len = segment_len;
  return to_array(synth::gen_tones(spec, seed));
}

py::dict simulate(double duration, const std::string& preset, std::size_t decimate) {
  if (preset != "case2-reduced")
    fail(ErrorKind::Config, "unknown preset '" + preset + "' (have: case2-reduced)");
  const auto spec = vscsim::case2_reduced_preset();
  auto rec = vscsim::simulate(spec, duration);
  if (decimate > 1) rec = vscsim::decimate(rec, decimate);
  py::dict out;
  out["dt"] = rec.dt;
  out["id"] = to_array(rec.id);
  out["iq"] = to_array(rec.iq);
  out["vdc"] = to_array(rec.vdc);
  out["idref_raw"] = to_array(rec.idref_raw);
  out["idref"] = to_array(rec.idref);
  out["vdbar"] = to_array(rec.vdbar);
  return out;
}

py::object predict_limit_cycle(const std::vector<double>& num, const std::vector<double>& den,
                               const std::string& kind, double a, double a0, bool bias_balanced) {
  vscsim::LureLoopSpec loop;
  loop.g.num = num;
  loop.g.den = den;
  loop.limiter = {kind_from(kind), a, a0};
  loop.bias_balanced = bias_balanced;
  const auto pred = vscsim::predict_limit_cycle(loop);
  if (!pred) return py::none();
  py::dict out;
  out["freq_hz"] = pred->freq_hz;
  out["amplitude"] = pred->amplitude;
  out["eta"] = pred->eta;
  return out;
}

py::dict case2_loop() {
  const auto spec = vscsim::case2_reduced_preset();
  const auto loop = vscsim::d_outer_lure_loop(spec);
  py::dict out;
  out["num"] = loop.g.num;
  out["den"] = loop.g.den;
  out["kind"] = loop.limiter.kind == hardlimit::LimitKind::Unilateral ? "unilateral" : "bilateral";
  out["a"] = loop.limiter.a;
  out["a0"] = loop.limiter.a0;
  out["bias_balanced"] = loop.bias_balanced;
  return out;
}

py::dict read_record(const std::string& path) {
  const auto rec = recio::read_record(path);
  py::dict out;
  out["format"] = rec.meta.format == recio::RecordFormat::Abc ? "abc" : "dq";
  out["sample_rate_hz"] = rec.meta.sample_rate_hz;
  out["nominal_freq_hz"] = rec.meta.nominal_freq_hz;
  out["seed"] = rec.meta.seed ? py::cast(*rec.meta.seed) : py::object(py::none());
  py::dict extra;
  for (const auto& [k, v] : rec.meta.extra) extra[py::str(k)] = v;
  out["extra"] = extra;
  py::list channels;
  for (const auto& ch : rec.channels) channels.append(to_array(ch));
  out["channels"] = channels;
  return out;
}

py::tuple auto_segments(const DoubleArray& x, double fs) {
  const auto cfg = detect::auto_segment_config(as_span(x), fs);
  return py::make_tuple(cfg.segments, cfg.segment_len);
}

}  // namespace

PYBIND11_MODULE(_hosdetect, m) {
  m.doc() = "Hard-limit nonlinearity detection via segment-averaged higher-order spectra";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "HosdetectError");

  m.def("describing_function",
        [](const std::string& kind, double a, double a0, double amplitude) {
          return hardlimit::describing_function({kind_from(kind), a, a0}, amplitude);
        },
        py::arg("kind"), py::arg("a"), py::arg("a0"), py::arg("amplitude"),
        "Fundamental gain of the limiter at drive amplitude A; the imaginary\n"
        "part is zero for these memoryless limiters.");
  m.def("unilateral_dc_shift", &hardlimit::unilateral_dc_shift, py::arg("amplitude"),
        py::arg("headroom"),
        "Mean output shift of a unilateral limiter driven at amplitude A with headroom h.");

  m.def("gen_clipped", &gen_clipped, py::arg("amplitude"), py::arg("freq_hz"),
        py::arg("offset"), py::arg("kind"), py::arg("a"), py::arg("a0"), py::arg("fs"),
        py::arg("length"), py::arg("seed") = 1, py::arg("noise_db") = py::none(),
        "Hard-limited sinusoid samples; noise_db adds Gaussian noise relative to signal power.");
  m.def("gen_tones", &gen_tones, py::arg("fs"), py::arg("length"), py::arg("tones"),
        py::arg("phase_noise_db") = py::none(), py::arg("additive_noise_db") = py::none(),
        py::arg("segment_len") = 0, py::arg("seed") = 1,
        "Sum of cosines; tones are (freq_hz, amplitude, phase, mode) tuples.");

  m.def("analyze_json", &analyze_json, py::arg("xd") = py::none(), py::arg("xq") = py::none(),
        py::arg("fs") = 0.0, py::arg("segments") = 0, py::arg("seglen") = 0,
        py::arg("window") = "hann", py::arg("sigma") = 1e-3, py::arg("threshold") = 0.3,
        py::arg("max_tri_bin") = 0,
        "Classify one or both channels; returns the report as a JSON string.");
  m.def("spectra", &spectra, py::arg("x"), py::arg("fs"), py::arg("segments"), py::arg("seglen"),
        py::arg("window") = "hann", py::arg("sigma") = 1e-3, py::arg("max_tri_bin") = 0,
        "Dense power/bispectrum/bicoherence/tricoherence grids (NaN off-domain).");
  m.def("auto_segments", &auto_segments, py::arg("x"), py::arg("fs"),
        "Segmentation the analyzer would pick: (segments, seglen).");

  m.def("simulate", &simulate, py::arg("duration"), py::arg("preset") = "case2-reduced",
        py::arg("decimate") = 1, "Integrate a converter-loop preset; returns channel arrays.");
  m.def("predict_limit_cycle", &predict_limit_cycle, py::arg("num"), py::arg("den"),
        py::arg("kind"), py::arg("a"), py::arg("a0") = 0.0, py::arg("bias_balanced") = false,
        "Describing-function limit-cycle prediction for a linear loop with a limiter;\n"
        "returns dict(freq_hz, amplitude, eta) or None.");
  m.def("case2_loop", &case2_loop,
        "Loop transfer function and limiter of the case2-reduced preset.");

  m.def("read_record", &read_record, py::arg("path"), "Parse a waveform record CSV.");
  m.def("file_digest", [](const std::string& p) { return recio::file_digest(p); },
        py::arg("path"), "FNV-1a digest string of a file's bytes.");
}
