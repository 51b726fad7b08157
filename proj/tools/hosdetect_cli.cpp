// hosdetect: detect hard-limit nonlinearity in converter waveform records,
// generate labeled corpora, and dump plot-ready spectrum grids.
//
// Exit codes: 0 no nonlinearity, 10 unilateral detected, 11 bilateral
// detected, 2 any error. Detection wins over the axis list in order
// unilateral > bilateral > none across the analyzed axes.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hosdetect/detect.hpp"
#include "hosdetect/dq.hpp"
#include "hosdetect/numeric.hpp"
#include "hosdetect/record_io.hpp"
#include "hosdetect/report.hpp"
#include "hosdetect/synth.hpp"
#include "hosdetect/vscsim.hpp"

namespace {

using namespace hosdetect;

constexpr double kNoiseDisabled = -300.0;  // --noise-db at or below this turns noise off
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string g_stage = "startup";

void stage(const char* name) { g_stage = name; }

bool logging_on() {
  const char* v = std::getenv("HOSDETECT_LOG");
  if (v == nullptr) return false;
  const std::string_view s(v);
  return !s.empty() && s != "0" && s != "off";
}

void note(const std::string& msg) {
  if (logging_on()) std::cerr << "hosdetect: " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Shared estimation flags.

struct EstimationFlags {
  std::size_t segments = 0;  // 0 = auto
  std::size_t seglen = 0;    // 0 = auto
  std::string window = "hann";
  double sigma = 1e-3;
  double threshold = 0.3;
  std::size_t max_tri_bin = 0;  // 0 = library cap
  std::string axes = "d,q";
};

void add_estimation_flags(CLI::App* cmd, EstimationFlags& f, bool with_threshold) {
  cmd->add_option("--segments", f.segments, "Segment count M (requires --seglen; default auto)");
  cmd->add_option("--seglen", f.seglen, "Segment length N, even (requires --segments; default auto)");
  cmd->add_option("--window", f.window, "Segment window: hann or rect")
      ->check(CLI::IsMember({"hann", "rect"}));
  cmd->add_option("--sigma", f.sigma, "Spectral floor fraction of the per-segment peak");
  if (with_threshold)
    cmd->add_option("--threshold", f.threshold, "Coherence threshold for peak candidacy");
  cmd->add_option("--max-tri-bin", f.max_tri_bin, "Tricoherence bin cap (default min(N/2, 128))");
  cmd->add_option("--axis", f.axes, "Axes to process: d, q, or d,q");
}

struct AxisSelection {
  bool d = false, q = false;
};

AxisSelection parse_axes(const std::string& s) {
  AxisSelection sel;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part == "d") sel.d = true;
    else if (part == "q") sel.q = true;
    else fail(ErrorKind::Config, "--axis accepts d, q, or d,q");
  }
  if (!sel.d && !sel.q) fail(ErrorKind::Config, "--axis selected no channel");
  return sel;
}

hos::SegmentConfig effective_config(const EstimationFlags& f, std::span<const double> x,
                                    double fs) {
  if ((f.segments == 0) != (f.seglen == 0))
    fail(ErrorKind::Config, "--segments and --seglen must be given together");
  hos::SegmentConfig cfg;
  if (f.segments != 0) {
    cfg.segments = f.segments;
    cfg.segment_len = f.seglen;
  } else {
    cfg = detect::auto_segment_config(x, fs);
  }
  cfg.window = f.window == "rect" ? hos::Window::Rectangular : hos::Window::Hann;
  cfg.sigma_floor = f.sigma;
  cfg.max_tri_bin = f.max_tri_bin;
  return cfg;
}

// Channels in analysis order plus warnings owed to the record-level steps.
struct DqChannels {
  std::vector<double> xd, xq;
  double fs = 0.0;
  std::vector<std::string> prelude;
};

DqChannels extract_channels(const recio::Record& rec) {
  DqChannels out;
  out.fs = rec.meta.sample_rate_hz;
  if (rec.meta.format == recio::RecordFormat::Dq) {
    out.xd = rec.channels[0];
    out.xq = rec.channels[1];
    return out;
  }
  stage("rotation-angle");
  const auto wf = rec.to_waveform();
  wf.validate();
  const auto est = dq::estimate_theta0(wf);
  if (est.degenerate)
    out.prelude.push_back("rotation angle: no positive-sequence fundamental; using theta0 = 0");
  auto sig = dq::dq0_transform(wf, est.theta0);
  out.xd = std::move(sig.xd);
  out.xq = std::move(sig.xq);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void dump_axis_spectra(const std::filesystem::path& dir, char axis, const hos::PowerSpectrum& p,
                       const hos::BispectrumGrid& b, const hos::TrispectrumGrid& t,
                       const hos::CoherenceMap& bic, const hos::CoherenceMap& tric) {
  const auto file = [&](const char* kind) {
    return dir / (std::string(1, axis) + "_" + kind + ".csv");
  };
  const auto save = [&](const char* kind, const auto& writer) {
    std::ostringstream out;
    writer(out);
    write_text_file(file(kind), out.str());
  };
  save("power", [&](std::ostream& o) { report::write_power_csv(o, p); });
  save("bispectrum", [&](std::ostream& o) { report::write_bispectrum_csv(o, b); });
  save("trispectrum", [&](std::ostream& o) { report::write_trispectrum_csv(o, t); });
  save("bicoherence", [&](std::ostream& o) { report::write_coherence_csv(o, bic); });
  save("tricoherence", [&](std::ostream& o) { report::write_coherence_csv(o, tric); });
}

int classification_exit(const std::vector<const detect::ChannelAnalysis*>& axes) {
  bool uni = false, bil = false;
  for (const auto* ch : axes) {
    uni = uni || ch->report.classification == detect::Classification::UnilateralSaturation;
    bil = bil || ch->report.classification == detect::Classification::BilateralSaturation;
  }
  return uni ? 10 : bil ? 11 : 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string record_path;
  std::string out_path;      // empty = stdout
  std::string spectra_dir;   // empty = no dumps
  EstimationFlags est;
};

int run_analyze(const AnalyzeArgs& args) {
  stage("read-record");
  note("reading " + args.record_path);
  const auto rec = recio::read_record(args.record_path);
  const std::string digest = recio::file_digest(args.record_path);
  auto ch = extract_channels(rec);
  const auto sel = parse_axes(args.est.axes);

  detect::DetectionConfig det;
  det.sigma_b = args.est.threshold;

  std::optional<detect::ChannelAnalysis> d, q;
  const auto run_axis = [&](detect::Axis axis, const std::vector<double>& x) {
    stage("analysis");
    const auto cfg = effective_config(args.est, x, ch.fs);
    note(std::string("axis ") + (axis == detect::Axis::D ? "d" : "q") + ": M=" +
         std::to_string(cfg.segments) + " N=" + std::to_string(cfg.segment_len));
    auto a = detect::analyze_channel(x, ch.fs, axis, cfg, det);
    a.report.warnings.insert(a.report.warnings.begin(), ch.prelude.begin(), ch.prelude.end());
    return a;
  };
  if (sel.d) d = run_axis(detect::Axis::D, ch.xd);
  if (sel.q) q = run_axis(detect::Axis::Q, ch.xq);

  stage("write-report");
  const std::string text =
      report::render_report(d ? &*d : nullptr, q ? &*q : nullptr, digest);
  if (args.out_path.empty()) std::cout << text;
  else write_text_file(args.out_path, text);

  if (!args.spectra_dir.empty()) {
    stage("write-spectra");
    const std::filesystem::path dir(args.spectra_dir);
    std::filesystem::create_directories(dir);
    if (d) dump_axis_spectra(dir, 'd', d->power, d->bispec, d->trispec, d->bic, d->tric);
    if (q) dump_axis_spectra(dir, 'q', q->power, q->bispec, q->trispec, q->bic, q->tric);
  }

  std::vector<const detect::ChannelAnalysis*> axes;
  if (d) axes.push_back(&*d);
  if (q) axes.push_back(&*q);
  return classification_exit(axes);
}

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumArgs {
  std::string record_path;
  std::string spectra_dir = ".";
  EstimationFlags est;
};

int run_spectrum(const SpectrumArgs& args) {
  stage("read-record");
  const auto rec = recio::read_record(args.record_path);
  auto ch = extract_channels(rec);
  const auto sel = parse_axes(args.est.axes);

  stage("write-spectra");
  const std::filesystem::path dir(args.spectra_dir);
  std::filesystem::create_directories(dir);
  const auto run_axis = [&](char axis, const std::vector<double>& x) {
    stage("estimation");
    const auto cfg = effective_config(args.est, x, ch.fs);
    const auto spectra = hos::segment_window_fft(x, cfg, ch.fs);
    const auto p = hos::power_spectrum(spectra);
    const auto b = hos::bispectrum(spectra);
    const auto t = hos::trispectrum(spectra, cfg);
    const auto bic = hos::bicoherence(p, b);
    const auto tric = hos::tricoherence(p, t);
    stage("write-spectra");
    dump_axis_spectra(dir, axis, p, b, t, bic, tric);
  };
  if (sel.d) run_axis('d', ch.xd);
  if (sel.q) run_axis('q', ch.xq);
  return 0;
}

// ---------------------------------------------------------------------------
// gen

std::vector<double> pure_cosine(double freq_hz, double fs, std::size_t len) {
  std::vector<double> x(len);
  for (std::size_t n = 0; n < len; ++n)
    x[n] = std::cos(kTwoPi * freq_hz * static_cast<double>(n) / fs);
  return x;
}

struct GenCommon {
  std::string out_path;
  std::uint64_t seed = 1;
  std::string axis = "d";  // channel that carries the signal
};

recio::Record dq_record(const GenCommon& common, double fs, double nominal,
                        std::vector<double> signal,
                        std::vector<std::pair<std::string, std::string>> extra) {
  recio::Record rec;
  rec.meta.format = recio::RecordFormat::Dq;
  rec.meta.sample_rate_hz = fs;
  rec.meta.nominal_freq_hz = nominal;
  rec.meta.seed = common.seed;
  rec.meta.extra = std::move(extra);
  // The companion channel gets a plain unit fundamental so both axes analyze
  // cleanly; the signal under test lives on the requested axis only.
  auto other = pure_cosine(nominal, fs, signal.size());
  if (common.axis == "d") rec.channels = {std::move(signal), std::move(other)};
  else rec.channels = {std::move(other), std::move(signal)};
  return rec;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GenTonesArgs {
  GenCommon common;
  double fs = 0.0;
  std::size_t len = 32768;
  std::string freqs;       // comma list, optional trailing "coupled"
  std::string amps;        // optional comma list matching the tone count
  std::string phase_mode = "fixed";
  std::size_t seglen = 512;
  bool have_phase_noise = false;
  bool have_additive_noise = false;
  double noise_db = 0.0;           // phase noise, valid when have_phase_noise
  double additive_noise_db = 0.0;  // valid when have_additive_noise
  double nominal = 0.0;            // 0 = first frequency
};

int run_gen_tones(const GenTonesArgs& args) {
  stage("config");
  std::vector<double> freqs;
  bool coupled = false;
  {
    std::stringstream ss(args.freqs);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part == "coupled") {
        if (freqs.size() < 2) fail(ErrorKind::Config, "coupled needs two base tones first");
        coupled = true;
        break;
      }
      freqs.push_back(std::stod(part));
    }
  }
  if (freqs.empty()) fail(ErrorKind::Config, "--f needs at least one tone");

  std::vector<double> amps(freqs.size() + (coupled ? 1 : 0), 1.0);
  if (coupled) amps.back() = 0.5;
  if (!args.amps.empty()) {
    std::vector<double> given;
    std::stringstream ss(args.amps);
    std::string part;
    while (std::getline(ss, part, ',')) given.push_back(std::stod(part));
    if (given.size() != amps.size())
      fail(ErrorKind::Config, "--amp list must match the tone count");
    amps = std::move(given);
  }

  synth::ToneSpec spec;
  spec.fs = args.fs;
  spec.length = args.len;
  const auto mode =
      args.phase_mode == "segment-random" ? synth::PhaseMode::PerSegmentRandom : synth::PhaseMode::Fixed;
  for (std::size_t i = 0; i < freqs.size(); ++i)
    spec.tones.push_back({freqs[i], amps[i], 0.0, mode});
  if (coupled) spec.tones.push_back({freqs[0] + freqs[1], amps.back(), 0.0, mode});
  if (args.have_phase_noise && args.noise_db > kNoiseDisabled)
    spec.phase_noise_db = args.noise_db;
  if (args.have_additive_noise && args.additive_noise_db > kNoiseDisabled)
    spec.additive_noise_db = args.additive_noise_db;
  spec.segment_len = mode == synth::PhaseMode::PerSegmentRandom ? args.seglen : 0;

  stage("generate");
  auto x = synth::gen_tones(spec, args.common.seed);

  std::vector<std::pair<std::string, std::string>> extra{{"generator", "tones"}};
  std::string tones_desc;
  for (const auto& t : spec.tones) {
    if (!tones_desc.empty()) tones_desc += ';';
    tones_desc += fmt17(t.freq_hz) + ":" + fmt17(t.amplitude);
  }
  extra.emplace_back("tones", tones_desc);
  extra.emplace_back("phase_mode", args.phase_mode);
  if (spec.phase_noise_db != synth::kNoiseOff)
    extra.emplace_back("phase_noise_db", fmt17(spec.phase_noise_db));
  if (spec.additive_noise_db != synth::kNoiseOff)
    extra.emplace_back("additive_noise_db", fmt17(spec.additive_noise_db));

  const double nominal = args.nominal > 0.0 ? args.nominal : freqs.front();
  stage("write-record");
  recio::write_record(args.common.out_path,
                      dq_record(args.common, args.fs, nominal, std::move(x), std::move(extra)));
  note("wrote " + args.common.out_path);
  return 0;
}

struct GenClippedArgs {
  GenCommon common;
  std::string kind;  // unilateral | bilateral
  double eta = 0.0;
  double freq = 0.0;
  double fs = 0.0;
  std::size_t len = 65536;
  double clip = 40.0;
  double dc = 0.0;
  double noise_db = -25.0;
  double nominal = 0.0;
};

int run_gen_clipped(const GenClippedArgs& args) {
  stage("config");
  const auto kind = args.kind == "bilateral" ? hardlimit::LimitKind::Bilateral
                                             : hardlimit::LimitKind::Unilateral;
  if (kind == hardlimit::LimitKind::Bilateral && args.dc != 0.0)
    fail(ErrorKind::Config, "--dc offset requires --kind unilateral");
  if (!(args.eta >= 1.0)) fail(ErrorKind::Config, "--eta must be at least 1");

  const hardlimit::SineInput input{args.clip * args.eta, args.freq, args.dc};
  const hardlimit::HardLimitSpec lim{kind, args.clip,
                                     kind == hardlimit::LimitKind::Unilateral ? args.dc : 0.0};
  const double noise = args.noise_db <= kNoiseDisabled ? synth::kNoiseOff : args.noise_db;

  stage("generate");
  auto x = synth::gen_clipped_sine(input, lim, args.fs, args.len, args.common.seed, noise);

  std::vector<std::pair<std::string, std::string>> extra{
      {"generator", "clipped"},
      {"kind", args.kind},
      {"eta", fmt17(args.eta)},
      {"clip", fmt17(args.clip)},
      {"dc", fmt17(args.dc)},
      {"noise_db", args.noise_db <= kNoiseDisabled ? "off" : fmt17(args.noise_db)},
  };
  const double nominal = args.nominal > 0.0 ? args.nominal : args.freq;
  stage("write-record");
  recio::write_record(args.common.out_path,
                      dq_record(args.common, args.fs, nominal, std::move(x), std::move(extra)));
  note("wrote " + args.common.out_path);
  return 0;
}

struct GenSimulateArgs {
  GenCommon common;
  std::string preset;
  double duration = 36.0;
  std::size_t decim = 5;
  double skip = 4.0;
  double noise_db = -28.0;
};

int run_gen_simulate(const GenSimulateArgs& args) {
  stage("config");
  if (args.preset != "case2-reduced")
    fail(ErrorKind::Config, "unknown preset '" + args.preset + "' (have: case2-reduced)");
  const auto spec = vscsim::case2_reduced_preset();

  stage("simulate");
  note("simulating " + fmt17(args.duration) + " s");
  const auto full = vscsim::simulate(spec, args.duration);
  const auto dec = vscsim::decimate(full, args.decim);
  const auto first = std::min(static_cast<std::size_t>(args.skip / dec.dt), dec.size());
  std::vector<double> id(dec.id.begin() + first, dec.id.end());
  std::vector<double> iq(dec.iq.begin() + first, dec.iq.end());
  if (id.size() < 2) fail(ErrorKind::Config, "--skip leaves no samples");

  if (args.noise_db > kNoiseDisabled) {
    // Measurement noise scaled to the d-channel ripple so the record's quiet
    // bins stay above the analyzer's spectral floor.
    double mean = 0.0;
    for (const double v : id) mean += v;
    mean /= static_cast<double>(id.size());
    double ms = 0.0;
    for (const double v : id) ms += (v - mean) * (v - mean);
    const double sigma =
        std::sqrt(ms / static_cast<double>(id.size())) * std::pow(10.0, args.noise_db / 20.0);
    numeric::GaussianRng rng(args.common.seed);
    for (std::size_t i = 0; i < id.size(); ++i) {
      id[i] += sigma * rng.next();
      iq[i] += sigma * rng.next();
    }
  }

  // Preset provenance: parameter digest plus the event schedule.
  std::string params;
  for (const double v :
       {spec.R, spec.L, spec.C, spec.v_term, spec.vdc_ref, spec.p_in, spec.gi.kp, spec.gi.ki,
        spec.gdc.kp, spec.gdc.ki, spec.gq.kp, spec.gq.ki, spec.dt_sim, spec.id_perturbation})
    params += fmt17(v) + ",";
  std::vector<std::pair<std::string, std::string>> extra{
      {"generator", "simulate"},
      {"preset", args.preset},
      {"spec_digest", recio::digest_string(params)},
      {"events", "none"},
      {"duration_s", fmt17(args.duration)},
      {"decimate", std::to_string(args.decim)},
      {"skip_s", fmt17(args.skip)},
      {"noise_db", args.noise_db <= kNoiseDisabled ? "off" : fmt17(args.noise_db)},
  };

  recio::Record rec;
  rec.meta.format = recio::RecordFormat::Dq;
  rec.meta.sample_rate_hz = 1.0 / dec.dt;
  rec.meta.nominal_freq_hz = spec.omega0 / kTwoPi;
  rec.meta.seed = args.common.seed;
  rec.meta.extra = std::move(extra);
  rec.channels = {std::move(id), std::move(iq)};
  stage("write-record");
  recio::write_record(args.common.out_path, rec);
  note("wrote " + args.common.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard-limit nonlinearity detection for converter waveforms"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Analyze a waveform record and emit a report");
  analyze->add_option("record", analyze_args.record_path, "Input record CSV")->required();
  analyze->add_option("--out", analyze_args.out_path, "Report path (default stdout)");
  analyze->add_option("--dump-spectra", analyze_args.spectra_dir,
                      "Directory for power/bispectrum/tricoherence CSV grids");
  add_estimation_flags(analyze, analyze_args.est, true);

  SpectrumArgs spectrum_args;
  auto* spectrum =
      app.add_subcommand("spectrum", "Estimate and dump spectrum grids without classification");
  spectrum->add_option("record", spectrum_args.record_path, "Input record CSV")->required();
  spectrum->add_option("--dump-spectra", spectrum_args.spectra_dir,
                       "Output directory (default current)");
  add_estimation_flags(spectrum, spectrum_args.est, false);

  auto* gen = app.add_subcommand("gen", "Generate corpus records");
  gen->require_subcommand(1);

  GenTonesArgs tones_args;
  auto* tones = gen->add_subcommand("tones", "Sum of cosines, optionally phase-coupled");
  tones->add_option("--out", tones_args.common.out_path, "Output record path")->required();
  tones->add_option("--fs", tones_args.fs, "Sample rate, Hz")->required();
  tones->add_option("--f", tones_args.freqs,
                    "Comma list of tone frequencies; append ',coupled' for a "
                    "phase-coupled tone at f1+f2")
      ->required();
  tones->add_option("--amp", tones_args.amps, "Comma list of amplitudes (default 1, coupled 0.5)");
  tones->add_option("--len", tones_args.len, "Sample count");
  tones->add_option("--phase-mode", tones_args.phase_mode, "fixed or segment-random")
      ->check(CLI::IsMember({"fixed", "segment-random"}));
  tones->add_option("--seglen", tones_args.seglen, "Segment length for segment-random phases");
  tones
      ->add_option("--noise-db", tones_args.noise_db,
                   "Phase noise power, dB relative to 1 rad^2; <= -300 disables")
      ->each([&tones_args](const std::string&) { tones_args.have_phase_noise = true; });
  tones
      ->add_option("--additive-noise-db", tones_args.additive_noise_db,
                   "Additive noise power, dB relative to unit signal power; <= -300 disables")
      ->each([&tones_args](const std::string&) { tones_args.have_additive_noise = true; });
  tones->add_option("--nominal-freq", tones_args.nominal, "Metadata nominal (default first tone)");
  tones->add_option("--seed", tones_args.common.seed, "Noise seed");
  tones->add_option("--axis", tones_args.common.axis, "Channel carrying the signal")
      ->check(CLI::IsMember({"d", "q"}));

  GenClippedArgs clipped_args;
  auto* clipped = gen->add_subcommand("clipped", "Hard-limited sinusoid");
  clipped->add_option("--out", clipped_args.common.out_path, "Output record path")->required();
  clipped->add_option("--kind", clipped_args.kind, "unilateral or bilateral")
      ->required()
      ->check(CLI::IsMember({"unilateral", "bilateral"}));
  clipped->add_option("--eta", clipped_args.eta, "Drive ratio A / clip level, >= 1")->required();
  clipped->add_option("--f", clipped_args.freq, "Fundamental, Hz")->required();
  clipped->add_option("--fs", clipped_args.fs, "Sample rate, Hz")->required();
  clipped->add_option("--len", clipped_args.len, "Sample count");
  clipped->add_option("--clip", clipped_args.clip, "Clip level a");
  clipped->add_option("--dc", clipped_args.dc, "Operating offset (unilateral only)");
  clipped->add_option("--noise-db", clipped_args.noise_db,
                      "Additive noise power, dB relative to signal power; <= -300 disables");
  clipped->add_option("--nominal-freq", clipped_args.nominal, "Metadata nominal (default --f)");
  clipped->add_option("--seed", clipped_args.common.seed, "Noise seed");
  clipped->add_option("--axis", clipped_args.common.axis, "Channel carrying the signal")
      ->check(CLI::IsMember({"d", "q"}));

  GenSimulateArgs sim_args;
  auto* simulate = gen->add_subcommand("simulate", "Converter-loop limit-cycle record");
  simulate->add_option("--out", sim_args.common.out_path, "Output record path")->required();
  simulate->add_option("--preset", sim_args.preset, "Loop preset (case2-reduced)")->required();
  simulate->add_option("--duration", sim_args.duration, "Simulated seconds");
  simulate->add_option("--decimate", sim_args.decim, "Keep every k-th sample");
  simulate->add_option("--skip", sim_args.skip, "Seconds dropped from the start");
  simulate->add_option("--noise-db", sim_args.noise_db,
                       "Measurement noise, dB relative to d-ripple rms; <= -300 disables");
  simulate->add_option("--seed", sim_args.common.seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*analyze) return run_analyze(analyze_args);
    if (*spectrum) return run_spectrum(spectrum_args);
    if (*tones) return run_gen_tones(tones_args);
    if (*clipped) return run_gen_clipped(clipped_args);
    if (*simulate) return run_gen_simulate(sim_args);
  } catch (const Error& e) {
    std::cerr << "error: " << g_stage << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << g_stage << ": " << e.what() << '\n';
    return 2;
  }
  return 2;
}
