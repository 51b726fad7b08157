#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hosdetect/common.hpp"
#include "hosdetect/dq.hpp"
#include "hosdetect/hardlimit.hpp"
#include "hosdetect/hos.hpp"

namespace hosdetect::detect {

struct DetectionConfig {
  double sigma_b = 0.3;        // coherence threshold for peak candidacy
  double harmonic_tol = 1.0;   // bins; grid-consistency tolerance
  double min_prominence = 0.4; // peak must exceed the map median by this
  void validate() const;
};

enum class Classification {
  UnilateralSaturation,
  BilateralSaturation,
  NoHardLimitNonlinearity,
};

enum class Axis { D, Q };

struct Peak {
  std::vector<std::size_t> coords;  // canonical bin indices, 2 (bi) or 3 (tri)
  std::vector<double> freqs_hz;
  double value = 0.0;  // raw coherence
};

struct PeakList {
  hos::CoherenceOrder order = hos::CoherenceOrder::Bi;
  double df = 0.0;
  std::vector<Peak> entries;  // descending by value, then lexicographic
};

struct SaturationEstimate {
  double eta = 1.0;
  double hd = 0.0;                     // measured harmonic-distortion ratio
  double fundamental_amplitude = 0.0;  // window-corrected amplitude at f0
  double harmonic_amplitude = 0.0;     // at 2*f0 (unilateral) or 3*f0 (bilateral)
};

struct DetectionReport {
  Axis axis = Axis::D;
  Classification classification = Classification::NoHardLimitNonlinearity;
  std::optional<double> fundamental_hz;  // absent when no tone dominates
  std::optional<SaturationEstimate> saturation;
  PeakList bic_peaks, tric_peaks;
  std::vector<std::string> warnings;
};

// Full per-channel result; the spectra back the report and CSV dumps.
struct ChannelAnalysis {
  DetectionReport report;
  hos::SegmentConfig config;
  hos::PowerSpectrum power;
  hos::BispectrumGrid bispec;
  hos::TrispectrumGrid trispec;
  hos::CoherenceMap bic, tric;
};

struct AnalysisOptions {
  std::optional<hos::SegmentConfig> segment;  // absent: auto per channel
  DetectionConfig detection;
  std::optional<double> theta0;  // absent: estimated from the record
};

// Frequency of the strongest bin, refined by parabolic interpolation over its
// 3-bin neighborhood. Throws NoDominantTone unless that bin exceeds 10x the
// median bin power.
double fundamental_frequency(const hos::PowerSpectrum& p);

// Strict local maxima over the symmetry-extended 8-neighborhood (bi) or
// 26-neighborhood (tri) with raw value >= sigma_b, exceeding the map-wide
// median by min_prominence. Neighbors that fold onto the cell itself or leave
// the domain are ignored. Reported values are clamped to [0, 1].
PeakList find_peaks(const hos::CoherenceMap& map, const DetectionConfig& cfg);

// Grid-consistent bicoherence + tricoherence peaks -> Unilateral; none + odd-
// harmonic tricoherence peaks -> Bilateral; otherwise None. Bicoherence
// evidence without tricoherence support classifies Unilateral and appends an
// inconsistent-evidence warning.
Classification classify(const PeakList& bic_peaks, const PeakList& tric_peaks, double f0_hz,
                        const DetectionConfig& cfg, std::vector<std::string>* warnings = nullptr);

// Harmonic-distortion readout from +-1-bin energy sums around the fundamental
// and its second (unilateral) or third (bilateral) harmonic, inverted to the
// saturation level. Throws OutOfRange when the harmonic leaves the spectrum or
// the ratio exceeds the theoretical supremum of the limiter model.
SaturationEstimate estimate_saturation(const hos::PowerSpectrum& p, double f0_hz,
                                       Classification cls, const hos::SegmentConfig& cfg);

// Picks a segmentation from a coarse whole-record spectrum: about eight
// fundamental cycles per segment, power-of-two length in [128, 4096], halved
// until at least four segments fit; segment count capped at 256.
hos::SegmentConfig auto_segment_config(std::span<const double> x, double fs);

ChannelAnalysis analyze_channel(std::span<const double> x, double fs, Axis axis,
                                const std::optional<hos::SegmentConfig>& seg,
                                const DetectionConfig& det);

// Full pipeline on a three-phase record: rotation angle, dq projection, then
// an independent per-channel analysis of x_d and x_q.
std::pair<ChannelAnalysis, ChannelAnalysis> analyze(const dq::WaveformRecord& rec,
                                                    const AnalysisOptions& opt);

// Same, for records already in the rotating frame.
std::pair<ChannelAnalysis, ChannelAnalysis> analyze_dq(std::span<const double> xd,
                                                       std::span<const double> xq, double fs,
                                                       const AnalysisOptions& opt);

}  // namespace hosdetect::detect
