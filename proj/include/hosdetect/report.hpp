#pragma once

#include <iosfwd>
#include <string>

#include "hosdetect/detect.hpp"

namespace hosdetect::report {

// Detection results rendered as a JSON document with 2-space indentation and
// a trailing newline. Top level: schema tag, tool version, input digest,
// per-axis results; either axis may be null when it was not analyzed. Each
// axis carries classification, fundamental, saturation estimate, peak lists
// (each peak with bins, frequencies, raw and clamped value), warnings, and
// the effective estimation configuration. All numbers in the document are
// finite; rendering is byte-deterministic.
std::string render_report(const detect::ChannelAnalysis* d, const detect::ChannelAnalysis* q,
                          const std::string& input_digest);

// Plot-ready grids. Power rows are "m,value"; bispectrum rows "m,n,re,im";
// trispectrum rows "m,n,o,re,im"; coherence rows end in the raw value.
// Every file starts with a "# df_hz=..." comment.
void write_power_csv(std::ostream& out, const hos::PowerSpectrum& p);
void write_bispectrum_csv(std::ostream& out, const hos::BispectrumGrid& g);
void write_trispectrum_csv(std::ostream& out, const hos::TrispectrumGrid& g);
void write_coherence_csv(std::ostream& out, const hos::CoherenceMap& m);

}  // namespace hosdetect::report
