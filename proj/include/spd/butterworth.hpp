#pragma once

#include <complex>
#include <span>
#include <vector>

namespace spd::dsp {

/// Direct-form II transposed biquad; a0 is normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct SosFilter {
  std::vector<Biquad> sections;
  /// Order of the realized digital filter (2 per band-pass section).
  int order() const { return 2 * static_cast<int>(sections.size()); }
};

/// Butterworth band-pass built from an order-`prototype_order` analog lowpass
/// prototype (2 * prototype_order poles), bilinear transform with prewarping,
/// unit gain at the geometric center frequency.
SosFilter butterworth_bandpass(int prototype_order, double low_hz, double high_hz,
                               double sample_rate);

std::complex<double> frequency_response(const SosFilter& filter, double freq_hz,
                                        double sample_rate);

/// Causal filtering with optional per-section initial state (2 values each).
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x,
                            std::span<const double> initial_state = {});

/// Step-response steady state per section, scaled for a unit input.
std::vector<double> sosfilt_zi(const SosFilter& filter);

/// Zero-phase filtering: odd extension at both ends, forward pass, backward
/// pass. Output length equals input length.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

/// Extension length used by filtfilt for a given filter and input length.
std::size_t filtfilt_padlen(const SosFilter& filter, std::size_t length);

}  // namespace spd::dsp
