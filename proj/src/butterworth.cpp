#include "spd/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spd/error.hpp"

namespace spd::dsp {

using cplx = std::complex<double>;

SosFilter butterworth_bandpass(int prototype_order, double low_hz, double high_hz,
                               double sample_rate) {
  if (prototype_order < 1) throw ConfigError("butterworth: order must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("butterworth: sample rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < 0.5 * sample_rate)) {
    throw ConfigError("butterworth: band [" + std::to_string(low_hz) + ", " +
                      std::to_string(high_hz) + "] Hz must satisfy 0 < low < high < " +
                      std::to_string(0.5 * sample_rate));
  }
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * sample_rate;
  const double w1 = fs2 * std::tan(pi * low_hz / sample_rate);
  const double w2 = fs2 * std::tan(pi * high_hz / sample_rate);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  // Analog prototype poles -> band-pass poles -> bilinear z-plane poles.
  std::vector<cplx> upper;
  std::vector<double> real;
  const int n = prototype_order;
  for (int k = 1; k <= n; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + n - 1.0) / (2.0 * n));
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    for (const cplx s : {half + root, half - root}) {
      const cplx z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) > 1e-12 * std::abs(z)) {
        if (z.imag() > 0.0) upper.push_back(z);
      } else {
        real.push_back(z.real());
      }
    }
  }
  std::sort(real.begin(), real.end());

  SosFilter f;
  for (const cplx& z : upper) f.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    f.sections.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  }

  // Unit gain at the digital image of the analog center frequency.
  const double center_hz = sample_rate / pi * std::atan(w0 / fs2);
  const double gain = std::abs(frequency_response(f, center_hz, sample_rate));
  const double per_section = std::pow(gain, -1.0 / static_cast<double>(f.sections.size()));
  for (Biquad& b : f.sections) {
    b.b0 *= per_section;
    b.b1 *= per_section;
    b.b2 *= per_section;
  }
  return f;
}

std::complex<double> frequency_response(const SosFilter& filter, double freq_hz,
                                        double sample_rate) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  cplx h = 1.0;
  for (const Biquad& b : filter.sections) {
    h *= (b.b0 + zinv * (b.b1 + zinv * b.b2)) / (1.0 + zinv * (b.a1 + zinv * b.a2));
  }
  return h;
}

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x,
                            std::span<const double> initial_state) {
  if (!initial_state.empty() && initial_state.size() != 2 * filter.sections.size()) {
    throw ValidationError("sosfilt: initial state must hold two values per section");
  }
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < filter.sections.size(); ++s) {
    const Biquad& b = filter.sections[s];
    double z1 = initial_state.empty() ? 0.0 : initial_state[2 * s];
    double z2 = initial_state.empty() ? 0.0 : initial_state[2 * s + 1];
    for (double& v : y) {
      const double in = v;
      const double out = b.b0 * in + z1;
      z1 = b.b1 * in - b.a1 * out + z2;
      z2 = b.b2 * in - b.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sosfilt_zi(const SosFilter& filter) {
  std::vector<double> zi;
  zi.reserve(2 * filter.sections.size());
  double scale = 1.0;
  for (const Biquad& b : filter.sections) {
    const double dc = (b.b0 + b.b1 + b.b2) / (1.0 + b.a1 + b.a2);
    const double z2 = b.b2 - b.a2 * dc;
    const double z1 = b.b1 - b.a1 * dc + z2;
    zi.push_back(scale * z1);
    zi.push_back(scale * z2);
    scale *= dc;
  }
  return zi;
}

std::size_t filtfilt_padlen(const SosFilter& filter, std::size_t length) {
  const std::size_t wanted = 3 * (2 * filter.sections.size() + 1);
  return length == 0 ? 0 : std::min(wanted, length - 1);
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t len = x.size();
  const auto min_len = static_cast<std::size_t>(3 * filter.order());
  if (len < std::max<std::size_t>(min_len, 2)) {
    throw ValidationError("filtfilt: signal has " + std::to_string(len) +
                          " samples; need at least " + std::to_string(min_len));
  }
  const std::size_t pad = filtfilt_padlen(filter, len);

  std::vector<double> ext;
  ext.reserve(len + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[len - 1] - x[len - 1 - i]);

  const std::vector<double> zi = sosfilt_zi(filter);
  auto scaled = [&](double v) {
    std::vector<double> s(zi);
    for (double& z : s) z *= v;
    return s;
  };

  std::vector<double> fwd = sosfilt(filter, ext, scaled(ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = sosfilt(filter, fwd, scaled(fwd.front()));
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
          bwd.begin() + static_cast<std::ptrdiff_t>(pad + len)};
}

}  // namespace spd::dsp
