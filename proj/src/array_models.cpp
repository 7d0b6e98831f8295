#include "seld/array_models.hpp"

#include <cmath>

#include "seld/errors.hpp"
#include "seld/special.hpp"

namespace seld {

const MicGeometry& mic_geometry() {
  static const MicGeometry geometry;
  return geometry;
}

double cos_gamma(int mic_index, const Doa& doa) {
  const Doa& mic = mic_geometry().positions.at(mic_index - 1);
  const double el = deg2rad(doa.elevation_deg);
  const double el_m = deg2rad(mic.elevation_deg);
  const double daz = deg2rad(doa.azimuth_deg - mic.azimuth_deg);
  return std::cos(el) * std::cos(el_m) * std::cos(daz) +
         std::sin(el) * std::sin(el_m);
}

std::complex<double> mic_response(int mic_index, const Doa& doa,
                                  double freq_hz) {
  if (!(freq_hz > 0.0))
    throw DomainError("mic_response: frequency must be > 0");
  const MicGeometry& g = mic_geometry();
  const double x = 2.0 * kPi * freq_hz * g.radius_m / g.speed_of_sound;
  const double cg = cos_gamma(mic_index, doa);

  // i^{n-1} cycles with period 4; n = 0 gives i^{-1} = -i.
  static constexpr std::complex<double> kIpow[4] = {
      {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};

  std::complex<double> sum = 0.0;
  for (int n = 0; n <= 30; ++n) {
    const std::complex<double> ipow = kIpow[((n - 1) % 4 + 4) % 4];
    sum += ipow / spherical_hankel2_deriv(n, x) * (2.0 * n + 1.0) *
           legendre_p(n, cg);
  }
  return sum / (x * x);
}

std::array<double, 4> foa_steering(const Doa& doa) {
  const double az = deg2rad(doa.azimuth_deg);
  const double el = deg2rad(doa.elevation_deg);
  return {1.0, std::sin(az) * std::cos(el), std::sin(el),
          std::cos(az) * std::cos(el)};
}

MultichannelClip synthesize_foa_point_source(std::span<const double> signal,
                                             const Doa& doa, int sample_rate) {
  if (signal.empty())
    throw EmptyClip("synthesize_foa_point_source: empty signal");
  const std::array<double, 4> h = foa_steering(doa);
  MultichannelClip clip = make_clip(4, signal.size(), sample_rate,
                                    ClipFormat::kFoa);
  for (int ch = 0; ch < 4; ++ch)
    for (std::size_t i = 0; i < signal.size(); ++i)
      clip.channels[ch][i] = h[ch] * signal[i];
  return clip;
}

}  // namespace seld
