#pragma once

#include <array>
#include <complex>
#include <span>

#include "seld/audio.hpp"
#include "seld/geometry.hpp"

namespace seld {

// Tetrahedral capsule arrangement of the MIC format on a rigid sphere.
struct MicGeometry {
  std::array<Doa, 4> positions{Doa{45.0, 35.0}, Doa{-45.0, -35.0},
                               Doa{135.0, -35.0}, Doa{-135.0, 35.0}};
  double radius_m = 0.042;
  double speed_of_sound = 343.0;
};

const MicGeometry& mic_geometry();

// Cosine of the angle between microphone mic_index (1..4) and the DOA:
// cos(gamma) = cos(el) cos(el_m) cos(az - az_m) + sin(el) sin(el_m).
double cos_gamma(int mic_index, const Doa& doa);

// Rigid-sphere directional response of one capsule,
//   H = 1/(wR/c)^2 sum_{n=0}^{30} i^{n-1}/h'_n(2)(wR/c) (2n+1) P_n(cos gamma),
// truncated at n = 30. Throws DomainError for freq <= 0.
std::complex<double> mic_response(int mic_index, const Doa& doa, double freq_hz);

// SN3D first-order steering vector in (W, Y, Z, X) order:
// (1, sin(az)cos(el), sin(el), cos(az)cos(el)).
std::array<double, 4> foa_steering(const Doa& doa);

// Anechoic FOA fixture: channel m = steering[m] * signal.
MultichannelClip synthesize_foa_point_source(std::span<const double> signal,
                                             const Doa& doa,
                                             int sample_rate = 24000);

}  // namespace seld
