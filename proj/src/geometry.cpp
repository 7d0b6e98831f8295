#include "seld/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace seld {

double wrap_azimuth_deg(double az_deg) {
  double a = std::fmod(az_deg + 180.0, 360.0);
  if (a < 0.0) a += 360.0;
  return a - 180.0;
}

Doa make_doa(double azimuth_deg, double elevation_deg) {
  double el = std::fmod(elevation_deg, 360.0);
  if (el > 180.0) el -= 360.0;
  if (el < -180.0) el += 360.0;
  double az = azimuth_deg;
  if (el > 90.0) {
    el = 180.0 - el;
    az += 180.0;
  } else if (el < -90.0) {
    el = -180.0 - el;
    az += 180.0;
  }
  return {wrap_azimuth_deg(az), el};
}

std::array<double, 3> doa_to_unit(const Doa& doa) {
  const double az = deg2rad(doa.azimuth_deg);
  const double el = deg2rad(doa.elevation_deg);
  return {std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
          std::sin(el)};
}

Doa unit_to_doa(const std::array<double, 3>& v) {
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  const double z = std::clamp(v[2] / norm, -1.0, 1.0);
  return make_doa(rad2deg(std::atan2(v[1], v[0])), rad2deg(std::asin(z)));
}

double angular_distance_deg(const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  if (a == b) return 0.0;  // identical directions stay exactly at zero
  const double dot =
      std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
  return rad2deg(std::acos(dot));
}

double angular_distance_deg(const Doa& a, const Doa& b) {
  return angular_distance_deg(doa_to_unit(a), doa_to_unit(b));
}

}  // namespace seld
