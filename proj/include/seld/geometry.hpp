#pragma once

#include <array>

namespace seld {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an azimuth into the half-open canonical range [-180, 180).
double wrap_azimuth_deg(double az_deg);

// Direction of arrival, azimuth in [-180, 180) and elevation in [-90, 90].
// Azimuth increases counter-clockwise seen from +z, elevation 0 at the
// horizon, +90 at zenith.
struct Doa {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

// Builds a Doa with both angles folded into the canonical domains (an
// elevation overshooting a pole reflects back and flips the azimuth).
Doa make_doa(double azimuth_deg, double elevation_deg);

// Unit Cartesian vector (x, y, z) with x = cos(az)cos(el), y = sin(az)cos(el),
// z = sin(el).
std::array<double, 3> doa_to_unit(const Doa& doa);

Doa unit_to_doa(const std::array<double, 3>& v);

// Great-circle angle between two unit vectors, in degrees, in [0, 180].
double angular_distance_deg(const std::array<double, 3>& a,
                            const std::array<double, 3>& b);

double angular_distance_deg(const Doa& a, const Doa& b);

}  // namespace seld
