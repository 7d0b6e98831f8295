#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seld/audio.hpp"
#include "seld/dsp.hpp"

namespace seld {

enum class MapRole : std::uint32_t {
  kFoaLogMel = 0,
  kMicLogMel = 1,
  kIntensity = 2,
  kGccPhat = 3,
};

// Stack of [map][frame][dim] features, dim = 64 (mel bands or lag bins).
// BOTH input yields 17 maps in the fixed order FOA log-mel (4), MIC log-mel
// (4), IV (3), GCC-PHAT (6); the first 11 are the maskable set.
struct FeatureStack {
  std::vector<std::vector<std::vector<double>>> maps;
  std::vector<MapRole> layout;
  double frame_rate = 0.0;

  int num_maps() const { return static_cast<int>(maps.size()); }
  int num_frames() const {
    return maps.empty() ? 0 : static_cast<int>(maps.front().size());
  }
  int dims() const {
    return num_frames() == 0 ? 0
                             : static_cast<int>(maps.front().front().size());
  }
  // Maps carrying no DOA information, eligible for time/frequency masking.
  int maskable_maps() const;
};

struct FeatureConfig {
  StftConfig stft;
  int n_mels = 64;
  double log_floor = 1e-10;
};

// log(max(bank |X|^2, floor)) per channel, natural log.
std::vector<std::vector<std::vector<double>>> logmel(
    const StftTensor& x, const std::vector<std::vector<double>>& bank,
    double floor = 1e-10);

// Acoustic intensity vector of a (W, Y, Z, X) tensor: per T-F unit
// I = Re(conj(W) (Y, Z, X)), normalized by the local energy, then pooled
// into mel bands. Returns [3][frame][n_mels] in (y, z, x) axis order.
std::vector<std::vector<std::vector<double>>> intensity_vector(
    const StftTensor& foa, const std::vector<std::vector<double>>& bank);

// GCC-PHAT of the 6 unordered MIC pairs (1,2),(1,3),(1,4),(2,3),(2,4),(3,4),
// 64 center lags (-32..31); positive lag means channel j lags channel i.
std::vector<std::vector<std::vector<double>>> gcc_phat(const StftTensor& mic);

// Full stack for MIC / FOA / BOTH input (10 / 7 / 17 maps).
FeatureStack build_stack(const MultichannelClip& clip,
                         const FeatureConfig& cfg = {});

// Binary tensor file, little-endian: magic "SELDFEAT", version, dtype
// (0 = f32), n_maps, n_frames, n_dims, frame rate, role code per map, then
// [map][frame][dim] float32 data.
void write_feature_file(const FeatureStack& stack,
                        const std::filesystem::path& path);
FeatureStack read_feature_file(const std::filesystem::path& path);

}  // namespace seld
