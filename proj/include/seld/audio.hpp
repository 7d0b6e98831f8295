#pragma once

#include <cstddef>
#include <vector>

namespace seld {

// MIC = 4-capsule tetrahedral array, FOA = (W,Y,Z,X) ambisonics,
// BOTH = 8 channels laid out MIC 1-4 then FOA W,Y,Z,X.
enum class ClipFormat { kMic, kFoa, kBoth };

inline int expected_channels(ClipFormat f) {
  return f == ClipFormat::kBoth ? 8 : 4;
}

struct MultichannelClip {
  std::vector<std::vector<double>> channels;  // [channel][sample], in [-1, 1]
  int sample_rate = 24000;
  ClipFormat format = ClipFormat::kMic;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels.front().size();
  }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(num_samples()) / sample_rate
                           : 0.0;
  }
};

MultichannelClip make_clip(int num_channels, std::size_t num_samples,
                           int sample_rate, ClipFormat format);

// Concatenates a 4-channel MIC clip and a 4-channel FOA clip into the
// 8-channel BOTH layout. Sample rates and lengths must match.
MultichannelClip concat_both(const MultichannelClip& mic,
                             const MultichannelClip& foa);

}  // namespace seld
