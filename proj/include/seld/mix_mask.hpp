#pragma once

#include <cstdint>

#include "seld/audio.hpp"
#include "seld/dataset.hpp"
#include "seld/features.hpp"

namespace seld {

struct TdmConfig {
  double gain_min = 0.5;  // per-segment amplitude range, drawn uniformly
  double gain_max = 1.0;
};

// Time-domain mix of two single-event segments: the shorter is placed at a
// seeded whole-label-frame offset inside the longer, each side scaled by its
// drawn gain, labels are the union at the placed offsets. Output length is
// the longer segment's. Throws LayoutMismatch on rate/channel disagreement.
struct TdmOutput {
  MultichannelClip clip;
  EventAnnotationList ann;
};
TdmOutput tdm_mix(const MultichannelClip& clip_a,
                  const EventAnnotationList& ann_a,
                  const MultichannelClip& clip_b,
                  const EventAnnotationList& ann_b, std::uint64_t seed,
                  const TdmConfig& cfg = {});

struct TfmConfig {
  int max_time_mask = 35;     // frames
  int time_mask_period = 100; // one time mask per window of this many frames
  int max_freq_mask = 30;     // bins
  int masked_map_count = 11;  // leading maps the masks apply to
};

// Zeroes one seeded time span per 100-frame window and one seeded frequency
// band, on the first masked_map_count maps only; the remaining maps pass
// through untouched.
FeatureStack tfm_apply(const FeatureStack& stack, const TfmConfig& cfg,
                       std::uint64_t seed);

// Mask placement for one seed, for the preview subcommand and count oracles.
struct TfmPlacement {
  struct Window {
    int start_frame;
    int length;
  };
  std::vector<Window> time_masks;
  int freq_start = 0;
  int freq_length = 0;
};
TfmPlacement tfm_placement(int num_frames, int dims, const TfmConfig& cfg,
                           std::uint64_t seed);

}  // namespace seld
