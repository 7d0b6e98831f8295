#include "seld/mix_mask.hpp"

#include <algorithm>

#include "seld/errors.hpp"
#include "seld/rng.hpp"

namespace seld {

TdmOutput tdm_mix(const MultichannelClip& clip_a,
                  const EventAnnotationList& ann_a,
                  const MultichannelClip& clip_b,
                  const EventAnnotationList& ann_b, std::uint64_t seed,
                  const TdmConfig& cfg) {
  if (clip_a.num_channels() != clip_b.num_channels() ||
      clip_a.sample_rate != clip_b.sample_rate ||
      clip_a.format != clip_b.format)
    throw LayoutMismatch("tdm_mix: channel layout or sample rate mismatch");

  const bool a_longer = clip_a.num_samples() >= clip_b.num_samples();
  const MultichannelClip& longer = a_longer ? clip_a : clip_b;
  const MultichannelClip& shorter = a_longer ? clip_b : clip_a;
  const EventAnnotationList& ann_long = a_longer ? ann_a : ann_b;
  const EventAnnotationList& ann_short = a_longer ? ann_b : ann_a;

  // Gains are drawn by role (longer first) so mixing (a, b) and (b, a) with
  // one seed resolves to the same placement and the same waveform.
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> gain(cfg.gain_min, cfg.gain_max);
  const double gain_long = gain(rng);
  const double gain_short = gain(rng);

  // Placement in whole label frames keeps the annotation union exact.
  const long spf = longer.sample_rate / kLabelFramesPerSecond;
  const long slack_frames =
      static_cast<long>(longer.num_samples() - shorter.num_samples()) / spf;
  std::uniform_int_distribution<long> place(0, std::max(0L, slack_frames));
  const long offset_frames = slack_frames > 0 ? place(rng) : 0;
  const std::size_t offset_samples =
      static_cast<std::size_t>(offset_frames) * spf;

  TdmOutput out;
  out.clip = make_clip(int(longer.num_channels()), longer.num_samples(),
                       longer.sample_rate, longer.format);
  for (std::size_t ch = 0; ch < longer.num_channels(); ++ch) {
    std::vector<double>& dst = out.clip.channels[ch];
    const std::vector<double>& l = longer.channels[ch];
    const std::vector<double>& s = shorter.channels[ch];
    for (std::size_t i = 0; i < l.size(); ++i) dst[i] = gain_long * l[i];
    for (std::size_t i = 0; i < s.size(); ++i)
      dst[offset_samples + i] += gain_short * s[i];
  }

  out.ann = ann_long;
  for (AnnotationRow r : ann_short.rows) {
    r.frame += offset_frames;
    out.ann.rows.push_back(r);
  }
  out.ann.sort_canonical();
  return out;
}

TfmPlacement tfm_placement(int num_frames, int dims, const TfmConfig& cfg,
                           std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed);
  TfmPlacement p;
  for (int w0 = 0; w0 < num_frames; w0 += cfg.time_mask_period) {
    const int window = std::min(cfg.time_mask_period, num_frames - w0);
    const int max_len = std::min(cfg.max_time_mask, window);
    std::uniform_int_distribution<int> len_dist(0, max_len);
    const int len = len_dist(rng);
    int start = w0;
    if (len < window) {
      std::uniform_int_distribution<int> start_dist(0, window - len);
      start = w0 + start_dist(rng);
    }
    p.time_masks.push_back({start, len});
  }
  const int max_flen = std::min(cfg.max_freq_mask, dims);
  std::uniform_int_distribution<int> flen_dist(0, max_flen);
  p.freq_length = flen_dist(rng);
  if (p.freq_length < dims) {
    std::uniform_int_distribution<int> fstart_dist(0, dims - p.freq_length);
    p.freq_start = fstart_dist(rng);
  }
  return p;
}

FeatureStack tfm_apply(const FeatureStack& stack, const TfmConfig& cfg,
                       std::uint64_t seed) {
  if (stack.num_maps() < cfg.masked_map_count)
    throw FormatMismatch("tfm_apply: stack has fewer maps than the masked set");

  const TfmPlacement p =
      tfm_placement(stack.num_frames(), stack.dims(), cfg, seed);

  FeatureStack out = stack;
  for (int m = 0; m < cfg.masked_map_count; ++m) {
    auto& map = out.maps[m];
    for (const TfmPlacement::Window& w : p.time_masks)
      for (int t = w.start_frame; t < w.start_frame + w.length; ++t)
        std::fill(map[t].begin(), map[t].end(), 0.0);
    for (auto& frame : map)
      for (int d = p.freq_start; d < p.freq_start + p.freq_length; ++d)
        frame[d] = 0.0;
  }
  return out;
}

}  // namespace seld
