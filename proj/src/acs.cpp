#include "seld/acs.hpp"

#include <algorithm>

#include "seld/errors.hpp"

namespace seld {

Doa DoaTransform::apply(const Doa& doa) const {
  return make_doa(azimuth_sign * doa.azimuth_deg + azimuth_offset_deg,
                  elevation_sign * doa.elevation_deg);
}

namespace {

DoaTransform make_transform(int id, std::string pattern, double az_sign,
                            double az_off, double el_sign,
                            std::array<int, 4> mic_source,
                            std::array<int, 4> foa_source,
                            std::array<double, 4> foa_sign) {
  DoaTransform t;
  t.id = id;
  t.pattern = std::move(pattern);
  t.azimuth_sign = az_sign;
  t.azimuth_offset_deg = az_off;
  t.elevation_sign = el_sign;
  t.mic_source = mic_source;
  t.foa_source = foa_source;
  t.foa_sign = foa_sign;
  return t;
}

// The channel maps below are the response-consistent assignments: output
// channel m reads input channel mic_source[m] so that
//   cos_gamma(m, T(d)) == cos_gamma(mic_source[m], d)
// for every DOA d. The six involutive rows coincide with the published
// table; the two 90-degree rotations (rows 1 and 5) are each other's
// published entries, which list where each capsule moves instead of which
// channel feeds it.
std::array<DoaTransform, 8> build_table() {
  return {
      make_transform(1, "phi-pi/2, -theta", 1.0, -90.0, -1.0,
                     {2, 0, 3, 1}, {0, 3, 2, 1}, {1.0, -1.0, -1.0, 1.0}),
      make_transform(2, "-phi-pi/2, theta", -1.0, -90.0, 1.0,
                     {3, 1, 2, 0}, {0, 3, 2, 1}, {1.0, -1.0, 1.0, -1.0}),
      make_transform(3, "phi, theta", 1.0, 0.0, 1.0,
                     {0, 1, 2, 3}, {0, 1, 2, 3}, {1.0, 1.0, 1.0, 1.0}),
      make_transform(4, "-phi, -theta", -1.0, 0.0, -1.0,
                     {1, 0, 3, 2}, {0, 1, 2, 3}, {1.0, -1.0, -1.0, 1.0}),
      make_transform(5, "phi+pi/2, -theta", 1.0, 90.0, -1.0,
                     {1, 3, 0, 2}, {0, 3, 2, 1}, {1.0, 1.0, -1.0, -1.0}),
      make_transform(6, "-phi+pi/2, theta", -1.0, 90.0, 1.0,
                     {0, 2, 1, 3}, {0, 3, 2, 1}, {1.0, 1.0, 1.0, 1.0}),
      make_transform(7, "phi+pi, theta", 1.0, 180.0, 1.0,
                     {3, 2, 1, 0}, {0, 1, 2, 3}, {1.0, -1.0, 1.0, -1.0}),
      make_transform(8, "-phi+pi, -theta", -1.0, 180.0, -1.0,
                     {2, 3, 0, 1}, {0, 1, 2, 3}, {1.0, 1.0, -1.0, -1.0}),
  };
}

}  // namespace

const std::array<DoaTransform, 8>& transform_table() {
  static const std::array<DoaTransform, 8> table = build_table();
  return table;
}

const DoaTransform& transform_by_id(int id) {
  if (id < 1 || id > 8)
    throw ConfigInvalid("transform id must be in 1..8, got " +
                        std::to_string(id));
  return transform_table()[id - 1];
}

MultichannelClip apply_to_audio(const MultichannelClip& clip,
                                const DoaTransform& t) {
  const std::size_t nch = clip.num_channels();
  const bool has_mic =
      clip.format == ClipFormat::kMic || clip.format == ClipFormat::kBoth;
  const bool has_foa =
      clip.format == ClipFormat::kFoa || clip.format == ClipFormat::kBoth;
  if (nch != static_cast<std::size_t>(expected_channels(clip.format)))
    throw FormatUnknown("apply_to_audio: channel count " +
                        std::to_string(nch) + " does not match format tag");

  MultichannelClip out;
  out.sample_rate = clip.sample_rate;
  out.format = clip.format;
  out.channels.resize(nch);
  int base = 0;
  if (has_mic) {
    for (int m = 0; m < 4; ++m)
      out.channels[m] = clip.channels[t.mic_source[m]];
    base = 4;
  }
  if (has_foa) {
    const int foa0 = clip.format == ClipFormat::kBoth ? base : 0;
    for (int m = 0; m < 4; ++m) {
      out.channels[foa0 + m] = clip.channels[foa0 + t.foa_source[m]];
      if (t.foa_sign[m] < 0.0)
        for (double& v : out.channels[foa0 + m]) v = -v;
    }
  }
  return out;
}

EventAnnotationList apply_to_labels(const EventAnnotationList& ann,
                                    const DoaTransform& t) {
  EventAnnotationList out = ann;
  for (AnnotationRow& r : out.rows) {
    const Doa mapped = t.apply(r.doa());
    r.azimuth_deg = mapped.azimuth_deg;
    r.elevation_deg = mapped.elevation_deg;
  }
  out.sort_canonical();
  return out;
}

std::vector<AcsOutput> augment_acs(const MultichannelClip& clip,
                                   const EventAnnotationList& ann,
                                   const std::vector<int>& pattern_ids) {
  if (pattern_ids.empty())
    throw ConfigInvalid("augment_acs: pattern set must be nonempty");
  std::vector<int> ids = pattern_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<AcsOutput> out;
  out.reserve(ids.size());
  for (int id : ids) {
    const DoaTransform& t = transform_by_id(id);
    out.push_back({id, apply_to_audio(clip, t), apply_to_labels(ann, t)});
  }
  return out;
}

}  // namespace seld
