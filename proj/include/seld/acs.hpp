#pragma once

#include <array>
#include <string>
#include <vector>

#include "seld/audio.hpp"
#include "seld/dataset.hpp"
#include "seld/geometry.hpp"

namespace seld {

// One row of the eight-pattern channel-swap table. The DOA map is
//   az' = azimuth_sign * az + azimuth_offset_deg,  el' = elevation_sign * el.
//
// mic_source[m] is the input channel feeding output MIC channel m; it is the
// response-consistent assignment, i.e. for every DOA d and channel m,
// cos_gamma(m, T(d)) == cos_gamma(mic_source[m], d). foa_source/foa_sign is
// the signed counterpart on (W, Y, Z, X); W is never touched.
struct DoaTransform {
  int id = 0;  // 1..8, table row order
  std::string pattern;
  double azimuth_sign = 1.0;
  double azimuth_offset_deg = 0.0;
  double elevation_sign = 1.0;
  std::array<int, 4> mic_source{0, 1, 2, 3};
  std::array<int, 4> foa_source{0, 1, 2, 3};
  std::array<double, 4> foa_sign{1.0, 1.0, 1.0, 1.0};

  Doa apply(const Doa& doa) const;
  bool is_identity() const { return id == 3; }
};

// All eight patterns, in table row order (row 3 is the identity).
const std::array<DoaTransform, 8>& transform_table();

const DoaTransform& transform_by_id(int id);  // 1..8

// Applies the channel map to a MIC, FOA or BOTH clip (BOTH: channels 1-4 MIC,
// 5-8 FOA, remapped atomically). Throws FormatUnknown when the channel count
// does not match the clip's format tag.
MultichannelClip apply_to_audio(const MultichannelClip& clip,
                                const DoaTransform& t);

// Maps every row's direction through the transform and rewraps the angles.
EventAnnotationList apply_to_labels(const EventAnnotationList& ann,
                                    const DoaTransform& t);

struct AcsOutput {
  int pattern_id;
  MultichannelClip clip;
  EventAnnotationList ann;
};

// One output pair per selected pattern, ordered by table row.
std::vector<AcsOutput> augment_acs(const MultichannelClip& clip,
                                   const EventAnnotationList& ann,
                                   const std::vector<int>& pattern_ids);

}  // namespace seld
