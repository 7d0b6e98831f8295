#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seld/audio.hpp"
#include "seld/geometry.hpp"

namespace seld {

// The 14 spatial event classes, ids 0..13.
inline constexpr int kNumClasses = 14;
const std::array<std::string, kNumClasses>& class_names();

// Label frames are 100 ms.
inline constexpr int kLabelFramesPerSecond = 10;

struct AnnotationRow {
  long frame = 0;  // 100 ms index
  int class_id = 0;
  int track_id = 0;
  double azimuth_deg = 0.0;    // [-180, 180)
  double elevation_deg = 0.0;  // [-90, 90]

  Doa doa() const { return Doa{azimuth_deg, elevation_deg}; }
};

struct EventAnnotationList {
  std::vector<AnnotationRow> rows;

  // Sorts by (frame, class, track), the canonical order.
  void sort_canonical();
  long max_frame() const;
  bool empty() const { return rows.empty(); }
};

// DCASE metadata CSV: "frame,class,track,azimuth,elevation", no header,
// LF line endings. Throws MalformedRow (with line number) / OutOfRangeClass.
EventAnnotationList parse_metadata(const std::filesystem::path& path);
EventAnnotationList parse_metadata_text(const std::string& text,
                                        const std::string& origin = "<memory>");
void emit_metadata(const EventAnnotationList& ann,
                   const std::filesystem::path& path);
std::string emit_metadata_text(const EventAnnotationList& ann);

// WAV I/O. Readers accept PCM16, PCM24 and float32, 4 or 8 channels,
// little-endian RIFF; samples are normalized to [-1, 1]. write_wav emits
// float32 so a write/read round trip is bit exact.
MultichannelClip read_wav(const std::filesystem::path& path);
void write_wav(const MultichannelClip& clip, const std::filesystem::path& path);

// A maximal run of one (class, track) instance, flagged for MCS eligibility.
struct SegmentDescriptor {
  std::string file_id;
  long start_frame = 0;  // inclusive
  long end_frame = 0;    // exclusive
  int class_id = 0;
  int track_id = 0;
  double azimuth_deg = 0.0;  // run mean direction
  double elevation_deg = 0.0;
  bool is_static = false;
  bool overlapping = false;

  long frames() const { return end_frame - start_frame; }
  bool eligible(double min_seconds = 0.5) const {
    return is_static && !overlapping &&
           frames() >= static_cast<long>(min_seconds * kLabelFramesPerSecond);
  }
};

struct SegmentOptions {
  double static_tolerance_deg = 5.0;  // max pairwise DOA spread of a run
};

// Splits the annotation into maximal solo/overlapped runs per (class, track)
// instance. Solo runs carry the static flag (DOA spread <= tolerance); any
// co-active frame in a run sets `overlapping`.
std::vector<SegmentDescriptor> extract_segments(
    const EventAnnotationList& ann, const std::string& file_id = "",
    const SegmentOptions& opts = {});

// Cuts the audio/annotation pair of one segment out of its source clip.
// The result is rebased to frame 0 and flagged with the segment's class.
struct SegmentData {
  MultichannelClip clip;
  EventAnnotationList ann;
  SegmentDescriptor descriptor;
};
SegmentData slice_segment(const MultichannelClip& clip,
                          const EventAnnotationList& ann,
                          const SegmentDescriptor& d);

// Segment inventory file: one JSON object per line.
void write_inventory(const std::vector<SegmentDescriptor>& segments,
                     const std::filesystem::path& path);
std::vector<SegmentDescriptor> read_inventory(const std::filesystem::path& path);

}  // namespace seld
