#pragma once

#include <array>
#include <optional>
#include <vector>

#include "seld/dataset.hpp"
#include "seld/geometry.hpp"

namespace seld {

// One detected/annotated instance inside a one-second segment.
struct SegmentItem {
  int class_id = 0;
  std::array<double, 3> direction{1.0, 0.0, 0.0};  // unit vector
};

using SegmentItems = std::vector<SegmentItem>;

// Collapses frame-level labels into one-second segments: a (class, track)
// instance is active in a segment when active in any of its frames, its
// direction is the renormalized mean of the active-frame unit vectors.
std::vector<SegmentItems> segmentize(
    const EventAnnotationList& ann,
    int frames_per_segment = kLabelFramesPerSecond);

struct SegmentFrame {
  SegmentItems refs;
  SegmentItems preds;
};

// Zips reference and prediction segment lists, padding the shorter side.
std::vector<SegmentFrame> zip_segments(const std::vector<SegmentItems>& refs,
                                       const std::vector<SegmentItems>& preds);

// Per-segment intermediate statistics. Within each class, predictions are
// paired to references by a minimum-total-angle assignment; pairs within the
// gate are TPs, gated-out pairs count one FP and one FN each but still feed
// the localization error and recall.
struct MatchCounts {
  long tp = 0, fp = 0, fn = 0;
  long subs = 0, dels = 0, ins = 0;
  long refs = 0;
  long matched = 0;       // class-matched pairs regardless of the gate
  double angle_sum = 0.0; // degrees over matched pairs
  std::vector<double> pair_angles_deg;
};

MatchCounts match_and_count(const SegmentFrame& segment,
                            double gate_deg = 20.0);

struct SeldScores {
  double er20 = 0.0;
  double f20 = 0.0;
  double le_cd_deg = 180.0;
  double lr_cd = 0.0;
  double seld_score = 1.0;
};

struct ClassScores {
  long tp = 0, fp = 0, fn = 0;
  long matched = 0, refs = 0;
  double angle_sum = 0.0;
};

// Micro-averaged scores over all segments,
//   SELD = (ER + (1 - F) + LE/180 + (1 - LR)) / 4.
// Throws NoReferences when no segment carries a reference event.
SeldScores compute_scores(const std::vector<SegmentFrame>& segments,
                          double gate_deg = 20.0,
                          std::array<ClassScores, kNumClasses>* per_class =
                              nullptr);

// Convenience: frame-level annotation lists straight to scores.
SeldScores evaluate_annotations(const EventAnnotationList& ref,
                                const EventAnnotationList& pred,
                                double gate_deg = 20.0,
                                std::array<ClassScores, kNumClasses>*
                                    per_class = nullptr);

// Minimum-cost assignment (rows to columns) of a rectangular cost matrix,
// returning per-row column indices (-1 for unassigned rows when rows > cols).
std::vector<int> min_cost_assignment(
    const std::vector<std::vector<double>>& cost);

}  // namespace seld
