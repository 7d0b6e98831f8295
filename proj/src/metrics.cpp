#include "seld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "seld/errors.hpp"

namespace seld {

std::vector<SegmentItems> segmentize(const EventAnnotationList& ann,
                                     int frames_per_segment) {
  const long max_frame = ann.max_frame();
  if (max_frame < 0) return {};
  const long num_segments = max_frame / frames_per_segment + 1;
  std::vector<SegmentItems> out(num_segments);

  // (segment, class, track) -> accumulated unit vectors.
  std::map<std::tuple<long, int, int>, std::array<double, 3>> acc;
  for (const AnnotationRow& r : ann.rows) {
    const long seg = r.frame / frames_per_segment;
    const auto u = doa_to_unit(r.doa());
    auto& a = acc[{seg, r.class_id, r.track_id}];
    for (int i = 0; i < 3; ++i) a[i] += u[i];
  }
  for (const auto& [key, sum] : acc) {
    const auto& [seg, class_id, track_id] = key;
    const double n =
        std::sqrt(sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]);
    SegmentItem item;
    item.class_id = class_id;
    if (n > 0.0)
      item.direction = {sum[0] / n, sum[1] / n, sum[2] / n};
    out[seg].push_back(item);
  }
  return out;
}

std::vector<SegmentFrame> zip_segments(const std::vector<SegmentItems>& refs,
                                       const std::vector<SegmentItems>& preds) {
  std::vector<SegmentFrame> out(std::max(refs.size(), preds.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i < refs.size()) out[i].refs = refs[i];
    if (i < preds.size()) out[i].preds = preds[i];
  }
  return out;
}

// Potential-based Kuhn-Munkres, O(n^2 m). Rows must not outnumber columns;
// callers transpose when they do.
namespace {

std::vector<int> assignment_rows_le_cols(
    const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = static_cast<int>(cost.front().size());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<int> min_cost_assignment(
    const std::vector<std::vector<double>>& cost) {
  if (cost.empty()) return {};
  const int n = static_cast<int>(cost.size());
  const int m = static_cast<int>(cost.front().size());
  if (n <= m) return assignment_rows_le_cols(cost);
  std::vector<std::vector<double>> t(m, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) t[j][i] = cost[i][j];
  const std::vector<int> col_to_row = assignment_rows_le_cols(t);
  std::vector<int> row_to_col(n, -1);
  for (int j = 0; j < m; ++j)
    if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
  return row_to_col;
}

MatchCounts match_and_count(const SegmentFrame& segment, double gate_deg) {
  MatchCounts c;
  c.refs = static_cast<long>(segment.refs.size());

  std::map<int, std::pair<SegmentItems, SegmentItems>> by_class;
  for (const SegmentItem& r : segment.refs)
    by_class[r.class_id].first.push_back(r);
  for (const SegmentItem& p : segment.preds)
    by_class[p.class_id].second.push_back(p);

  long seg_fp = 0, seg_fn = 0, seg_tp = 0;
  for (const auto& [class_id, rp] : by_class) {
    const SegmentItems& refs = rp.first;
    const SegmentItems& preds = rp.second;
    if (refs.empty()) {
      seg_fp += static_cast<long>(preds.size());
      continue;
    }
    if (preds.empty()) {
      seg_fn += static_cast<long>(refs.size());
      continue;
    }
    std::vector<std::vector<double>> cost(
        refs.size(), std::vector<double>(preds.size()));
    for (std::size_t i = 0; i < refs.size(); ++i)
      for (std::size_t j = 0; j < preds.size(); ++j)
        cost[i][j] =
            angular_distance_deg(refs[i].direction, preds[j].direction);
    const std::vector<int> match = min_cost_assignment(cost);

    long paired = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (match[i] < 0) continue;
      ++paired;
      const double angle = cost[i][match[i]];
      c.angle_sum += angle;
      c.pair_angles_deg.push_back(angle);
      ++c.matched;
      if (angle <= gate_deg) {
        ++seg_tp;
      } else {
        ++seg_fp;  // gated-out pair counts both ways
        ++seg_fn;
      }
    }
    seg_fp += static_cast<long>(preds.size()) - paired;
    seg_fn += static_cast<long>(refs.size()) - paired;
  }

  c.tp = seg_tp;
  c.fp = seg_fp;
  c.fn = seg_fn;
  c.subs = std::min(seg_fn, seg_fp);
  c.dels = seg_fn - c.subs;
  c.ins = seg_fp - c.subs;
  return c;
}

SeldScores compute_scores(const std::vector<SegmentFrame>& segments,
                          double gate_deg,
                          std::array<ClassScores, kNumClasses>* per_class) {
  long tp = 0, fp = 0, fn = 0, sdi = 0, refs = 0, matched = 0;
  double angle_sum = 0.0;
  for (const SegmentFrame& seg : segments) {
    const MatchCounts c = match_and_count(seg, gate_deg);
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    sdi += c.subs + c.dels + c.ins;
    refs += c.refs;
    matched += c.matched;
    angle_sum += c.angle_sum;

    if (per_class) {
      // Re-run per class for the report tables; cheap at these sizes.
      std::map<int, SegmentFrame> split;
      for (const SegmentItem& r : seg.refs) split[r.class_id].refs.push_back(r);
      for (const SegmentItem& p : seg.preds)
        split[p.class_id].preds.push_back(p);
      for (const auto& [class_id, sub] : split) {
        const MatchCounts cc = match_and_count(sub, gate_deg);
        ClassScores& s = (*per_class)[class_id];
        s.tp += cc.tp;
        s.fp += cc.fp;
        s.fn += cc.fn;
        s.matched += cc.matched;
        s.refs += cc.refs;
        s.angle_sum += cc.angle_sum;
      }
    }
  }
  if (refs == 0)
    throw NoReferences("compute_scores: no reference events");

  SeldScores s;
  s.er20 = static_cast<double>(sdi) / refs;
  const double precision = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
  s.f20 = precision + recall > 0.0
              ? 2.0 * precision * recall / (precision + recall)
              : 0.0;
  s.le_cd_deg = matched > 0 ? angle_sum / matched : 180.0;
  s.lr_cd = static_cast<double>(matched) / refs;
  s.seld_score =
      (s.er20 + (1.0 - s.f20) + s.le_cd_deg / 180.0 + (1.0 - s.lr_cd)) / 4.0;
  return s;
}

SeldScores evaluate_annotations(const EventAnnotationList& ref,
                                const EventAnnotationList& pred,
                                double gate_deg,
                                std::array<ClassScores, kNumClasses>*
                                    per_class) {
  return compute_scores(zip_segments(segmentize(ref), segmentize(pred)),
                        gate_deg, per_class);
}

}  // namespace seld
