#include <doctest.h>

#include <random>

#include "seld/errors.hpp"
#include "seld/mix_mask.hpp"

using namespace seld;

namespace {

MultichannelClip noise_clip(std::size_t len, std::uint64_t seed) {
  MultichannelClip clip = make_clip(8, len, 24000, ClipFormat::kBoth);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto& ch : clip.channels)
    for (double& v : ch) v = u(rng);
  return clip;
}

EventAnnotationList one_event(int class_id, long frames, double az, double el) {
  EventAnnotationList ann;
  for (long f = 0; f < frames; ++f)
    ann.rows.push_back({f, class_id, 0, az, el});
  return ann;
}

FeatureStack constant_stack(int maps, int frames, int dims, double value) {
  FeatureStack s;
  s.maps.assign(maps, std::vector<std::vector<double>>(
                          frames, std::vector<double>(dims, value)));
  s.layout.assign(maps, MapRole::kFoaLogMel);
  for (int m = maps - 6; m < maps; ++m) s.layout[m] = MapRole::kGccPhat;
  s.frame_rate = 46.875;
  return s;
}

}  // namespace

TEST_CASE("mixing with silence at unit gain is the identity") {
  const MultichannelClip a = noise_clip(24000 * 3, 1);
  const EventAnnotationList ann_a = one_event(2, 30, 10.0, 0.0);
  const MultichannelClip silence = make_clip(8, 24000, 24000, ClipFormat::kBoth);
  const EventAnnotationList empty;

  const TdmConfig unit{1.0, 1.0};
  const TdmOutput out = tdm_mix(a, ann_a, silence, empty, 7, unit);
  CHECK(out.clip.num_samples() == a.num_samples());
  for (int ch = 0; ch < 8; ++ch) CHECK(out.clip.channels[ch] == a.channels[ch]);
  REQUIRE(out.ann.rows.size() == ann_a.rows.size());
  for (std::size_t i = 0; i < ann_a.rows.size(); ++i)
    CHECK(out.ann.rows[i].frame == ann_a.rows[i].frame);
}

TEST_CASE("a segment mixed with itself at unit gain doubles exactly") {
  const MultichannelClip a = noise_clip(24000, 2);
  const EventAnnotationList ann = one_event(5, 10, -30.0, 20.0);
  const TdmConfig unit{1.0, 1.0};
  // Equal lengths force offset 0.
  const TdmOutput out = tdm_mix(a, ann, a, ann, 11, unit);
  for (int ch = 0; ch < 8; ++ch)
    for (std::size_t i = 0; i < a.num_samples(); ++i)
      CHECK(out.clip.channels[ch][i] == doctest::Approx(2.0 * a.channels[ch][i]));
}

TEST_CASE("union annotation carries both events at the placed offset") {
  const MultichannelClip a = noise_clip(24000 * 3, 3);  // 3 s
  const MultichannelClip b = noise_clip(24000 * 2, 4);  // 2 s
  const EventAnnotationList ann_a = one_event(1, 30, 0.0, 0.0);
  const EventAnnotationList ann_b = one_event(2, 20, 90.0, 10.0);

  const TdmOutput out = tdm_mix(a, ann_a, b, ann_b, 13);
  CHECK(out.clip.num_samples() == a.num_samples());

  // Offset in whole label frames; reconstruct it from the annotation.
  long offset = -1;
  for (const AnnotationRow& r : out.ann.rows)
    if (r.class_id == 2) {
      offset = offset < 0 ? r.frame : std::min(offset, r.frame);
    }
  REQUIRE(offset >= 0);
  CHECK(offset <= 10);  // shorter segment fits inside the longer

  std::vector<int> active(30, 0);
  for (const AnnotationRow& r : out.ann.rows) ++active[r.frame];
  for (long f = 0; f < 30; ++f) {
    const bool in_b = f >= offset && f < offset + 20;
    CHECK(active[f] == (in_b ? 2 : 1));
  }

  // DOA values are untouched by mixing.
  for (const AnnotationRow& r : out.ann.rows) {
    if (r.class_id == 1) CHECK(r.azimuth_deg == 0.0);
    if (r.class_id == 2) CHECK(r.azimuth_deg == 90.0);
  }
}

TEST_CASE("tdm is commutative given the resolved placement") {
  const MultichannelClip a = noise_clip(24000 * 2, 5);
  const MultichannelClip b = noise_clip(24000, 6);
  const EventAnnotationList ann_a = one_event(3, 20, 20.0, 0.0);
  const EventAnnotationList ann_b = one_event(4, 10, -20.0, 0.0);

  const TdmOutput ab = tdm_mix(a, ann_a, b, ann_b, 17);
  const TdmOutput ba = tdm_mix(b, ann_b, a, ann_a, 17);
  for (int ch = 0; ch < 8; ++ch) CHECK(ab.clip.channels[ch] == ba.clip.channels[ch]);
}

TEST_CASE("tdm rejects mismatched layouts") {
  const MultichannelClip a = noise_clip(24000, 7);
  MultichannelClip b = make_clip(4, 24000, 24000, ClipFormat::kMic);
  CHECK_THROWS_AS(tdm_mix(a, {}, b, {}, 1), LayoutMismatch);
}

TEST_CASE("tdm determinism") {
  const MultichannelClip a = noise_clip(24000 * 3, 8);
  const MultichannelClip b = noise_clip(24000, 9);
  const EventAnnotationList ann_a = one_event(1, 30, 0.0, 0.0);
  const EventAnnotationList ann_b = one_event(2, 10, 5.0, 5.0);
  const TdmOutput x = tdm_mix(a, ann_a, b, ann_b, 12345);
  const TdmOutput y = tdm_mix(a, ann_a, b, ann_b, 12345);
  for (int ch = 0; ch < 8; ++ch) CHECK(x.clip.channels[ch] == y.clip.channels[ch]);
}

TEST_CASE("tfm: zero mask lengths leave the stack untouched") {
  const FeatureStack stack = constant_stack(17, 250, 64, 1.5);
  TfmConfig cfg;
  cfg.max_time_mask = 0;
  cfg.max_freq_mask = 0;
  const FeatureStack out = tfm_apply(stack, cfg, 99);
  for (int m = 0; m < 17; ++m) CHECK(out.maps[m] == stack.maps[m]);
}

TEST_CASE("tfm: the last 6 maps are bit-identical for any seed") {
  const FeatureStack stack = constant_stack(17, 330, 64, -2.25);
  const TfmConfig cfg;
  for (std::uint64_t seed : {1ull, 2ull, 77ull, 12345ull}) {
    const FeatureStack out = tfm_apply(stack, cfg, seed);
    for (int m = 11; m < 17; ++m) CHECK(out.maps[m] == stack.maps[m]);
  }
}

TEST_CASE("tfm masked-cell count matches the placement arithmetic") {
  const int frames = 437, dims = 64;
  const FeatureStack stack = constant_stack(17, frames, dims, 3.0);
  const TfmConfig cfg;
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    const FeatureStack out = tfm_apply(stack, cfg, seed);
    const TfmPlacement p = tfm_placement(frames, dims, cfg, seed);

    long time_frames = 0;
    for (const auto& w : p.time_masks) time_frames += w.length;

    for (int m = 0; m < 11; ++m) {
      long zeros = 0;
      for (const auto& frame : out.maps[m])
        for (double v : frame) zeros += v == 0.0;
      const long expected =
          time_frames * dims + long(p.freq_length) * (frames - time_frames);
      CHECK(zeros == expected);
    }
  }
}

TEST_CASE("tfm only zeroes, and only inside the masks") {
  const FeatureStack stack = constant_stack(17, 210, 64, 4.0);
  const TfmConfig cfg;
  const FeatureStack out = tfm_apply(stack, cfg, 31);
  const TfmPlacement p = tfm_placement(210, 64, cfg, 31);
  for (int m = 0; m < 11; ++m)
    for (int t = 0; t < 210; ++t)
      for (int d = 0; d < 64; ++d) {
        bool in_time = false;
        for (const auto& w : p.time_masks)
          in_time = in_time || (t >= w.start_frame && t < w.start_frame + w.length);
        const bool in_freq = d >= p.freq_start && d < p.freq_start + p.freq_length;
        if (in_time || in_freq)
          CHECK(out.maps[m][t][d] == 0.0);
        else
          CHECK(out.maps[m][t][d] == stack.maps[m][t][d]);
      }
}

TEST_CASE("tfm mask lengths never exceed the configured maxima") {
  const TfmConfig cfg;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const TfmPlacement p = tfm_placement(500, 64, cfg, seed);
    for (const auto& w : p.time_masks) {
      CHECK(w.length <= 35);
      CHECK(w.length >= 0);
    }
    CHECK(p.freq_length <= 30);
    CHECK(p.freq_start + p.freq_length <= 64);
  }
}

TEST_CASE("tfm rejects stacks smaller than the masked set") {
  const FeatureStack stack = constant_stack(7, 100, 64, 1.0);
  CHECK_THROWS_AS(tfm_apply(stack, TfmConfig{}, 1), FormatMismatch);
}
