#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "seld/array_models.hpp"
#include "seld/errors.hpp"
#include "seld/mcs.hpp"
#include "support/oracles.hpp"

using namespace seld;

namespace {

// Small tensors (33 bins) keep the EM tests quick; the model never looks at
// window_len beyond the bin count.
StftConfig small_config() {
  StftConfig cfg;
  cfg.window_len = 64;
  cfg.hop = 32;
  return cfg;
}

CVec unit_modulus_steering(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  CVec h(m);
  h[0] = 1.0;
  for (int i = 1; i < m; ++i) {
    const double p = phase(rng);
    h[i] = cdouble(std::cos(p), std::sin(p));
  }
  return h;
}

// x_{f,t} = h * s_{f,t} + sigma * n, with s complex Gaussian.
StftTensor rank_one_tensor(const CVec& h, int frames, double sigma,
                           std::uint64_t seed) {
  StftTensor x(int(h.size()), frames, small_config());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < x.bins(); ++f) {
      const cdouble s(g(rng), g(rng));
      for (int ch = 0; ch < x.channels(); ++ch)
        x.at(ch, t, f) = h[ch] * s + sigma * cdouble(g(rng), g(rng));
    }
  return x;
}

StftTensor diffuse_tensor(int channels, int frames, std::uint64_t seed) {
  StftTensor x(channels, frames, small_config());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < x.bins(); ++f)
      for (int ch = 0; ch < channels; ++ch)
        x.at(ch, t, f) = cdouble(g(rng), g(rng));
  return x;
}

double mask_mean(const CgmmState& st, bool source) {
  double sum = 0.0;
  long count = 0;
  for (int f = 0; f < st.bins; ++f)
    for (int t = 0; t < st.frames; ++t) {
      sum += st.mask(f, t, source);
      ++count;
    }
  return sum / count;
}

}  // namespace

TEST_CASE("cgmm separates a dominant rank-one source") {
  const CVec h = unit_modulus_steering(8, 1);
  const StftTensor x = rank_one_tensor(h, 40, 0.03, 2);
  const CgmmState st = cgmm_em(x, 10);

  // The strongest units should be confidently assigned to the source.
  std::vector<std::pair<double, std::pair<int, int>>> units;
  for (int f = 0; f < x.bins(); ++f)
    for (int t = 0; t < x.frames(); ++t) {
      double e = 0.0;
      for (int ch = 0; ch < 8; ++ch) e += std::norm(x.at(ch, t, f));
      units.push_back({e, {f, t}});
    }
  std::sort(units.rbegin(), units.rend());
  const std::size_t top = units.size() / 10;
  double avg = 0.0;
  for (std::size_t i = 0; i < top; ++i)
    avg += st.mask_source[units[i].second.first][units[i].second.second];
  avg /= top;
  CHECK(avg > 0.9);
}

TEST_CASE("cgmm masks stay complete and log-likelihood never drops") {
  const StftTensor x = rank_one_tensor(unit_modulus_steering(8, 3), 30, 0.1, 4);
  const CgmmState st = cgmm_em(x, 10);
  REQUIRE(st.log_likelihood.size() == 11);
  for (std::size_t i = 1; i < st.log_likelihood.size(); ++i)
    CHECK(st.log_likelihood[i] >= st.log_likelihood[i - 1] - 1e-6);
  for (int f = 0; f < st.bins; ++f)
    for (int t = 0; t < st.frames; ++t) {
      const double sum = st.mask_source[f][t] + st.mask_noise[f][t];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(st.mask_source[f][t] >= 0.0);
      CHECK(st.mask_source[f][t] <= 1.0);
    }
}

TEST_CASE("cgmm on diffuse noise stays near half/half") {
  const StftTensor x = diffuse_tensor(8, 60, 5);
  const CgmmState st = cgmm_em(x, 5);
  CHECK(mask_mean(st, true) == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("cgmm with zero iterations returns the initialization") {
  const StftTensor x = diffuse_tensor(8, 10, 6);
  const CgmmState st = cgmm_em(x, 0);
  CHECK(st.log_likelihood.size() == 1);
  // H_noise untouched from its identity initialization.
  const CMat eye = CMat::identity(8);
  CHECK((st.h_noise[0] - eye).frobenius_norm() == 0.0);
}

TEST_CASE("cgmm marks dead bins as pure noise") {
  StftTensor x = diffuse_tensor(8, 10, 7);
  for (int t = 0; t < x.frames(); ++t)
    for (int ch = 0; ch < 8; ++ch) x.at(ch, t, 5) = 0.0;
  const CgmmState st = cgmm_em(x, 3);
  CHECK(st.dead_bin[5]);
  for (int t = 0; t < x.frames(); ++t)
    CHECK(st.mask_noise[5][t] == 1.0);
}

TEST_CASE("observed and noise PSD accumulate correctly") {
  const StftTensor x = diffuse_tensor(4, 3, 8);
  CgmmState st;
  st.bins = x.bins();
  st.frames = 3;
  st.channels = 4;
  st.mask_noise.assign(x.bins(), {0.2, 0.5, 0.3});
  st.mask_source.assign(x.bins(), {0.8, 0.5, 0.7});

  const auto psd_x = observed_psd(x);
  const auto psd_n = noise_psd(x, st);

  // Brute-force both at a probe bin.
  const int f = 7;
  CMat brute_x(4, 4), brute_n(4, 4);
  double wsum = 0.0;
  for (int t = 0; t < 3; ++t) {
    CVec v(4);
    for (int ch = 0; ch < 4; ++ch) v[ch] = x.at(ch, t, f);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        brute_x(i, j) += v[i] * std::conj(v[j]) / 3.0;
        brute_n(i, j) += st.mask_noise[f][t] * v[i] * std::conj(v[j]);
      }
    wsum += st.mask_noise[f][t];
  }
  brute_n.scale(1.0 / wsum);
  CHECK((psd_x[f] - brute_x).frobenius_norm() < 1e-12);
  CHECK((psd_n[f] - brute_n).frobenius_norm() < 1e-12);

  // Uniform noise masks make the noise PSD equal the observed PSD.
  CgmmState uniform = st;
  uniform.mask_noise.assign(x.bins(), {1.0, 1.0, 1.0});
  const auto psd_u = noise_psd(x, uniform);
  for (int b = 0; b < x.bins(); ++b)
    CHECK((psd_u[b] - psd_x[b]).frobenius_norm() < 1e-12);

  // A single frame gives exactly x x^H.
  const StftTensor one = diffuse_tensor(4, 1, 9);
  const auto psd_one = observed_psd(one);
  CMat outer(4, 4);
  CVec v1(4);
  for (int ch = 0; ch < 4; ++ch) v1[ch] = one.at(ch, 0, 2);
  outer.add_outer(v1, 1.0);
  CHECK((psd_one[2] - outer).frobenius_norm() == 0.0);
}

TEST_CASE("GEV+BAN is distortionless on the unit-modulus rank-one fixture") {
  const CVec h = unit_modulus_steering(8, 11);
  const double sigma = 0.01;
  const StftTensor x = rank_one_tensor(h, 50, sigma, 12);

  const auto psd_x = observed_psd(x);
  std::vector<CMat> psd_n(x.bins(), CMat::identity(8));
  for (auto& m : psd_n) m.scale(sigma * sigma);

  const SpectralTrack out = gev_ban_beamform(x, psd_x, psd_n);

  // Compare against the reference channel content (h[0] = 1 so channel 0
  // carries s + noise).
  double num = 0.0, den_search = 0.0, den_ref = 0.0;
  for (int t = 0; t < x.frames(); ++t)
    for (int f = 0; f < x.bins(); ++f) {
      const cdouble s_hat = out.spectrum[t][f];
      const cdouble s_ref = x.at(0, t, f);
      num += (std::conj(s_hat) * s_ref).real();
      den_search += std::norm(s_hat);
      den_ref += std::norm(s_ref);
    }
  const double correlation = num / std::sqrt(den_search * den_ref);
  CHECK(correlation > 0.98);
  // Amplitude ratio within 1% of unity.
  CHECK(std::sqrt(den_search / den_ref) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("GEV+BAN of silence is silence") {
  const StftTensor x(8, 6, small_config());
  const auto psd_x = observed_psd(x);
  const SpectralTrack out = gev_ban_beamform(x, psd_x, psd_x);
  for (const auto& frame : out.spectrum)
    for (const cdouble& v : frame) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("GEV+BAN is jointly homogeneous: x*10 and PSDs*100 scale the output by 10") {
  const CVec h = unit_modulus_steering(8, 21);
  StftTensor x = rank_one_tensor(h, 20, 0.05, 22);
  StftTensor x10 = x;
  for (int ch = 0; ch < 8; ++ch)
    for (int t = 0; t < x.frames(); ++t)
      for (int f = 0; f < x.bins(); ++f) x10.at(ch, t, f) = 10.0 * x.at(ch, t, f);

  // Well-conditioned noise PSDs; the CGMM round trip is covered elsewhere.
  const auto psd_x = observed_psd(x);
  std::vector<CMat> psd_n(x.bins());
  std::mt19937_64 prng(23);
  for (auto& n : psd_n) {
    n = seld::testing::random_spd(8, prng, 0.01);
    n.add_diagonal(0.05 * 0.05);
  }
  auto psd_x100 = psd_x;
  auto psd_n100 = psd_n;
  for (auto& m : psd_x100) m.scale(100.0);
  for (auto& m : psd_n100) m.scale(100.0);

  const SpectralTrack a = gev_ban_beamform(x, psd_x, psd_n);
  const SpectralTrack b = gev_ban_beamform(x10, psd_x100, psd_n100);
  for (int t = 0; t < x.frames(); ++t)
    for (int f = 0; f < x.bins(); ++f)
      CHECK(std::abs(b.spectrum[t][f] - 10.0 * a.spectrum[t][f]) <
            1e-9 * (1.0 + std::abs(a.spectrum[t][f]) * 10.0));
}

TEST_CASE("spatial signature has trace M and recovers the steering direction") {
  const CVec h = unit_modulus_steering(8, 31);
  const StftTensor x = rank_one_tensor(h, 60, 0.03, 32);
  const CgmmState st = cgmm_em(x, 10);
  const SpatialSignature sig = spatial_signature(x, st);

  for (int f = 0; f < x.bins(); ++f) {
    CHECK(sig.s[f].trace().real() == doctest::Approx(8.0).epsilon(1e-9));
    const EigenDecomposition d = eigh(sig.s[f]);
    for (double v : d.values) CHECK(v >= -1e-9);
    CVec top(8);
    for (int i = 0; i < 8; ++i) top[i] = d.vectors(i, 0);
    const double cosine = std::abs(dot_conj(top, h)) / norm2(h);
    CHECK(cosine > 0.999);
  }
}

TEST_CASE("spatial signature single-frame closed form") {
  StftTensor x(4, 2, small_config());
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int ch = 0; ch < 4; ++ch)
    for (int t = 0; t < 2; ++t)
      for (int f = 0; f < x.bins(); ++f) x.at(ch, t, f) = cdouble(g(rng), g(rng));

  CgmmState st;
  st.bins = x.bins();
  st.frames = 2;
  st.channels = 4;
  // All mass on frame 0: signature is the normalized outer product of x_0.
  st.mask_source.assign(x.bins(), {1.0, 0.0});
  const SpatialSignature sig = spatial_signature(x, st);
  const int f = 3;
  CVec v(4);
  for (int ch = 0; ch < 4; ++ch) v[ch] = x.at(ch, 0, f);
  CMat expected(4, 4);
  expected.add_outer(v, 1.0);
  expected.scale(4.0 / expected.trace().real());
  CHECK((sig.s[f] - expected).frobenius_norm() < 1e-12);
  CHECK(sig.s[f].trace().real() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("simulate: rank-one signature reproduces sqrt(M) S u1 exactly") {
  const int m = 8;
  SpectralTrack track;
  track.config = small_config();
  track.spectrum.assign(16, std::vector<cdouble>(track.config.bins(), 0.0));
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g;
  for (auto& fr : track.spectrum)
    for (cdouble& v : fr) v = cdouble(g(rng), g(rng));

  const CVec h = unit_modulus_steering(m, 52);
  SpatialSignature sig;
  sig.s.assign(track.config.bins(), CMat(m, m));
  for (auto& s : sig.s) {
    s.add_outer(h, 1.0);
    s.scale(double(m) / s.trace().real());
  }

  const StftTensor out = simulate(track, sig, 7);
  // x-hat = sqrt(8) * S * u1 with u1 parallel to h/sqrt(8); compare magnitudes
  // channel-wise (the eigenvector phase convention is free).
  for (int t = 0; t < out.frames(); ++t)
    for (int f = 0; f < out.bins(); ++f)
      for (int ch = 0; ch < m; ++ch) {
        const double expected =
            std::sqrt(8.0) * std::abs(track.spectrum[t][f]) * std::abs(h[ch]) /
            std::sqrt(8.0);
        CHECK(std::abs(out.at(ch, t, f)) ==
              doctest::Approx(expected).epsilon(1e-9));
      }
}

TEST_CASE("simulate: identity signature gives equal channel magnitudes") {
  SpectralTrack track;
  track.config = small_config();
  track.spectrum.assign(12, std::vector<cdouble>(track.config.bins(), 0.0));
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g;
  for (auto& fr : track.spectrum)
    for (cdouble& v : fr) v = cdouble(g(rng), g(rng));

  SpatialSignature sig;
  sig.s.assign(track.config.bins(), CMat::identity(8));

  const StftTensor out = simulate(track, sig, 8);
  for (int t = 0; t < out.frames(); ++t)
    for (int f = 0; f < out.bins(); ++f)
      for (int ch = 0; ch < 8; ++ch)
        CHECK(std::abs(out.at(ch, t, f)) ==
              doctest::Approx(std::abs(track.spectrum[t][f])).epsilon(1e-9));
}

TEST_CASE("simulate: empirical covariance converges to the signature") {
  const int frames = 200;
  SpectralTrack track;
  track.config = small_config();
  track.spectrum.assign(frames, std::vector<cdouble>(track.config.bins()));
  std::mt19937_64 rng(71);
  for (auto& fr : track.spectrum)
    for (cdouble& v : fr) {
      std::uniform_real_distribution<double> ph(-kPi, kPi);
      const double p = ph(rng);
      v = cdouble(std::cos(p), std::sin(p));  // white magnitude spectrum
    }

  SpatialSignature sig;
  sig.s.assign(track.config.bins(), CMat(8, 8));
  for (auto& s : sig.s) {
    s = seld::testing::random_spd(8, rng);
    s.scale(8.0 / s.trace().real());
    s.hermitize();
  }

  const StftTensor out = simulate(track, sig, 9);
  for (int f = 0; f < out.bins(); f += 4) {
    CMat cov(8, 8);
    for (int t = 0; t < frames; ++t) {
      CVec v(8);
      for (int ch = 0; ch < 8; ++ch) v[ch] = out.at(ch, t, f);
      cov.add_outer(v, 1.0);
    }
    cov.scale(8.0 / cov.trace().real());
    CHECK((cov - sig.s[f]).frobenius_norm() < 0.15);

    // Full numerical rank.
    cov.hermitize();
    const EigenDecomposition d = eigh(cov);
    CHECK(d.values.back() / d.values.front() > 1e-8);
  }
}

TEST_CASE("mcs_pair carries the spectral class and the spatial DOA") {
  // Spectral donor: Female Speech (6) at (40, 10); spatial donor: Piano (13)
  // at (-120, -30).
  std::mt19937_64 rng(81);
  std::normal_distribution<double> g;
  auto make_segment = [&](int class_id, double az, double el,
                          std::uint64_t seed) {
    std::vector<double> s(24000);  // 1 s
    std::mt19937_64 r(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& v : s) v = u(r);
    const MultichannelClip foa =
        synthesize_foa_point_source(s, Doa{az, el});
    MultichannelClip mic = make_clip(4, s.size(), 24000, ClipFormat::kMic);
    for (int ch = 0; ch < 4; ++ch) {
      const double gain = cos_gamma(ch + 1, Doa{az, el}) * 0.4 + 0.6;
      for (std::size_t i = 0; i < s.size(); ++i)
        mic.channels[ch][i] = gain * s[i] + 1e-4 * g(rng);
    }
    SegmentData seg;
    seg.clip = concat_both(mic, foa);
    for (int f = 0; f < 10; ++f)
      seg.ann.rows.push_back({f, class_id, 0, az, el});
    seg.descriptor.file_id = "seg" + std::to_string(class_id);
    seg.descriptor.start_frame = 0;
    seg.descriptor.end_frame = 10;
    seg.descriptor.class_id = class_id;
    seg.descriptor.azimuth_deg = az;
    seg.descriptor.elevation_deg = el;
    seg.descriptor.is_static = true;
    seg.descriptor.overlapping = false;
    return seg;
  };

  McsOptions opts;
  opts.em_iters = 3;
  const McsExtraction spectral =
      mcs_extract(make_segment(6, 40.0, 10.0, 1001), opts);
  const McsExtraction spatial =
      mcs_extract(make_segment(13, -120.0, -30.0, 1002), opts);

  const McsOutput out = mcs_pair(spectral, spatial, 99);
  CHECK(out.clip.num_channels() == 8);
  CHECK(out.clip.num_samples() == 24000);
  CHECK(out.spectral_class == 6);
  CHECK(out.spatial_class == 13);
  REQUIRE_FALSE(out.ann.rows.empty());
  for (const AnnotationRow& r : out.ann.rows) {
    CHECK(r.class_id == 6);  // SED label follows the spectral donor
    CHECK(r.azimuth_deg == doctest::Approx(-120.0).epsilon(1e-9));
    CHECK(r.elevation_deg == doctest::Approx(-30.0).epsilon(1e-9));
  }

  // Self-pairing keeps both labels.
  const McsOutput self = mcs_pair(spectral, spectral, 100);
  for (const AnnotationRow& r : self.ann.rows) {
    CHECK(r.class_id == 6);
    CHECK(r.azimuth_deg == doctest::Approx(40.0).epsilon(1e-9));
  }
}

TEST_CASE("augment_mcs cardinality and the insufficient-segment error") {
  std::vector<SegmentData> only_one(1);
  only_one[0].descriptor.is_static = true;
  only_one[0].descriptor.overlapping = false;
  only_one[0].descriptor.start_frame = 0;
  only_one[0].descriptor.end_frame = 20;
  CHECK_THROWS_AS(augment_mcs(only_one, 3, 1), InsufficientSegments);

  // Two eligible donors, three requested outputs -> exactly three clips,
  // each with a single-event annotation.
  auto make_segment = [](int class_id, double az, std::uint64_t seed) {
    SegmentData seg;
    seg.clip = make_clip(8, 24000, 24000, ClipFormat::kBoth);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    std::array<double, 8> gains;
    for (double& g : gains) g = 0.5 + 0.5 * std::abs(std::sin(ph(rng)));
    for (std::size_t i = 0; i < 24000; ++i) {
      const double s = u(rng);
      for (int ch = 0; ch < 8; ++ch)
        seg.clip.channels[ch][i] = gains[ch] * s + 0.01 * u(rng);
    }
    for (int f = 0; f < 10; ++f)
      seg.ann.rows.push_back({f, class_id, 0, az, 0.0});
    seg.descriptor.file_id = "seg" + std::to_string(class_id);
    seg.descriptor.end_frame = 10;
    seg.descriptor.class_id = class_id;
    seg.descriptor.azimuth_deg = az;
    seg.descriptor.is_static = true;
    seg.descriptor.overlapping = false;
    return seg;
  };
  std::vector<SegmentData> donors;
  donors.push_back(make_segment(2, 60.0, 1));
  donors.push_back(make_segment(9, -45.0, 2));

  McsOptions opts;
  opts.em_iters = 2;
  const auto outputs = augment_mcs(donors, 3, 77, opts);
  REQUIRE(outputs.size() == 3);
  for (const McsOutput& out : outputs) {
    CHECK(out.clip.num_channels() == 8);
    REQUIRE_FALSE(out.ann.rows.empty());
    std::set<std::pair<int, int>> instances;
    for (const AnnotationRow& r : out.ann.rows)
      instances.insert({r.class_id, r.track_id});
    CHECK(instances.size() == 1);  // one event per simulated clip
    CHECK(out.spectral_class != out.spatial_class);  // distinct donors drawn
  }
}
