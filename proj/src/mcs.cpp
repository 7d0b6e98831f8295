#include "seld/mcs.hpp"

#include <algorithm>
#include <cmath>

#include "seld/errors.hpp"
#include "seld/geometry.hpp"
#include "seld/rng.hpp"

namespace seld {

namespace {

constexpr double kLoading = 1e-6;  // relative diagonal loading before inversion
constexpr double kVarFloor = 1e-12;

// Inverse and log-determinant of H + delta*I.
struct InverseInfo {
  CMat inv;
  double logdet = 0.0;
};

InverseInfo invert_loaded(const CMat& h, double delta) {
  const int n = h.rows();
  CMat loaded = h;
  loaded.add_diagonal(delta);
  const CMat l = cholesky(loaded);

  InverseInfo info;
  info.inv = CMat(n, n);
  for (int j = 0; j < n; ++j) {
    CVec e(n, cdouble(0.0));
    e[j] = 1.0;
    CVec y = solve_lower(l, e);
    CVec x = solve_lower_adjoint(l, y);
    for (int i = 0; i < n; ++i) info.inv(i, j) = x[i];
  }
  info.inv.hermitize();
  for (int i = 0; i < n; ++i) info.logdet += 2.0 * std::log(l(i, i).real());
  return info;
}

std::vector<cdouble> unit_vector(const StftTensor& x, int bin, int frame) {
  std::vector<cdouble> v(x.channels());
  for (int ch = 0; ch < x.channels(); ++ch) v[ch] = x.at(ch, frame, bin);
  return v;
}

double unit_energy(const std::vector<cdouble>& v) {
  double e = 0.0;
  for (const cdouble& c : v) e += std::norm(c);
  return e;
}

}  // namespace

std::vector<CMat> observed_psd(const StftTensor& x) {
  const int m = x.channels();
  std::vector<CMat> psd(x.bins(), CMat(m, m));
  for (int f = 0; f < x.bins(); ++f) {
    for (int t = 0; t < x.frames(); ++t) {
      const std::vector<cdouble> v = unit_vector(x, f, t);
      psd[f].add_outer(v, 1.0);
    }
    psd[f].scale(1.0 / x.frames());
  }
  return psd;
}

std::vector<CMat> noise_psd(const StftTensor& x, const CgmmState& state) {
  const int m = x.channels();
  std::vector<CMat> psd(x.bins(), CMat(m, m));
  for (int f = 0; f < x.bins(); ++f) {
    double wsum = 0.0;
    for (int t = 0; t < x.frames(); ++t) {
      const double w = state.mask_noise[f][t];
      psd[f].add_outer(unit_vector(x, f, t), w);
      wsum += w;
    }
    if (wsum > 0.0) psd[f].scale(1.0 / wsum);
  }
  return psd;
}

CgmmState cgmm_em(const StftTensor& x, int iters) {
  const int m = x.channels();
  const int bins = x.bins();
  const int frames = x.frames();
  if (frames < 2)
    throw DegenerateInput("cgmm_em: need at least 2 frames");

  CgmmState st;
  st.bins = bins;
  st.frames = frames;
  st.channels = m;
  st.h_noise.assign(bins, CMat::identity(m));
  st.h_source = observed_psd(x);
  st.var_source.assign(bins, std::vector<double>(frames, 1.0));
  st.var_noise.assign(bins, std::vector<double>(frames, 1.0));
  st.mask_source.assign(bins, std::vector<double>(frames, 0.0));
  st.mask_noise.assign(bins, std::vector<double>(frames, 1.0));
  st.dead_bin.assign(bins, false);

  const double log_pi_term = m * std::log(kPi);

  std::vector<InverseInfo> inv_s(bins), inv_n(bins);
  std::vector<double> ll_bin(bins, 0.0);
  long live_units = 0;
  std::vector<long> bin_units(bins, 0);

  // Re-derives the variances and masks of one bin from a pair of component
  // inverses and returns the bin's total log-likelihood:
  //   phi^(v) = x^H (H^(v))^-1 x / M,
  //   log N_c(x; 0, phi H) = -M log pi - M log phi - logdet H - M,
  //   lambda = softmax over the two component densities.
  auto eval_bin = [&](int f, const InverseInfo& is, const InverseInfo& in_,
                      std::vector<double>& vs, std::vector<double>& vn,
                      std::vector<double>& ms, std::vector<double>& mn) {
    double sum = 0.0;
    for (int t = 0; t < frames; ++t) {
      const std::vector<cdouble> v = unit_vector(x, f, t);
      if (unit_energy(v) <= 0.0) {
        ms[t] = 0.0;
        mn[t] = 1.0;
        vs[t] = kVarFloor;
        vn[t] = kVarFloor;
        continue;
      }
      const double qs = std::max(quad_form_real(is.inv, v) / m, kVarFloor);
      const double qn = std::max(quad_form_real(in_.inv, v) / m, kVarFloor);
      vs[t] = qs;
      vn[t] = qn;
      const double ls = -log_pi_term - m * std::log(qs) - is.logdet - m;
      const double ln = -log_pi_term - m * std::log(qn) - in_.logdet - m;
      const double hi = std::max(ls, ln);
      const double marginal =
          hi + std::log(std::exp(ls - hi) + std::exp(ln - hi));
      const double post_s = std::exp(ls - marginal);
      ms[t] = post_s;
      mn[t] = 1.0 - post_s;
      sum += marginal;
    }
    return sum;
  };

  auto load_and_invert = [&](const CMat& h) {
    return invert_loaded(h, kLoading * h.trace().real() / m + 1e-300);
  };

  for (int f = 0; f < bins; ++f) {
    double energy = 0.0;
    for (int t = 0; t < frames; ++t) {
      const double e = unit_energy(unit_vector(x, f, t));
      energy += e;
      bin_units[f] += e > 0.0;
    }
    if (energy <= 0.0) {
      st.dead_bin[f] = true;
      bin_units[f] = 0;
      continue;
    }
    live_units += bin_units[f];
    inv_s[f] = load_and_invert(st.h_source[f]);
    inv_n[f] = load_and_invert(st.h_noise[f]);
    ll_bin[f] = eval_bin(f, inv_s[f], inv_n[f], st.var_source[f],
                         st.var_noise[f], st.mask_source[f], st.mask_noise[f]);
  }

  auto average_ll = [&]() {
    double sum = 0.0;
    for (int f = 0; f < bins; ++f) sum += ll_bin[f];
    return live_units > 0 ? sum / live_units : 0.0;
  };
  st.log_likelihood.push_back(average_ll());

  // Fixed-point sweep with a per-bin safeguard: the candidate spatial
  // correlations H^(v) = sum_t (lambda/phi) x x^H / sum_t lambda are accepted
  // only when they do not lower the bin's likelihood. Near-degenerate bins
  // can otherwise overshoot the floored model's optimum once a component has
  // collapsed onto a subspace; a rejected bin holds its converged state, so
  // the recorded likelihood never decreases.
  std::vector<double> cand_vs(frames), cand_vn(frames), cand_ms(frames),
      cand_mn(frames);
  for (int it = 0; it < iters; ++it) {
    for (int f = 0; f < bins; ++f) {
      if (st.dead_bin[f]) continue;
      CMat acc_s(m, m), acc_n(m, m);
      double w_s = 0.0, w_n = 0.0;
      for (int t = 0; t < frames; ++t) {
        const std::vector<cdouble> v = unit_vector(x, f, t);
        if (unit_energy(v) <= 0.0) continue;
        acc_s.add_outer(v, st.mask_source[f][t] / st.var_source[f][t]);
        acc_n.add_outer(v, st.mask_noise[f][t] / st.var_noise[f][t]);
        w_s += st.mask_source[f][t];
        w_n += st.mask_noise[f][t];
      }
      CMat cand_hs = w_s > 0.0 ? acc_s : st.h_source[f];
      if (w_s > 0.0) cand_hs.scale(1.0 / w_s);
      CMat cand_hn = w_n > 0.0 ? acc_n : st.h_noise[f];
      if (w_n > 0.0) cand_hn.scale(1.0 / w_n);

      const InverseInfo cand_is = load_and_invert(cand_hs);
      const InverseInfo cand_in = load_and_invert(cand_hn);
      const double cand_ll =
          eval_bin(f, cand_is, cand_in, cand_vs, cand_vn, cand_ms, cand_mn);
      if (cand_ll >= ll_bin[f]) {
        st.h_source[f] = std::move(cand_hs);
        st.h_noise[f] = std::move(cand_hn);
        inv_s[f] = cand_is;
        inv_n[f] = cand_in;
        st.var_source[f] = cand_vs;
        st.var_noise[f] = cand_vn;
        st.mask_source[f] = cand_ms;
        st.mask_noise[f] = cand_mn;
        ll_bin[f] = cand_ll;
      }
    }
    st.log_likelihood.push_back(average_ll());
  }

  // Component-to-role assignment: the source is whichever component carries
  // the larger mask-weighted energy.
  double e_s = 0.0, e_n = 0.0;
  for (int f = 0; f < bins; ++f) {
    if (st.dead_bin[f]) continue;
    for (int t = 0; t < frames; ++t) {
      const double e = unit_energy(unit_vector(x, f, t));
      e_s += st.mask_source[f][t] * e;
      e_n += st.mask_noise[f][t] * e;
    }
  }
  if (e_n > e_s) {
    std::swap(st.h_source, st.h_noise);
    std::swap(st.var_source, st.var_noise);
    std::swap(st.mask_source, st.mask_noise);
    // Dead bins stay all-noise by convention.
    for (int f = 0; f < bins; ++f) {
      if (!st.dead_bin[f]) continue;
      for (int t = 0; t < frames; ++t) {
        st.mask_source[f][t] = 0.0;
        st.mask_noise[f][t] = 1.0;
      }
    }
  }
  return st;
}

SpectralTrack gev_ban_beamform(const StftTensor& x,
                               const std::vector<CMat>& psd_observed,
                               const std::vector<CMat>& psd_noise) {
  const int m = x.channels();
  SpectralTrack track;
  track.config = x.config();
  track.spectrum.assign(x.frames(), std::vector<cdouble>(x.bins(), 0.0));

  for (int f = 0; f < x.bins(); ++f) {
    const double obs_tr = psd_observed[f].trace().real();
    if (obs_tr <= 0.0) continue;  // silent bin -> zero output

    // A bin whose noise mass underflowed to nothing (near-clean input) gets
    // an isotropic stand-in; the GEV then reduces to the principal component
    // of the observed PSD and BAN keeps the reference scaling.
    CMat noise = psd_noise[f];
    if (noise.trace().real() <= 1e-12 * obs_tr) {
      noise = CMat::identity(m);
      noise.scale(obs_tr / m);
    }
    // The max-SNR filter sits in the noise matrix's null space when the mask
    // left it rank deficient, which makes the raw w^H Pn w denominator
    // ill-conditioned; the loading keeps the post-filter bounded.
    noise.add_diagonal(kLoading * noise.trace().real() / m);
    CVec w = gev_principal(psd_observed[f], noise);

    // Eigenvectors are phase-arbitrary; anchor the reference channel so the
    // enhanced spectrum keeps a stable phase relative to channel 1.
    const double a0 = std::abs(w[0]);
    if (a0 > 1e-12) {
      const cdouble rot = std::conj(w[0]) / a0;
      for (cdouble& c : w) c *= rot;
    }

    const CVec pn_w = matvec(noise, w);
    double pn2 = 0.0;  // w^H Pn Pn w = |Pn w|^2 (Pn Hermitian)
    for (const cdouble& c : pn_w) pn2 += std::norm(c);
    const double denom = dot_conj(w, pn_w).real();
    const double omega =
        denom > 0.0 ? std::sqrt(pn2 / m) / denom : 1.0;

    for (int t = 0; t < x.frames(); ++t) {
      cdouble s = 0.0;
      for (int ch = 0; ch < m; ++ch)
        s += std::conj(w[ch]) * x.at(ch, t, f);
      track.spectrum[t][f] = omega * s;
    }
  }
  return track;
}

SpatialSignature spatial_signature(const StftTensor& x,
                                   const CgmmState& state) {
  const int m = x.channels();
  SpatialSignature sig;
  sig.s.assign(x.bins(), CMat(m, m));
  for (int f = 0; f < x.bins(); ++f) {
    CMat acc(m, m);
    double wsum = 0.0;
    for (int t = 0; t < x.frames(); ++t) {
      const double w = state.mask_source[f][t];
      acc.add_outer(unit_vector(x, f, t), w);
      wsum += w;
    }
    if (wsum <= 0.0) {
      // No source mass at this bin: fall back to the observed PSD.
      acc.set_zero();
      for (int t = 0; t < x.frames(); ++t)
        acc.add_outer(unit_vector(x, f, t), 1.0);
    }
    const double tr = acc.trace().real();
    if (tr > 0.0) {
      acc.scale(static_cast<double>(m) / tr);
      sig.s[f] = acc;
    } else {
      sig.s[f] = CMat::identity(m);  // dead bin: isotropic, trace M
    }
    sig.s[f].hermitize();
  }
  return sig;
}

StftTensor simulate(const SpectralTrack& spectral,
                    const SpatialSignature& spatial, std::uint64_t seed) {
  const int bins = spectral.bins();
  if (bins != static_cast<int>(spatial.s.size()))
    throw LayoutMismatch("simulate: spectral/spatial bin counts differ");
  const int m = spatial.s.empty() ? 0 : spatial.s.front().rows();
  const int frames = spectral.frames();

  // Base phase offsets, one draw per channel index; component 1 stays
  // unperturbed. The per-frame advance of (k-1)/frames turns makes the
  // component phasors orthogonal over the whole segment, so the empirical
  // covariance lands on the target signature instead of collapsing to the
  // rank-one outer product a constant phase would give.
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> base(m, 0.0);
  for (int k = 1; k < m; ++k) base[k] = unit(rng);

  StftTensor out(m, frames, spectral.config);
  std::vector<EigenDecomposition> eig(bins);
  for (int f = 0; f < bins; ++f) eig[f] = eigh(spatial.s[f]);

  for (int t = 0; t < frames; ++t) {
    std::vector<cdouble> phasor(m);
    for (int k = 0; k < m; ++k) {
      const double turns =
          base[k] + static_cast<double>(k) * t / std::max(1, frames);
      const double ang = -2.0 * kPi * turns;
      phasor[k] = cdouble(std::cos(ang), std::sin(ang));
    }
    for (int f = 0; f < bins; ++f) {
      const cdouble s = spectral.spectrum[t][f];
      const EigenDecomposition& d = eig[f];
      const double lam_floor = d.values.front() * 1e-12;
      std::vector<cdouble> acc(m, cdouble(0.0));
      for (int k = 0; k < m; ++k) {
        const double lam = d.values[k];
        if (lam <= lam_floor) continue;
        const cdouble g = std::sqrt(lam) * s * phasor[k];
        for (int ch = 0; ch < m; ++ch) acc[ch] += g * d.vectors(ch, k);
      }
      for (int ch = 0; ch < m; ++ch) out.at(ch, t, f) = acc[ch];
    }
  }
  return out;
}

McsExtraction mcs_extract(const SegmentData& segment, const McsOptions& opts) {
  if (segment.clip.num_channels() != 8)
    throw ChannelCountMismatch("mcs_extract: segment must be 8-channel BOTH");

  StftConfig cfg;
  cfg.sample_rate = segment.clip.sample_rate;
  const StftTensor x = stft(segment.clip, cfg);
  const CgmmState state = cgmm_em(x, opts.em_iters);

  McsExtraction e;
  e.spectral = gev_ban_beamform(x, observed_psd(x), noise_psd(x, state));
  e.spectral.class_id = segment.descriptor.class_id;
  e.spectral.segment_id = segment.descriptor.file_id;
  e.spatial = spatial_signature(x, state);
  e.spatial.class_id = segment.descriptor.class_id;
  e.spatial.segment_id = segment.descriptor.file_id;
  e.spatial.doa =
      Doa{segment.descriptor.azimuth_deg, segment.descriptor.elevation_deg};
  e.num_samples = segment.clip.num_samples();
  e.doa = e.spatial.doa;
  e.class_id = segment.descriptor.class_id;
  return e;
}

McsOutput mcs_pair(const McsExtraction& spectral_donor,
                   const McsExtraction& spatial_donor, std::uint64_t seed) {
  const StftTensor sim =
      simulate(spectral_donor.spectral, spatial_donor.spatial, seed);
  McsOutput out;
  out.clip = istft(sim, spectral_donor.num_samples);
  out.clip.format = ClipFormat::kBoth;
  out.spectral_class = spectral_donor.class_id;
  out.spatial_class = spatial_donor.class_id;

  const long frames =
      static_cast<long>(spectral_donor.num_samples) /
      (out.clip.sample_rate / kLabelFramesPerSecond);
  for (long fr = 0; fr < frames; ++fr) {
    AnnotationRow r;
    r.frame = fr;
    r.class_id = spectral_donor.class_id;
    r.track_id = 0;
    r.azimuth_deg = spatial_donor.doa.azimuth_deg;
    r.elevation_deg = spatial_donor.doa.elevation_deg;
    out.ann.rows.push_back(r);
  }
  return out;
}

std::vector<McsOutput> augment_mcs(const std::vector<SegmentData>& segments,
                                   int count, std::uint64_t seed,
                                   const McsOptions& opts) {
  std::vector<const SegmentData*> eligible;
  for (const SegmentData& s : segments)
    if (s.descriptor.eligible(opts.min_segment_seconds))
      eligible.push_back(&s);
  if (eligible.size() < 2)
    throw InsufficientSegments("augment_mcs: fewer than 2 eligible segments");

  // Extract once per donor, reuse across pairs.
  std::vector<McsExtraction> extractions;
  extractions.reserve(eligible.size());
  for (const SegmentData* s : eligible)
    extractions.push_back(mcs_extract(*s, opts));

  std::mt19937_64 rng = make_rng(derive_seed(seed, "mcs-pairing"));
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);

  std::vector<McsOutput> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (b == a) b = (b + 1) % eligible.size();
    out.push_back(
        mcs_pair(extractions[a], extractions[b], derive_seed(seed, i)));
  }
  return out;
}

}  // namespace seld
