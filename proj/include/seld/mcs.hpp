#pragma once

#include <cstdint>
#include <vector>

#include "seld/dataset.hpp"
#include "seld/dsp.hpp"
#include "seld/linalg.hpp"

namespace seld {

// Two-component complex Gaussian mixture over the T-F observation vectors of
// one segment: a "source" component with the segment's spatial structure and
// a "noise" component. Per bin f the model is
//   x_{f,t} | v  ~  N_c(0, phi_{f,t}^(v) H_f^(v)),  v in {source, noise}.
struct CgmmState {
  int bins = 0;
  int frames = 0;
  int channels = 0;

  // Per-bin spatial correlation of each component, order M.
  std::vector<CMat> h_source;  // [bin]
  std::vector<CMat> h_noise;

  // Per (bin, frame): component variances and posterior masks. Masks sum to
  // one at every unit; dead bins (zero energy over all frames) carry
  // lambda_noise = 1.
  std::vector<std::vector<double>> var_source;  // [bin][frame]
  std::vector<std::vector<double>> var_noise;
  std::vector<std::vector<double>> mask_source;
  std::vector<std::vector<double>> mask_noise;

  std::vector<bool> dead_bin;  // zero energy across all frames

  // Average per-unit log-likelihood after each EM iteration (index 0 is the
  // initialization value). Non-decreasing within numerical slack.
  std::vector<double> log_likelihood;

  double mask(int bin, int frame, bool source) const {
    return source ? mask_source[bin][frame] : mask_noise[bin][frame];
  }
};

// Runs `iters` EM sweeps (fixed-point updates for the variances and spatial
// correlations, posterior update for the masks). iters = 0 returns the
// initialized state: H_noise = I, H_source = observed PSD, variances from the
// model, masks from one posterior evaluation.
CgmmState cgmm_em(const StftTensor& x, int iters);

// Per-bin observed PSD, (1/T) sum_t x x^H.
std::vector<CMat> observed_psd(const StftTensor& x);

// Mask-weighted noise PSD, sum_t lambda_n x x^H / sum_t lambda_n.
std::vector<CMat> noise_psd(const StftTensor& x, const CgmmState& state);

// Enhanced single-channel spectrum extracted from a segment.
struct SpectralTrack {
  std::vector<std::vector<cdouble>> spectrum;  // [frame][bin]
  int class_id = 0;
  std::string segment_id;
  StftConfig config;

  int frames() const { return static_cast<int>(spectrum.size()); }
  int bins() const {
    return spectrum.empty() ? 0 : static_cast<int>(spectrum.front().size());
  }
};

// Max-SNR (GEV) beamformer with the analytic single-channel post-filter
//   w = omega * w_SNR,  omega = sqrt(w^H Pn Pn w / M) / (w^H Pn w).
// The eigenvector phase is fixed so w[0] is real non-negative; zero-energy
// bins produce zero output.
SpectralTrack gev_ban_beamform(const StftTensor& x,
                               const std::vector<CMat>& psd_observed,
                               const std::vector<CMat>& psd_noise);

// Per-bin trace-normalized source covariance, trace(S_f) = M.
struct SpatialSignature {
  std::vector<CMat> s;  // [bin], order M, Hermitian PSD, trace M
  Doa doa;
  int class_id = 0;
  std::string segment_id;
};

SpatialSignature spatial_signature(const StftTensor& x, const CgmmState& state);

// Recombination: spectrum of one segment, spatial signature of another.
// Per bin, S_f = U diag(lambda) U^H and
//   x-hat_{f,t} = sum_m sqrt(lambda_m) S-hat_{f,t} e^{j psi_{m,t}} u_m,
// with psi_{1,t} = 0 and, for m >= 2, a seeded base offset plus a linear
// per-frame advance of (m-1)/frames turns, so the components decorrelate
// exactly across the segment and the empirical covariance reproduces S_f.
StftTensor simulate(const SpectralTrack& spectral,
                    const SpatialSignature& spatial, std::uint64_t seed);

struct McsOptions {
  int em_iters = 10;
  double min_segment_seconds = 0.5;
};

struct McsExtraction {
  SpectralTrack spectral;
  SpatialSignature spatial;
  std::size_t num_samples = 0;
  Doa doa;
  int class_id = 0;
};

// CGMM + beamformer + signature for one static non-overlapping segment.
McsExtraction mcs_extract(const SegmentData& segment,
                          const McsOptions& opts = {});

// Builds one simulated clip+annotation from a spectral donor and a spatial
// donor (the SED label follows the spectral donor, the DOA label the spatial
// donor). Donors may be the same segment.
struct McsOutput {
  MultichannelClip clip;  // 8 channels, BOTH layout
  EventAnnotationList ann;
  int spectral_class = 0;
  int spatial_class = 0;
};
McsOutput mcs_pair(const McsExtraction& spectral_donor,
                   const McsExtraction& spatial_donor, std::uint64_t seed);

// Draws `count` random donor pairs from the eligible segments.
// Throws InsufficientSegments when fewer than two are available.
std::vector<McsOutput> augment_mcs(const std::vector<SegmentData>& segments,
                                   int count, std::uint64_t seed,
                                   const McsOptions& opts = {});

}  // namespace seld
