// Independent reference implementations used by tests only. These must stay
// decoupled from the library code paths they check.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "seld/dataset.hpp"
#include "seld/linalg.hpp"
#include "seld/metrics.hpp"

namespace seld::testing {

// Eigenvalues of a real symmetric matrix by bisection on the eigenvalue
// counting function nu(x) = #eigenvalues < x (LDL^T inertia). Ascending.
std::vector<double> symmetric_eigenvalues_bisect(
    const std::vector<std::vector<double>>& a, double tol = 1e-10);

// Real embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix; its spectrum is
// the Hermitian spectrum doubled.
std::vector<std::vector<double>> real_embedding(const CMat& h);

// Eigenvalues of a Hermitian matrix through the embedding + bisection,
// descending, deduplicated from the doubled spectrum.
std::vector<double> hermitian_eigenvalues_oracle(const CMat& h,
                                                 double tol = 1e-10);

// Direct O(n^2) DFT of one real frame, for STFT cross-checks.
std::vector<std::complex<double>> direct_dft(const std::vector<double>& x);

// Random test matrices.
CMat random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0);
CMat random_spd(int n, std::mt19937_64& rng, double scale = 1.0);

// Exhaustive-pairing SELD scorer: enumerates every injective prediction ->
// reference pairing per (segment, class), takes the minimum-total-angle one,
// and accumulates the same counts as the production scorer.
SeldScores brute_force_scores(const std::vector<SegmentFrame>& segments,
                              double gate_deg = 20.0);

// Random annotation scenario for metric equivalence tests.
struct ScenarioOptions {
  int num_segments = 50;
  int max_simultaneous = 2;
  double pred_noise_deg = 12.0;  // typical prediction perturbation
  double drop_prob = 0.15;       // missed detections
  double insert_prob = 0.1;      // spurious detections
  double class_confusion_prob = 0.1;
};
struct Scenario {
  EventAnnotationList ref;
  EventAnnotationList pred;
};
Scenario random_scenario(std::uint64_t seed, const ScenarioOptions& opts = {});

}  // namespace seld::testing
