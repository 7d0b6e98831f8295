#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "seld/audio.hpp"

namespace seld {

// In-place radix-2 FFT. Forward is unnormalized, inverse carries the 1/N
// factor. Size must be a power of two.
void fft_inplace(std::span<std::complex<double>> x, bool inverse);

// Real-input forward transform, returns n/2 + 1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Inverse of rfft: bins (n/2 + 1 of them) back to n real samples, assuming
// Hermitian symmetry.
std::vector<double> irfft(std::span<const std::complex<double>> bins,
                          std::size_t n);

// Periodic Hamming window, w[k] = 0.54 - 0.46 cos(2 pi k / n). Nonzero
// everywhere, constant overlap-add at 50% hop.
std::vector<double> hamming_window(int n);

struct StftConfig {
  int window_len = 1024;
  int hop = 512;
  int sample_rate = 24000;

  int bins() const { return window_len / 2 + 1; }
  double frame_rate() const {
    return static_cast<double>(sample_rate) / hop;
  }
};

// Complex spectrogram indexed [channel][frame][bin]. Frames are centered:
// frame t covers source samples [t*hop - window_len/2, t*hop + window_len/2).
class StftTensor {
 public:
  StftTensor() = default;
  StftTensor(int channels, int frames, const StftConfig& cfg);

  int channels() const { return channels_; }
  int frames() const { return frames_; }
  int bins() const { return cfg_.bins(); }
  const StftConfig& config() const { return cfg_; }

  std::complex<double>& at(int ch, int frame, int bin) {
    return data_[(static_cast<std::size_t>(ch) * frames_ + frame) * bins_ + bin];
  }
  const std::complex<double>& at(int ch, int frame, int bin) const {
    return data_[(static_cast<std::size_t>(ch) * frames_ + frame) * bins_ + bin];
  }

  // One frame of one channel, bins() values.
  std::span<std::complex<double>> frame(int ch, int t) {
    return {&at(ch, t, 0), static_cast<std::size_t>(bins_)};
  }
  std::span<const std::complex<double>> frame(int ch, int t) const {
    return {&at(ch, t, 0), static_cast<std::size_t>(bins_)};
  }

 private:
  int channels_ = 0;
  int frames_ = 0;
  int bins_ = 0;
  StftConfig cfg_;
  std::vector<std::complex<double>> data_;
};

// Center-padded STFT: the clip is zero-padded by window_len/2 on each end,
// frames = 1 + floor(len / hop). Throws EmptyClip when the clip is shorter
// than one hop.
StftTensor stft(const MultichannelClip& clip, const StftConfig& cfg);

// Weighted overlap-add inverse, raw output of (frames-1)*hop + window_len
// samples including the stft center padding. Throws ConfigMismatch when the
// window/hop pair leaves gaps in the overlap-add coverage.
MultichannelClip istft(const StftTensor& t);

// Same, then removes the center padding and trims (or zero-pads) to `length`
// samples, so istft(stft(x), x.num_samples()) lines up with x sample-for-sample.
MultichannelClip istft(const StftTensor& t, std::size_t length);

// Triangular mel filterbank, HTK scale mel = 2595 log10(1 + f/700), filters
// normalized to unit peak, spanning 0 .. sample_rate/2.
// Returned as [n_mels][n_bins].
std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_bins,
                                                double sample_rate);

// Breakpoint frequencies (n_mels + 2 of them) of the bank above, exposed so
// feature code and tests agree on filter supports.
std::vector<double> mel_breakpoints(int n_mels, double sample_rate);

}  // namespace seld
