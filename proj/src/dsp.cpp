#include "seld/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "seld/errors.hpp"
#include "seld/geometry.hpp"

namespace seld {

MultichannelClip make_clip(int num_channels, std::size_t num_samples,
                           int sample_rate, ClipFormat format) {
  MultichannelClip c;
  c.channels.assign(num_channels, std::vector<double>(num_samples, 0.0));
  c.sample_rate = sample_rate;
  c.format = format;
  return c;
}

MultichannelClip concat_both(const MultichannelClip& mic,
                             const MultichannelClip& foa) {
  if (mic.num_channels() != 4 || foa.num_channels() != 4)
    throw ChannelCountMismatch("concat_both: both parts must have 4 channels");
  if (mic.sample_rate != foa.sample_rate ||
      mic.num_samples() != foa.num_samples())
    throw LayoutMismatch("concat_both: sample rate or length mismatch");
  MultichannelClip both;
  both.sample_rate = mic.sample_rate;
  both.format = ClipFormat::kBoth;
  both.channels = mic.channels;
  both.channels.insert(both.channels.end(), foa.channels.begin(),
                       foa.channels.end());
  return both;
}

void fft_inplace(std::span<std::complex<double>> x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ConfigMismatch("fft: size must be a power of two");

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= inv;
  }
}

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
  fft_inplace(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins,
                          std::size_t n) {
  if (bins.size() != n / 2 + 1)
    throw ConfigMismatch("irfft: bin count does not match length");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t k = 0; k < bins.size(); ++k) buf[k] = bins[k];
  for (std::size_t k = 1; k + 1 < bins.size(); ++k)
    buf[n - k] = std::conj(bins[k]);
  fft_inplace(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

std::vector<double> hamming_window(int n) {
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k)
    w[k] = 0.54 - 0.46 * std::cos(2.0 * kPi * k / n);
  return w;
}

StftTensor::StftTensor(int channels, int frames, const StftConfig& cfg)
    : channels_(channels),
      frames_(frames),
      bins_(cfg.bins()),
      cfg_(cfg),
      data_(static_cast<std::size_t>(channels) * frames * cfg.bins()) {}

StftTensor stft(const MultichannelClip& clip, const StftConfig& cfg) {
  const int n = cfg.window_len;
  if (n <= 0 || (n & (n - 1)) != 0 || cfg.hop <= 0 || cfg.hop > n)
    throw ConfigMismatch("stft: window must be a power of two, 0 < hop <= window");
  if (clip.num_channels() == 0 ||
      clip.num_samples() < static_cast<std::size_t>(cfg.hop))
    throw EmptyClip("stft: clip shorter than one hop");

  const std::size_t len = clip.num_samples();
  const int frames = 1 + static_cast<int>(len / cfg.hop);
  const int pad = n / 2;
  const std::vector<double> window = hamming_window(n);

  StftTensor out(static_cast<int>(clip.num_channels()), frames, cfg);
  std::vector<std::complex<double>> buf(n);
  for (int ch = 0; ch < out.channels(); ++ch) {
    const std::vector<double>& x = clip.channels[ch];
    for (int t = 0; t < frames; ++t) {
      const long start = static_cast<long>(t) * cfg.hop - pad;
      for (int k = 0; k < n; ++k) {
        const long idx = start + k;
        const double v =
            (idx >= 0 && idx < static_cast<long>(len)) ? x[idx] : 0.0;
        buf[k] = v * window[k];
      }
      fft_inplace(buf, false);
      auto frame = out.frame(ch, t);
      for (int b = 0; b < out.bins(); ++b) frame[b] = buf[b];
    }
  }
  return out;
}

namespace {

// Overlap-add coverage check: every steady-state position must accumulate a
// nonzero squared-window weight, otherwise the frame grid leaves gaps.
void check_overlap_add(const std::vector<double>& window, int hop) {
  const int n = static_cast<int>(window.size());
  std::vector<double> wsum(hop, 0.0);
  for (int k = 0; k < n; ++k) wsum[k % hop] += window[k] * window[k];
  for (double v : wsum)
    if (v <= 1e-8)
      throw ConfigMismatch("istft: window/hop pair violates overlap-add");
}

}  // namespace

MultichannelClip istft(const StftTensor& t) {
  const StftConfig& cfg = t.config();
  const int n = cfg.window_len;
  if (t.frames() == 0)
    return make_clip(t.channels(), 0, cfg.sample_rate, ClipFormat::kMic);
  const std::vector<double> window = hamming_window(n);
  check_overlap_add(window, cfg.hop);

  const std::size_t out_len =
      static_cast<std::size_t>(t.frames() - 1) * cfg.hop + n;
  MultichannelClip clip = make_clip(t.channels(), out_len, cfg.sample_rate,
                                    t.channels() == 8 ? ClipFormat::kBoth
                                                      : ClipFormat::kMic);

  std::vector<double> wsum(out_len, 0.0);
  for (int f = 0; f < t.frames(); ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * cfg.hop;
    for (int k = 0; k < n; ++k) wsum[start + k] += window[k] * window[k];
  }

  std::vector<std::complex<double>> full(t.bins());
  for (int ch = 0; ch < t.channels(); ++ch) {
    std::vector<double>& out = clip.channels[ch];
    for (int f = 0; f < t.frames(); ++f) {
      auto spec = t.frame(ch, f);
      std::copy(spec.begin(), spec.end(), full.begin());
      std::vector<double> frame = irfft(full, n);
      const std::size_t start = static_cast<std::size_t>(f) * cfg.hop;
      for (int k = 0; k < n; ++k) out[start + k] += frame[k] * window[k];
    }
    for (std::size_t i = 0; i < out_len; ++i)
      if (wsum[i] > 0.0) out[i] /= wsum[i];
  }
  return clip;
}

MultichannelClip istft(const StftTensor& t, std::size_t length) {
  MultichannelClip raw = istft(t);
  const std::size_t pad = t.config().window_len / 2;
  MultichannelClip out = make_clip(t.channels(), length,
                                   t.config().sample_rate, raw.format);
  for (int ch = 0; ch < t.channels(); ++ch) {
    const std::vector<double>& src = raw.channels[ch];
    std::vector<double>& dst = out.channels[ch];
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t j = i + pad;
      dst[i] = j < src.size() ? src[j] : 0.0;
    }
  }
  return out;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

std::vector<double> mel_breakpoints(int n_mels, double sample_rate) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> f(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    f[i] = mel_to_hz(mel_max * i / (n_mels + 1));
  f.front() = 0.0;
  return f;
}

std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_bins,
                                                double sample_rate) {
  if (n_mels <= 0 || n_mels >= n_bins)
    throw ConfigMismatch("mel_filterbank: need 0 < n_mels < n_bins");
  const std::vector<double> f = mel_breakpoints(n_mels, sample_rate);
  // Bin b sits at b * sr / (2 (n_bins - 1)), i.e. the rfft grid.
  const double bin_hz = sample_rate / 2.0 / (n_bins - 1);

  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = f[m], mid = f[m + 1], hi = f[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double hz = b * bin_hz;
      double w = 0.0;
      if (hz > lo && hz < mid)
        w = (hz - lo) / (mid - lo);
      else if (hz == mid)
        w = 1.0;
      else if (hz > mid && hz < hi)
        w = (hi - hz) / (hi - mid);
      bank[m][b] = w;
    }
    // Narrow low filters can straddle no bin center; keep the peak bin so
    // every filter has nonzero area.
    bool any = false;
    for (double w : bank[m]) any = any || w > 0.0;
    if (!any) {
      const int b = static_cast<int>(std::lround(mid / bin_hz));
      bank[m][std::clamp(b, 0, n_bins - 1)] = 1.0;
    }
  }
  return bank;
}

}  // namespace seld
