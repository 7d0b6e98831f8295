#include "seld/features.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "seld/errors.hpp"
#include "seld/linalg.hpp"

namespace seld {

int FeatureStack::maskable_maps() const {
  int n = 0;
  for (MapRole r : layout)
    if (r != MapRole::kGccPhat) ++n;
  return n;
}

std::vector<std::vector<std::vector<double>>> logmel(
    const StftTensor& x, const std::vector<std::vector<double>>& bank,
    double floor) {
  const int n_mels = static_cast<int>(bank.size());
  if (!bank.empty() && static_cast<int>(bank.front().size()) != x.bins())
    throw FormatMismatch("logmel: bank bin count does not match tensor");

  std::vector<std::vector<std::vector<double>>> out(
      x.channels(), std::vector<std::vector<double>>(
                        x.frames(), std::vector<double>(n_mels)));
  std::vector<double> power(x.bins());
  for (int ch = 0; ch < x.channels(); ++ch) {
    for (int t = 0; t < x.frames(); ++t) {
      for (int b = 0; b < x.bins(); ++b) power[b] = std::norm(x.at(ch, t, b));
      for (int m = 0; m < n_mels; ++m) {
        double acc = 0.0;
        const std::vector<double>& filt = bank[m];
        for (int b = 0; b < x.bins(); ++b) acc += filt[b] * power[b];
        out[ch][t][m] = std::log(std::max(acc, floor));
      }
    }
  }
  return out;
}

std::vector<std::vector<std::vector<double>>> intensity_vector(
    const StftTensor& foa, const std::vector<std::vector<double>>& bank) {
  if (foa.channels() != 4)
    throw FormatMismatch("intensity_vector: expected 4 FOA channels");
  const int n_mels = static_cast<int>(bank.size());
  constexpr double kEps = 1e-10;

  std::vector<std::vector<std::vector<double>>> out(
      3, std::vector<std::vector<double>>(foa.frames(),
                                          std::vector<double>(n_mels, 0.0)));
  std::vector<std::array<double, 3>> iv(foa.bins());
  for (int t = 0; t < foa.frames(); ++t) {
    for (int b = 0; b < foa.bins(); ++b) {
      const cdouble w = foa.at(0, t, b);
      const cdouble y = foa.at(1, t, b);
      const cdouble z = foa.at(2, t, b);
      const cdouble xx = foa.at(3, t, b);
      // Energy-normalized so each unit contributes a bounded direction.
      const double e = std::norm(w) +
                       (std::norm(y) + std::norm(z) + std::norm(xx)) / 3.0 +
                       kEps;
      iv[b] = {(std::conj(w) * y).real() / e, (std::conj(w) * z).real() / e,
               (std::conj(w) * xx).real() / e};
    }
    for (int m = 0; m < n_mels; ++m) {
      const std::vector<double>& filt = bank[m];
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (int b = 0; b < foa.bins(); ++b) {
        if (filt[b] == 0.0) continue;
        for (int a = 0; a < 3; ++a) acc[a] += filt[b] * iv[b][a];
      }
      for (int a = 0; a < 3; ++a) out[a][t][m] = acc[a];
    }
  }
  return out;
}

std::vector<std::vector<std::vector<double>>> gcc_phat(const StftTensor& mic) {
  if (mic.channels() != 4)
    throw FormatMismatch("gcc_phat: expected 4 MIC channels");
  constexpr int kLags = 64;
  const int n = mic.config().window_len;
  static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3},
                                       {1, 2}, {1, 3}, {2, 3}};

  std::vector<std::vector<std::vector<double>>> out(
      6, std::vector<std::vector<double>>(mic.frames(),
                                          std::vector<double>(kLags, 0.0)));
  std::vector<cdouble> cross(mic.bins());
  for (int p = 0; p < 6; ++p) {
    const int i = kPairs[p][0], j = kPairs[p][1];
    for (int t = 0; t < mic.frames(); ++t) {
      for (int b = 0; b < mic.bins(); ++b) {
        // conj(X_i) X_j so a positive lag means channel j lags channel i.
        const cdouble g = std::conj(mic.at(i, t, b)) * mic.at(j, t, b);
        const double mag = std::abs(g);
        cross[b] = mag > 0.0 ? g / mag : cdouble(0.0);
      }
      const std::vector<double> corr = irfft(cross, n);
      // Center lags -32..31; negative lags wrap to the tail of the ifft.
      for (int k = 0; k < kLags; ++k) {
        const int lag = k - kLags / 2;
        out[p][t][k] = corr[(lag + n) % n];
      }
    }
  }
  return out;
}

FeatureStack build_stack(const MultichannelClip& clip,
                         const FeatureConfig& cfg) {
  const bool has_mic =
      clip.format == ClipFormat::kMic || clip.format == ClipFormat::kBoth;
  const bool has_foa =
      clip.format == ClipFormat::kFoa || clip.format == ClipFormat::kBoth;
  if (clip.num_channels() !=
      static_cast<std::size_t>(expected_channels(clip.format)))
    throw FormatUnknown("build_stack: channel count does not match format");

  StftConfig stft_cfg = cfg.stft;
  stft_cfg.sample_rate = clip.sample_rate;
  const auto bank =
      mel_filterbank(cfg.n_mels, stft_cfg.bins(), clip.sample_rate);

  MultichannelClip mic_part, foa_part;
  if (clip.format == ClipFormat::kBoth) {
    mic_part = make_clip(4, clip.num_samples(), clip.sample_rate,
                         ClipFormat::kMic);
    foa_part = make_clip(4, clip.num_samples(), clip.sample_rate,
                         ClipFormat::kFoa);
    for (int c = 0; c < 4; ++c) {
      mic_part.channels[c] = clip.channels[c];
      foa_part.channels[c] = clip.channels[c + 4];
    }
  } else if (clip.format == ClipFormat::kMic) {
    mic_part = clip;
  } else {
    foa_part = clip;
  }

  FeatureStack stack;
  stack.frame_rate = stft_cfg.frame_rate();

  if (has_foa) {
    const StftTensor foa = stft(foa_part, stft_cfg);
    auto lm = logmel(foa, bank, cfg.log_floor);
    for (auto& m : lm) {
      stack.maps.push_back(std::move(m));
      stack.layout.push_back(MapRole::kFoaLogMel);
    }
    if (!has_mic) {  // FOA-only: IV follows immediately
      auto iv = intensity_vector(foa, bank);
      for (auto& m : iv) {
        stack.maps.push_back(std::move(m));
        stack.layout.push_back(MapRole::kIntensity);
      }
      return stack;
    }
    const StftTensor mic = stft(mic_part, stft_cfg);
    auto mlm = logmel(mic, bank, cfg.log_floor);
    for (auto& m : mlm) {
      stack.maps.push_back(std::move(m));
      stack.layout.push_back(MapRole::kMicLogMel);
    }
    auto iv = intensity_vector(foa, bank);
    for (auto& m : iv) {
      stack.maps.push_back(std::move(m));
      stack.layout.push_back(MapRole::kIntensity);
    }
    auto gcc = gcc_phat(mic);
    for (auto& m : gcc) {
      stack.maps.push_back(std::move(m));
      stack.layout.push_back(MapRole::kGccPhat);
    }
    return stack;
  }

  // MIC-only: 4 log-mel + 6 GCC maps.
  const StftTensor mic = stft(mic_part, stft_cfg);
  auto mlm = logmel(mic, bank, cfg.log_floor);
  for (auto& m : mlm) {
    stack.maps.push_back(std::move(m));
    stack.layout.push_back(MapRole::kMicLogMel);
  }
  auto gcc = gcc_phat(mic);
  for (auto& m : gcc) {
    stack.maps.push_back(std::move(m));
    stack.layout.push_back(MapRole::kGccPhat);
  }
  return stack;
}

namespace {

constexpr char kMagic[8] = {'S', 'E', 'L', 'D', 'F', 'E', 'A', 'T'};

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}

}  // namespace

void write_feature_file(const FeatureStack& stack,
                        const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, 1);  // version
  put_u32(out, 0);  // dtype f32
  put_u32(out, std::uint32_t(stack.num_maps()));
  put_u32(out, std::uint32_t(stack.num_frames()));
  put_u32(out, std::uint32_t(stack.dims()));
  const double fr = stack.frame_rate;
  std::uint64_t fr_bits;
  std::memcpy(&fr_bits, &fr, 8);
  put_u32(out, std::uint32_t(fr_bits & 0xffffffffull));
  put_u32(out, std::uint32_t(fr_bits >> 32));
  for (MapRole r : stack.layout) put_u32(out, std::uint32_t(r));

  for (const auto& map : stack.maps)
    for (const auto& frame : map)
      for (double v : frame) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
      }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw UnsupportedFormat("cannot write feature file " + path.string());
  os.write(out.data(), std::streamsize(out.size()));
}

FeatureStack read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnsupportedFormat("cannot open feature file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 36 || std::memcmp(p, kMagic, 8) != 0)
    throw UnsupportedFormat(path.string() + ": not a feature file");
  const std::uint32_t version = get_u32(p + 8);
  const std::uint32_t dtype = get_u32(p + 12);
  if (version != 1 || dtype != 0)
    throw UnsupportedFormat(path.string() + ": unsupported version/dtype");
  const std::uint32_t n_maps = get_u32(p + 16);
  const std::uint32_t n_frames = get_u32(p + 20);
  const std::uint32_t n_dims = get_u32(p + 24);
  std::uint64_t fr_bits = get_u32(p + 28) | (std::uint64_t(get_u32(p + 32)) << 32);

  FeatureStack stack;
  std::memcpy(&stack.frame_rate, &fr_bits, 8);
  std::size_t off = 36;
  if (bytes.size() < off + 4ull * n_maps + 4ull * n_maps * n_frames * n_dims)
    throw UnsupportedFormat(path.string() + ": truncated feature file");
  for (std::uint32_t i = 0; i < n_maps; ++i, off += 4)
    stack.layout.push_back(MapRole(get_u32(p + off)));
  stack.maps.assign(n_maps, std::vector<std::vector<double>>(
                                n_frames, std::vector<double>(n_dims)));
  for (std::uint32_t m = 0; m < n_maps; ++m)
    for (std::uint32_t t = 0; t < n_frames; ++t)
      for (std::uint32_t d = 0; d < n_dims; ++d, off += 4) {
        const std::uint32_t bits = get_u32(p + off);
        float f;
        std::memcpy(&f, &bits, 4);
        stack.maps[m][t][d] = f;
      }
  return stack;
}

}  // namespace seld
