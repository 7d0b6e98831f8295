#include "support/fixtures.hpp"

#include <random>

#include "seld/array_models.hpp"
#include "seld/dataset.hpp"

namespace fs = std::filesystem;

namespace seld::testing {

fs::path build_mini_dataset(const std::string& tag) {
  const fs::path root = fs::temp_directory_path() / "seld_test" / tag;
  fs::remove_all(root);
  fs::create_directories(root / "mic");
  fs::create_directories(root / "foa");
  fs::create_directories(root / "metadata");

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const struct {
    const char* stem;
    int class_id;
    double az, el;
  } items[2] = {{"mix001", 6, 40.0, 10.0}, {"mix002", 13, -120.0, -30.0}};

  for (const auto& item : items) {
    const std::size_t len = 4 * 24000;
    std::vector<double> s(len, 0.0);
    for (std::size_t i = 12000; i < 60000; ++i) s[i] = u(rng);

    const MultichannelClip foa =
        synthesize_foa_point_source(s, Doa{item.az, item.el});
    MultichannelClip mic = make_clip(4, len, 24000, ClipFormat::kMic);
    for (int ch = 0; ch < 4; ++ch) {
      const double gain = 0.6 + 0.4 * cos_gamma(ch + 1, Doa{item.az, item.el});
      for (std::size_t i = 0; i < len; ++i)
        mic.channels[ch][i] = gain * s[i] + 1e-4 * u(rng);
    }
    write_wav(mic, root / "mic" / (std::string(item.stem) + ".wav"));
    write_wav(foa, root / "foa" / (std::string(item.stem) + ".wav"));

    EventAnnotationList ann;
    for (int f = 5; f < 25; ++f)
      ann.rows.push_back({f, item.class_id, 0, item.az, item.el});
    emit_metadata(ann, root / "metadata" / (std::string(item.stem) + ".csv"));
  }
  return root;
}

}  // namespace seld::testing
