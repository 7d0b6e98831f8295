#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seld/acs.hpp"
#include "seld/mcs.hpp"
#include "seld/mix_mask.hpp"

namespace seld {

// A dataset item: paired 4-channel MIC and FOA recordings plus the metadata
// CSV, linked by a shared stem under <dir>/mic, <dir>/foa, <dir>/metadata.
struct DataItem {
  std::string stem;
  std::filesystem::path mic;
  std::filesystem::path foa;
  std::filesystem::path metadata;
};

std::vector<DataItem> scan_dataset(const std::filesystem::path& dir);

struct PipelineConfig {
  int version = 1;
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int workers = 1;

  struct Acs {
    bool enabled = false;
    std::vector<int> patterns{1, 2, 3, 4, 5, 6, 7, 8};
  } acs;
  struct Mcs {
    bool enabled = false;
    int pair_count = 0;
    int em_iters = 10;
    double min_segment_seconds = 0.5;
  } mcs;
  struct Tdm {
    bool enabled = false;
    int mix_count = 0;
    double gain_min = 0.5;
    double gain_max = 1.0;
  } tdm;
  struct Features {
    bool enabled = false;
  } features;
  struct Tfm {
    bool enabled = false;
    TfmConfig config;
  } tfm;
};

// Strict parse: unknown keys fail with their full path. Throws ConfigInvalid.
PipelineConfig parse_config_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);

struct ManifestEntry {
  std::string stem;
  std::map<std::string, std::string> files;   // kind -> relative path
  std::map<std::string, std::string> hashes;  // kind -> fnv1a64 hex
  double seconds = 0.0;
};

struct StageReport {
  std::string name;
  bool enabled = false;
  double input_hours = 0.0;
  double output_hours = 0.0;
  std::vector<std::string> inputs;       // stems
  std::vector<ManifestEntry> outputs;    // new items produced by this stage
  std::vector<std::string> carried;      // items passed through
  std::vector<std::pair<std::string, std::string>> errors;  // item, message
  int skipped = 0;  // outputs reused from a previous identical run
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<StageReport> stages;
  double final_hours = 0.0;

  bool has_errors() const;
  std::string to_json() const;
  static Manifest from_json(const std::string& text);
};

// Executes the enabled stages in the fixed order ACS -> MCS -> TDM ->
// features -> TFM. Disabled stages pass their input through. Per-file
// failures are recorded and do not abort the batch. Re-runs against an
// existing manifest with the same config and seed skip outputs whose hashes
// still match.
Manifest run_pipeline(const PipelineConfig& cfg);

// FNV-1a 64 over a file's bytes, hex encoded.
std::string hash_file(const std::filesystem::path& path);

}  // namespace seld
