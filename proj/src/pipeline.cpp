#include "seld/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "seld/dsp.hpp"
#include "seld/errors.hpp"
#include "seld/features.hpp"
#include "seld/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace seld {

namespace {

// Bounded parallel map; tasks must only touch their own slot. Errors are
// collected, not thrown, so one bad file cannot sink the batch.
void parallel_for(int n, int workers,
                  const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

double wav_seconds(const fs::path& path) {
  const MultichannelClip clip = read_wav(path);
  return clip.duration_seconds();
}

}  // namespace

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnsupportedFormat("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

std::vector<DataItem> scan_dataset(const fs::path& dir) {
  const fs::path meta_dir = dir / "metadata";
  if (!fs::is_directory(meta_dir))
    throw ConfigInvalid("dataset directory " + dir.string() +
                        " has no metadata/ subdirectory");
  std::vector<DataItem> items;
  for (const auto& entry : fs::directory_iterator(meta_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv")
      continue;
    DataItem item;
    item.stem = entry.path().stem().string();
    item.metadata = entry.path();
    item.mic = dir / "mic" / (item.stem + ".wav");
    item.foa = dir / "foa" / (item.stem + ".wav");
    items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end(),
            [](const DataItem& a, const DataItem& b) { return a.stem < b.stem; });
  return items;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

void require_keys(const json& obj, const std::string& prefix,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigInvalid("unknown config key '" +
                          (prefix.empty() ? key : prefix + "." + key) + "'");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigInvalid("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

PipelineConfig parse_config_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigInvalid("config is not a JSON object");

  require_keys(j, "", {"version", "input_dir", "output_dir", "seed", "workers",
                       "acs", "mcs", "tdm", "features", "tfm"});

  PipelineConfig cfg;
  cfg.version = get_or<int>(j, "version", 0);
  if (cfg.version != 1)
    throw ConfigInvalid("config version must be 1");
  if (!j.contains("input_dir") || !j.contains("output_dir"))
    throw ConfigInvalid("config needs input_dir and output_dir");
  cfg.input_dir = j.at("input_dir").get<std::string>();
  cfg.output_dir = j.at("output_dir").get<std::string>();
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.workers = get_or<int>(j, "workers", 1);
  if (cfg.workers < 1) throw ConfigInvalid("workers must be >= 1");

  if (j.contains("acs")) {
    const json& a = j.at("acs");
    require_keys(a, "acs", {"enabled", "patterns"});
    cfg.acs.enabled = get_or<bool>(a, "enabled", false);
    if (a.contains("patterns")) {
      cfg.acs.patterns = a.at("patterns").get<std::vector<int>>();
      for (int p : cfg.acs.patterns)
        if (p < 1 || p > 8)
          throw ConfigInvalid("acs.patterns entries must be in 1..8");
      if (cfg.acs.patterns.empty())
        throw ConfigInvalid("acs.patterns must be nonempty");
    }
  }
  if (j.contains("mcs")) {
    const json& m = j.at("mcs");
    require_keys(m, "mcs",
                 {"enabled", "pair_count", "em_iters", "min_segment_seconds"});
    cfg.mcs.enabled = get_or<bool>(m, "enabled", false);
    cfg.mcs.pair_count = get_or<int>(m, "pair_count", 0);
    cfg.mcs.em_iters = get_or<int>(m, "em_iters", 10);
    cfg.mcs.min_segment_seconds = get_or<double>(m, "min_segment_seconds", 0.5);
    if (cfg.mcs.pair_count < 0)
      throw ConfigInvalid("mcs.pair_count must be >= 0");
  }
  if (j.contains("tdm")) {
    const json& t = j.at("tdm");
    require_keys(t, "tdm", {"enabled", "mix_count", "gain_min", "gain_max"});
    cfg.tdm.enabled = get_or<bool>(t, "enabled", false);
    cfg.tdm.mix_count = get_or<int>(t, "mix_count", 0);
    cfg.tdm.gain_min = get_or<double>(t, "gain_min", 0.5);
    cfg.tdm.gain_max = get_or<double>(t, "gain_max", 1.0);
    if (cfg.tdm.gain_min <= 0.0 || cfg.tdm.gain_max < cfg.tdm.gain_min)
      throw ConfigInvalid("tdm gain range must satisfy 0 < gain_min <= gain_max");
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    require_keys(f, "features", {"enabled"});
    cfg.features.enabled = get_or<bool>(f, "enabled", false);
  }
  if (j.contains("tfm")) {
    const json& t = j.at("tfm");
    require_keys(t, "tfm",
                 {"enabled", "max_time_mask", "time_mask_period",
                  "max_freq_mask", "masked_map_count"});
    cfg.tfm.enabled = get_or<bool>(t, "enabled", false);
    cfg.tfm.config.max_time_mask =
        get_or<int>(t, "max_time_mask", cfg.tfm.config.max_time_mask);
    cfg.tfm.config.time_mask_period =
        get_or<int>(t, "time_mask_period", cfg.tfm.config.time_mask_period);
    cfg.tfm.config.max_freq_mask =
        get_or<int>(t, "max_freq_mask", cfg.tfm.config.max_freq_mask);
    cfg.tfm.config.masked_map_count =
        get_or<int>(t, "masked_map_count", cfg.tfm.config.masked_map_count);
    if (cfg.tfm.config.max_time_mask >= cfg.tfm.config.time_mask_period)
      throw ConfigInvalid("tfm.max_time_mask must be < tfm.time_mask_period");
  }
  if (cfg.tfm.enabled && !cfg.features.enabled)
    throw ConfigInvalid("tfm.enabled requires features.enabled");
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j{
      {"version", cfg.version},
      {"input_dir", cfg.input_dir.string()},
      {"output_dir", cfg.output_dir.string()},
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"acs", {{"enabled", cfg.acs.enabled}, {"patterns", cfg.acs.patterns}}},
      {"mcs",
       {{"enabled", cfg.mcs.enabled},
        {"pair_count", cfg.mcs.pair_count},
        {"em_iters", cfg.mcs.em_iters},
        {"min_segment_seconds", cfg.mcs.min_segment_seconds}}},
      {"tdm",
       {{"enabled", cfg.tdm.enabled},
        {"mix_count", cfg.tdm.mix_count},
        {"gain_min", cfg.tdm.gain_min},
        {"gain_max", cfg.tdm.gain_max}}},
      {"features", {{"enabled", cfg.features.enabled}}},
      {"tfm",
       {{"enabled", cfg.tfm.enabled},
        {"max_time_mask", cfg.tfm.config.max_time_mask},
        {"time_mask_period", cfg.tfm.config.time_mask_period},
        {"max_freq_mask", cfg.tfm.config.max_freq_mask},
        {"masked_map_count", cfg.tfm.config.masked_map_count}}},
  };
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

bool Manifest::has_errors() const {
  for (const StageReport& s : stages)
    if (!s.errors.empty()) return true;
  return false;
}

std::string Manifest::to_json() const {
  json stages_json = json::array();
  for (const StageReport& s : stages) {
    json outputs = json::array();
    for (const ManifestEntry& e : s.outputs) {
      json files(e.files), hashes(e.hashes);
      outputs.push_back({{"stem", e.stem},
                         {"files", files},
                         {"hashes", hashes},
                         {"seconds", e.seconds}});
    }
    json errors = json::array();
    for (const auto& [item, msg] : s.errors)
      errors.push_back({{"item", item}, {"error", msg}});
    stages_json.push_back({{"name", s.name},
                           {"enabled", s.enabled},
                           {"input_hours", s.input_hours},
                           {"output_hours", s.output_hours},
                           {"inputs", s.inputs},
                           {"carried", s.carried},
                           {"outputs", outputs},
                           {"errors", errors},
                           {"skipped", s.skipped}});
  }
  json j{{"seed", seed},
         {"config", json::parse(config_json)},
         {"stages", stages_json},
         {"final_hours", final_hours}};
  return j.dump(2);
}

Manifest Manifest::from_json(const std::string& text) {
  json j = json::parse(text);
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_json = j.at("config").dump(2);
  m.final_hours = j.at("final_hours").get<double>();
  for (const json& sj : j.at("stages")) {
    StageReport s;
    s.name = sj.at("name").get<std::string>();
    s.enabled = sj.at("enabled").get<bool>();
    s.input_hours = sj.at("input_hours").get<double>();
    s.output_hours = sj.at("output_hours").get<double>();
    s.inputs = sj.at("inputs").get<std::vector<std::string>>();
    s.carried = sj.at("carried").get<std::vector<std::string>>();
    s.skipped = sj.at("skipped").get<int>();
    for (const json& oj : sj.at("outputs")) {
      ManifestEntry e;
      e.stem = oj.at("stem").get<std::string>();
      e.files = oj.at("files").get<std::map<std::string, std::string>>();
      e.hashes = oj.at("hashes").get<std::map<std::string, std::string>>();
      e.seconds = oj.at("seconds").get<double>();
      s.outputs.push_back(std::move(e));
    }
    for (const json& ej : sj.at("errors"))
      s.errors.emplace_back(ej.at("item").get<std::string>(),
                            ej.at("error").get<std::string>());
    m.stages.push_back(std::move(s));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Stage execution
// ---------------------------------------------------------------------------

namespace {

struct WorkItem {
  std::string stem;
  fs::path mic, foa, metadata;
  double seconds = 0.0;
};

double total_hours(const std::vector<WorkItem>& items) {
  double s = 0.0;
  for (const WorkItem& it : items) s += it.seconds;
  return s / 3600.0;
}

// Hashes from a previous identical run, used to skip finished outputs.
using PriorHashes = std::map<std::string, std::map<std::string, std::string>>;

// The worker count cannot change any output, so it is excluded from the
// "same run" comparison.
json comparable_config(const std::string& config_json) {
  json j = json::parse(config_json);
  j.erase("workers");
  return j;
}

PriorHashes load_prior(const fs::path& manifest_path,
                       const std::string& config_json, std::uint64_t seed) {
  PriorHashes prior;
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) return prior;
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    Manifest m = Manifest::from_json(ss.str());
    if (m.seed != seed ||
        comparable_config(m.config_json) != comparable_config(config_json))
      return prior;
    for (const StageReport& s : m.stages)
      for (const ManifestEntry& e : s.outputs) prior[e.stem] = e.hashes;
  } catch (...) {
    // Unreadable or stale manifest: recompute everything.
    prior.clear();
  }
  return prior;
}

bool can_skip(const PriorHashes& prior, const std::string& stem,
              const std::map<std::string, fs::path>& files) {
  auto it = prior.find(stem);
  if (it == prior.end()) return false;
  for (const auto& [kind, path] : files) {
    auto h = it->second.find(kind);
    if (h == it->second.end()) return false;
    if (!fs::exists(path)) return false;
    if (hash_file(path) != h->second) return false;
  }
  return true;
}

ManifestEntry finish_entry(const std::string& stem,
                           const std::map<std::string, fs::path>& files,
                           const fs::path& root, double seconds) {
  ManifestEntry e;
  e.stem = stem;
  e.seconds = seconds;
  for (const auto& [kind, path] : files) {
    e.files[kind] = fs::relative(path, root).string();
    e.hashes[kind] = hash_file(path);
  }
  return e;
}

MultichannelClip load_both(const WorkItem& item) {
  MultichannelClip mic = read_wav(item.mic);
  MultichannelClip foa = read_wav(item.foa);
  mic.format = ClipFormat::kMic;
  foa.format = ClipFormat::kFoa;
  return concat_both(mic, foa);
}

void write_both(const MultichannelClip& both, const fs::path& mic_path,
                const fs::path& foa_path) {
  MultichannelClip mic = make_clip(4, both.num_samples(), both.sample_rate,
                                   ClipFormat::kMic);
  MultichannelClip foa = make_clip(4, both.num_samples(), both.sample_rate,
                                   ClipFormat::kFoa);
  for (int c = 0; c < 4; ++c) {
    mic.channels[c] = both.channels[c];
    foa.channels[c] = both.channels[c + 4];
  }
  write_wav(mic, mic_path);
  write_wav(foa, foa_path);
}

struct StageDirs {
  fs::path mic, foa, metadata;
};

StageDirs make_stage_dirs(const fs::path& out_root, const std::string& stage) {
  StageDirs d{out_root / stage / "mic", out_root / stage / "foa",
              out_root / stage / "metadata"};
  fs::create_directories(d.mic);
  fs::create_directories(d.foa);
  fs::create_directories(d.metadata);
  return d;
}

// All solo (and optionally static) segments over an item set, in a
// deterministic order.
struct SegmentRef {
  std::size_t item_index;
  SegmentDescriptor descriptor;
};

std::vector<SegmentRef> collect_segments(
    const std::vector<WorkItem>& items, bool require_eligible,
    double min_seconds,
    std::vector<std::pair<std::string, std::string>>* errors) {
  std::vector<SegmentRef> refs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    EventAnnotationList ann;
    try {
      ann = parse_metadata(items[i].metadata);
    } catch (const SeldError& e) {
      if (errors) errors->emplace_back(items[i].stem, e.what());
      continue;
    }
    for (const SegmentDescriptor& d :
         extract_segments(ann, items[i].stem)) {
      if (require_eligible ? d.eligible(min_seconds)
                           : (!d.overlapping &&
                              d.frames() >= kLabelFramesPerSecond / 2))
        refs.push_back({i, d});
    }
  }
  return refs;
}

}  // namespace

Manifest run_pipeline(const PipelineConfig& cfg) {
  Manifest manifest;
  manifest.seed = cfg.seed;
  manifest.config_json = config_to_json(cfg);

  fs::create_directories(cfg.output_dir);
  const fs::path manifest_path = cfg.output_dir / "manifest.json";
  const PriorHashes prior =
      load_prior(manifest_path, manifest.config_json, cfg.seed);

  std::vector<WorkItem> current;
  for (const DataItem& d : scan_dataset(cfg.input_dir)) {
    WorkItem w{d.stem, d.mic, d.foa, d.metadata, 0.0};
    try {
      w.seconds = wav_seconds(d.mic);
    } catch (const SeldError&) {
      // Unreadable item: keep it listed, the stage that touches it reports
      // the per-file error.
    }
    current.push_back(std::move(w));
  }

  std::mutex report_mutex;

  // ---- ACS ----
  {
    StageReport report;
    report.name = "acs";
    report.enabled = cfg.acs.enabled;
    report.input_hours = total_hours(current);
    for (const WorkItem& it : current) report.inputs.push_back(it.stem);

    if (cfg.acs.enabled) {
      const StageDirs dirs = make_stage_dirs(cfg.output_dir, "acs");
      std::vector<int> patterns = cfg.acs.patterns;
      std::sort(patterns.begin(), patterns.end());
      patterns.erase(std::unique(patterns.begin(), patterns.end()),
                     patterns.end());

      struct Task {
        std::size_t item;
        int pattern;
      };
      std::vector<Task> tasks;
      for (std::size_t i = 0; i < current.size(); ++i)
        for (int p : patterns) tasks.push_back({i, p});

      std::vector<WorkItem> produced(tasks.size());
      std::vector<char> ok(tasks.size(), 0);
      std::vector<char> skipped(tasks.size(), 0);

      parallel_for(static_cast<int>(tasks.size()), cfg.workers, [&](int ti) {
        const Task& task = tasks[ti];
        const WorkItem& src = current[task.item];
        const std::string stem =
            src.stem + "_acs" + std::to_string(task.pattern);
        const std::map<std::string, fs::path> files{
            {"mic", dirs.mic / (stem + ".wav")},
            {"foa", dirs.foa / (stem + ".wav")},
            {"metadata", dirs.metadata / (stem + ".csv")}};
        try {
          if (!can_skip(prior, stem, files)) {
            const DoaTransform& t = transform_by_id(task.pattern);
            MultichannelClip mic = read_wav(src.mic);
            MultichannelClip foa = read_wav(src.foa);
            mic.format = ClipFormat::kMic;
            foa.format = ClipFormat::kFoa;
            const EventAnnotationList ann = parse_metadata(src.metadata);
            write_wav(apply_to_audio(mic, t), files.at("mic"));
            write_wav(apply_to_audio(foa, t), files.at("foa"));
            emit_metadata(apply_to_labels(ann, t), files.at("metadata"));
          } else {
            skipped[ti] = 1;
          }
          produced[ti] = WorkItem{stem, files.at("mic"), files.at("foa"),
                                  files.at("metadata"), src.seconds};
          ok[ti] = 1;
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(report_mutex);
          report.errors.emplace_back(stem, e.what());
        }
      });

      std::vector<WorkItem> next;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!ok[i]) continue;
        report.skipped += skipped[i];
        const std::map<std::string, fs::path> files{
            {"mic", produced[i].mic},
            {"foa", produced[i].foa},
            {"metadata", produced[i].metadata}};
        report.outputs.push_back(finish_entry(produced[i].stem, files,
                                              cfg.output_dir,
                                              produced[i].seconds));
        next.push_back(produced[i]);
      }
      std::sort(next.begin(), next.end(),
                [](const WorkItem& a, const WorkItem& b) {
                  return a.stem < b.stem;
                });
      std::sort(report.outputs.begin(), report.outputs.end(),
                [](const ManifestEntry& a, const ManifestEntry& b) {
                  return a.stem < b.stem;
                });
      current = std::move(next);
    } else {
      for (const WorkItem& it : current) report.carried.push_back(it.stem);
    }
    report.output_hours = total_hours(current);
    manifest.stages.push_back(std::move(report));
  }

  // ---- MCS ----
  {
    StageReport report;
    report.name = "mcs";
    report.enabled = cfg.mcs.enabled;
    report.input_hours = total_hours(current);
    for (const WorkItem& it : current) {
      report.inputs.push_back(it.stem);
      report.carried.push_back(it.stem);
    }

    if (cfg.mcs.enabled && cfg.mcs.pair_count > 0) {
      const StageDirs dirs = make_stage_dirs(cfg.output_dir, "mcs");
      const std::uint64_t stage_seed = derive_seed(cfg.seed, "mcs");
      try {
        const std::vector<SegmentRef> eligible =
            collect_segments(current, true, cfg.mcs.min_segment_seconds,
                             &report.errors);
        if (eligible.size() < 2)
          throw InsufficientSegments(
              "mcs stage: fewer than 2 eligible segments in the input set");

        std::mt19937_64 rng = make_rng(derive_seed(stage_seed, "mcs-pairing"));
        std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
        struct Pair {
          std::size_t spectral, spatial;
        };
        std::vector<Pair> pairs(cfg.mcs.pair_count);
        for (Pair& p : pairs) {
          p.spectral = pick(rng);
          p.spatial = pick(rng);
          if (p.spatial == p.spectral)
            p.spatial = (p.spatial + 1) % eligible.size();
        }

        // Which outputs can be reused as-is?
        std::vector<std::map<std::string, fs::path>> out_files(pairs.size());
        std::vector<char> reuse(pairs.size(), 0);
        std::set<std::size_t> donors_needed;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          char name[32];
          std::snprintf(name, sizeof(name), "mcs_%05zu", k);
          out_files[k] = {{"mic", dirs.mic / (std::string(name) + ".wav")},
                          {"foa", dirs.foa / (std::string(name) + ".wav")},
                          {"metadata",
                           dirs.metadata / (std::string(name) + ".csv")}};
          reuse[k] = can_skip(prior, name, out_files[k]) ? 1 : 0;
          if (!reuse[k]) {
            donors_needed.insert(pairs[k].spectral);
            donors_needed.insert(pairs[k].spatial);
          }
        }

        // Extract each needed donor once, in parallel.
        const std::vector<std::size_t> donor_list(donors_needed.begin(),
                                                  donors_needed.end());
        std::map<std::size_t, McsExtraction> extractions;
        std::vector<std::optional<McsExtraction>> extracted(donor_list.size());
        std::vector<std::string> extract_errors(donor_list.size());
        McsOptions opts;
        opts.em_iters = cfg.mcs.em_iters;
        opts.min_segment_seconds = cfg.mcs.min_segment_seconds;
        parallel_for(static_cast<int>(donor_list.size()), cfg.workers,
                     [&](int di) {
                       const SegmentRef& ref = eligible[donor_list[di]];
                       try {
                         const WorkItem& item = current[ref.item_index];
                         const MultichannelClip both = load_both(item);
                         const EventAnnotationList ann =
                             parse_metadata(item.metadata);
                         extracted[di] = mcs_extract(
                             slice_segment(both, ann, ref.descriptor), opts);
                       } catch (const std::exception& e) {
                         extract_errors[di] = e.what();
                       }
                     });
        for (std::size_t di = 0; di < donor_list.size(); ++di) {
          if (extracted[di])
            extractions.emplace(donor_list[di], std::move(*extracted[di]));
          else
            report.errors.emplace_back(
                "segment " + eligible[donor_list[di]].descriptor.file_id,
                extract_errors[di]);
        }

        std::vector<std::optional<WorkItem>> produced(pairs.size());
        parallel_for(static_cast<int>(pairs.size()), cfg.workers, [&](int k) {
          char name[32];
          std::snprintf(name, sizeof(name), "mcs_%05d", k);
          const std::string stem(name);
          try {
            double seconds = 0.0;
            if (reuse[k]) {
              seconds = wav_seconds(out_files[k].at("mic"));
            } else {
              auto a = extractions.find(pairs[k].spectral);
              auto b = extractions.find(pairs[k].spatial);
              if (a == extractions.end() || b == extractions.end())
                throw DegenerateInput("donor extraction failed");
              const McsOutput out = mcs_pair(a->second, b->second,
                                             derive_seed(stage_seed, k));
              write_both(out.clip, out_files[k].at("mic"),
                         out_files[k].at("foa"));
              emit_metadata(out.ann, out_files[k].at("metadata"));
              seconds = out.clip.duration_seconds();
            }
            produced[k] = WorkItem{stem, out_files[k].at("mic"),
                                   out_files[k].at("foa"),
                                   out_files[k].at("metadata"), seconds};
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(report_mutex);
            report.errors.emplace_back(stem, e.what());
          }
        });
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          if (!produced[k]) continue;
          report.skipped += reuse[k];
          const std::map<std::string, fs::path> files{
              {"mic", produced[k]->mic},
              {"foa", produced[k]->foa},
              {"metadata", produced[k]->metadata}};
          report.outputs.push_back(finish_entry(produced[k]->stem, files,
                                                cfg.output_dir,
                                                produced[k]->seconds));
          current.push_back(*produced[k]);
        }
      } catch (const std::exception& e) {
        report.errors.emplace_back("mcs", e.what());
      }
    }
    report.output_hours = total_hours(current);
    manifest.stages.push_back(std::move(report));
  }

  // ---- TDM ----
  {
    StageReport report;
    report.name = "tdm";
    report.enabled = cfg.tdm.enabled;
    report.input_hours = total_hours(current);
    for (const WorkItem& it : current) {
      report.inputs.push_back(it.stem);
      report.carried.push_back(it.stem);
    }

    if (cfg.tdm.enabled && cfg.tdm.mix_count > 0) {
      const StageDirs dirs = make_stage_dirs(cfg.output_dir, "tdm");
      const std::uint64_t stage_seed = derive_seed(cfg.seed, "tdm");
      try {
        const std::vector<SegmentRef> solos =
            collect_segments(current, false, 0.0, &report.errors);
        if (solos.size() < 2)
          throw InsufficientSegments(
              "tdm stage: fewer than 2 single-event segments");

        std::mt19937_64 rng = make_rng(derive_seed(stage_seed, "tdm-pairing"));
        std::uniform_int_distribution<std::size_t> pick(0, solos.size() - 1);
        std::vector<std::pair<std::size_t, std::size_t>> pairs(
            cfg.tdm.mix_count);
        for (auto& p : pairs) {
          p.first = pick(rng);
          p.second = pick(rng);
          if (p.second == p.first) p.second = (p.second + 1) % solos.size();
        }

        TdmConfig tdm_cfg{cfg.tdm.gain_min, cfg.tdm.gain_max};
        std::vector<std::optional<WorkItem>> produced(pairs.size());
        std::vector<char> skipped(pairs.size(), 0);
        parallel_for(static_cast<int>(pairs.size()), cfg.workers, [&](int k) {
          char name[32];
          std::snprintf(name, sizeof(name), "tdm_%05d", k);
          const std::string stem(name);
          const std::map<std::string, fs::path> files{
              {"mic", dirs.mic / (stem + ".wav")},
              {"foa", dirs.foa / (stem + ".wav")},
              {"metadata", dirs.metadata / (stem + ".csv")}};
          try {
            double seconds = 0.0;
            if (can_skip(prior, stem, files)) {
              skipped[k] = 1;
              seconds = wav_seconds(files.at("mic"));
            } else {
              const auto& [ia, ib] = pairs[k];
              const WorkItem& item_a = current[solos[ia].item_index];
              const WorkItem& item_b = current[solos[ib].item_index];
              const SegmentData a =
                  slice_segment(load_both(item_a), parse_metadata(item_a.metadata),
                                solos[ia].descriptor);
              const SegmentData b =
                  slice_segment(load_both(item_b), parse_metadata(item_b.metadata),
                                solos[ib].descriptor);
              const TdmOutput mixed =
                  tdm_mix(a.clip, a.ann, b.clip, b.ann,
                          derive_seed(stage_seed, k), tdm_cfg);
              write_both(mixed.clip, files.at("mic"), files.at("foa"));
              emit_metadata(mixed.ann, files.at("metadata"));
              seconds = mixed.clip.duration_seconds();
            }
            produced[k] = WorkItem{stem, files.at("mic"), files.at("foa"),
                                   files.at("metadata"), seconds};
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(report_mutex);
            report.errors.emplace_back(stem, e.what());
          }
        });
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          if (!produced[k]) continue;
          report.skipped += skipped[k];
          const std::map<std::string, fs::path> files{
              {"mic", produced[k]->mic},
              {"foa", produced[k]->foa},
              {"metadata", produced[k]->metadata}};
          report.outputs.push_back(finish_entry(produced[k]->stem, files,
                                                cfg.output_dir,
                                                produced[k]->seconds));
          current.push_back(*produced[k]);
        }
      } catch (const std::exception& e) {
        report.errors.emplace_back("tdm", e.what());
      }
    }
    report.output_hours = total_hours(current);
    manifest.stages.push_back(std::move(report));
  }

  // ---- features ----
  std::vector<std::pair<std::string, fs::path>> feature_files;
  {
    StageReport report;
    report.name = "features";
    report.enabled = cfg.features.enabled;
    report.input_hours = total_hours(current);
    for (const WorkItem& it : current) {
      report.inputs.push_back(it.stem);
      report.carried.push_back(it.stem);
    }

    if (cfg.features.enabled) {
      const fs::path dir = cfg.output_dir / "features";
      fs::create_directories(dir);
      std::vector<std::optional<std::pair<std::string, fs::path>>> produced(
          current.size());
      std::vector<char> skipped(current.size(), 0);
      parallel_for(static_cast<int>(current.size()), cfg.workers, [&](int i) {
        const WorkItem& item = current[i];
        const std::string stem = item.stem;
        const std::map<std::string, fs::path> files{
            {"features", dir / (stem + ".feat")}};
        try {
          if (can_skip(prior, "feat:" + stem, files)) {
            skipped[i] = 1;
          } else {
            FeatureConfig fc;
            const FeatureStack stack = build_stack(load_both(item), fc);
            write_feature_file(stack, files.at("features"));
          }
          produced[i] = {stem, files.at("features")};
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(report_mutex);
          report.errors.emplace_back(stem, e.what());
        }
      });
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (!produced[i]) continue;
        report.skipped += skipped[i];
        report.outputs.push_back(finish_entry(
            "feat:" + produced[i]->first,
            {{"features", produced[i]->second}}, cfg.output_dir,
            current[i].seconds));
        feature_files.push_back(*produced[i]);
      }
    }
    report.output_hours = total_hours(current);
    manifest.stages.push_back(std::move(report));
  }

  // ---- TFM (applies to the saved feature files) ----
  {
    StageReport report;
    report.name = "tfm";
    report.enabled = cfg.tfm.enabled;
    report.input_hours = total_hours(current);
    for (const auto& [stem, _] : feature_files) report.inputs.push_back(stem);

    if (cfg.tfm.enabled) {
      const fs::path dir = cfg.output_dir / "tfm";
      fs::create_directories(dir);
      const std::uint64_t stage_seed = derive_seed(cfg.seed, "tfm");
      std::vector<std::optional<std::string>> produced(feature_files.size());
      std::vector<char> skipped(feature_files.size(), 0);
      std::vector<fs::path> out_paths(feature_files.size());
      parallel_for(static_cast<int>(feature_files.size()), cfg.workers,
                   [&](int i) {
                     const auto& [stem, src] = feature_files[i];
                     out_paths[i] = dir / (stem + ".feat");
                     const std::map<std::string, fs::path> files{
                         {"features", out_paths[i]}};
                     try {
                       if (can_skip(prior, "tfm:" + stem, files)) {
                         skipped[i] = 1;
                       } else {
                         const FeatureStack stack = read_feature_file(src);
                         const FeatureStack masked = tfm_apply(
                             stack, cfg.tfm.config,
                             derive_seed(stage_seed, stem));
                         write_feature_file(masked, out_paths[i]);
                       }
                       produced[i] = stem;
                     } catch (const std::exception& e) {
                       std::lock_guard<std::mutex> lock(report_mutex);
                       report.errors.emplace_back(stem, e.what());
                     }
                   });
      for (std::size_t i = 0; i < feature_files.size(); ++i) {
        if (!produced[i]) continue;
        report.skipped += skipped[i];
        report.outputs.push_back(
            finish_entry("tfm:" + *produced[i],
                         {{"features", out_paths[i]}}, cfg.output_dir, 0.0));
      }
    }
    report.output_hours = total_hours(current);
    manifest.stages.push_back(std::move(report));
  }

  manifest.final_hours = total_hours(current);

  std::ofstream out(manifest_path, std::ios::binary);
  out << manifest.to_json() << '\n';
  return manifest;
}

}  // namespace seld
