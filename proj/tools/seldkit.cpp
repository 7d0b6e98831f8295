// seldkit - spatial audio augmentation and evaluation toolkit CLI.
//
// Subcommands: run, acs, mcs, tdm, features, tfm-preview, evaluate, inventory.
// Exit codes: 0 success, 1 config/usage error, 2 partial failures (batch
// finished, manifest written, some items failed).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "seld/acs.hpp"
#include "seld/dataset.hpp"
#include "seld/errors.hpp"
#include "seld/features.hpp"
#include "seld/mcs.hpp"
#include "seld/metrics.hpp"
#include "seld/mix_mask.hpp"
#include "seld/pipeline.hpp"
#include "seld/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int finish_run(const seld::Manifest& manifest) {
  for (const seld::StageReport& s : manifest.stages) {
    std::cout << "stage " << s.name << (s.enabled ? "" : " (disabled)")
              << ": " << s.input_hours << " h in, " << s.output_hours
              << " h out, " << s.outputs.size() << " new item(s)";
    if (s.skipped > 0) std::cout << ", " << s.skipped << " reused";
    if (!s.errors.empty()) std::cout << ", " << s.errors.size() << " error(s)";
    std::cout << '\n';
    for (const auto& [item, msg] : s.errors)
      std::cerr << "  error [" << s.name << "] " << item << ": " << msg << '\n';
  }
  std::cout << "final: " << manifest.final_hours << " h\n";
  return manifest.has_errors() ? 2 : 0;
}

int cmd_run(const fs::path& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> workers, const std::string& only_stage) {
  seld::PipelineConfig cfg = seld::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (!only_stage.empty()) {
    cfg.acs.enabled = only_stage == "acs";
    cfg.mcs.enabled = only_stage == "mcs";
    cfg.tdm.enabled = only_stage == "tdm";
    const bool feat = only_stage == "features" || only_stage == "tfm";
    cfg.features.enabled = feat;
    cfg.tfm.enabled = only_stage == "tfm";
    if (!cfg.acs.enabled && !cfg.mcs.enabled && !cfg.tdm.enabled && !feat)
      throw seld::ConfigInvalid("unknown stage '" + only_stage + "'");
  }
  return finish_run(seld::run_pipeline(cfg));
}

seld::PipelineConfig stage_config(const fs::path& input, const fs::path& output,
                                  std::uint64_t seed, int workers) {
  seld::PipelineConfig cfg;
  cfg.input_dir = input;
  cfg.output_dir = output;
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

int cmd_evaluate(const fs::path& ref_dir, const fs::path& pred_dir,
                 const fs::path& json_out) {
  std::vector<fs::path> ref_files;
  for (const auto& e : fs::directory_iterator(ref_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      ref_files.push_back(e.path());
  std::sort(ref_files.begin(), ref_files.end());
  if (ref_files.empty()) {
    std::cerr << "evaluate: no reference CSV files in " << ref_dir << '\n';
    return 1;
  }

  std::vector<seld::SegmentFrame> all;
  int missing = 0;
  for (const fs::path& ref_path : ref_files) {
    const fs::path pred_path = pred_dir / ref_path.filename();
    const seld::EventAnnotationList ref = seld::parse_metadata(ref_path);
    seld::EventAnnotationList pred;
    if (fs::exists(pred_path)) {
      pred = seld::parse_metadata(pred_path);
    } else {
      ++missing;  // scored as empty predictions
    }
    const auto zipped =
        seld::zip_segments(seld::segmentize(ref), seld::segmentize(pred));
    all.insert(all.end(), zipped.begin(), zipped.end());
  }

  std::array<seld::ClassScores, seld::kNumClasses> per_class{};
  const seld::SeldScores s = seld::compute_scores(all, 20.0, &per_class);

  std::cout << "files:      " << ref_files.size()
            << (missing ? " (" + std::to_string(missing) + " without predictions)"
                        : "")
            << '\n';
  std::cout << "ER_20:      " << s.er20 << '\n';
  std::cout << "F_20:       " << s.f20 * 100.0 << " %\n";
  std::cout << "LE_CD:      " << s.le_cd_deg << " deg\n";
  std::cout << "LR_CD:      " << s.lr_cd * 100.0 << " %\n";
  std::cout << "SELD score: " << s.seld_score << '\n';
  std::cout << "\nper class (TP/FP/FN, LE deg, LR):\n";
  for (int c = 0; c < seld::kNumClasses; ++c) {
    const seld::ClassScores& cs = per_class[c];
    if (cs.refs == 0 && cs.fp == 0) continue;
    const double le =
        cs.matched > 0 ? cs.angle_sum / cs.matched : 180.0;
    const double lr = cs.refs > 0 ? double(cs.matched) / cs.refs : 0.0;
    std::printf("  %2d %-14s %4ld/%4ld/%4ld  %7.2f  %5.3f\n", c,
                seld::class_names()[c].c_str(), cs.tp, cs.fp, cs.fn, le, lr);
  }

  if (!json_out.empty()) {
    json per_class_json = json::array();
    for (int c = 0; c < seld::kNumClasses; ++c) {
      const seld::ClassScores& cs = per_class[c];
      per_class_json.push_back(
          {{"class_id", c},
           {"name", seld::class_names()[c]},
           {"tp", cs.tp},
           {"fp", cs.fp},
           {"fn", cs.fn},
           {"matched", cs.matched},
           {"refs", cs.refs},
           {"le_cd_deg", cs.matched > 0 ? cs.angle_sum / cs.matched : 180.0},
           {"lr_cd", cs.refs > 0 ? double(cs.matched) / cs.refs : 0.0}});
    }
    json out{{"er20", s.er20},
             {"f20", s.f20},
             {"le_cd_deg", s.le_cd_deg},
             {"lr_cd", s.lr_cd},
             {"seld_score", s.seld_score},
             {"per_class", per_class_json}};
    std::ofstream os(json_out);
    os << out.dump(2) << '\n';
  }
  return 0;
}

int cmd_inventory(const fs::path& input, const fs::path& output) {
  // Solo (single-active-event) runs only; overlapped runs are useless to both
  // MCS and TDM.
  std::vector<seld::SegmentDescriptor> solos;
  for (const seld::DataItem& item : seld::scan_dataset(input)) {
    const seld::EventAnnotationList ann = seld::parse_metadata(item.metadata);
    for (seld::SegmentDescriptor d : seld::extract_segments(ann, item.stem))
      if (!d.overlapping) solos.push_back(std::move(d));
  }
  seld::write_inventory(solos, output);
  long eligible = 0;
  for (const seld::SegmentDescriptor& d : solos) eligible += d.eligible();
  std::cout << solos.size() << " solo segment(s), " << eligible
            << " MCS-eligible, written to " << output << '\n';
  if (solos.empty() || eligible == 0) {
    std::cerr << "inventory: no "
              << (solos.empty() ? "single-event" : "static single-event")
              << " segments found; MCS has nothing to work with\n";
    return 2;
  }
  return 0;
}

int cmd_tfm_preview(int frames, int dims, std::uint64_t seed,
                    const seld::TfmConfig& cfg) {
  const seld::TfmPlacement p = seld::tfm_placement(frames, dims, cfg, seed);
  std::vector<std::string> grid(dims, std::string(frames, '.'));
  for (const auto& w : p.time_masks)
    for (int t = w.start_frame; t < w.start_frame + w.length; ++t)
      for (int d = 0; d < dims; ++d) grid[d][t] = '#';
  for (int d = p.freq_start; d < p.freq_start + p.freq_length; ++d)
    for (int t = 0; t < frames; ++t) grid[d][t] = '#';

  std::cout << "time masks:";
  for (const auto& w : p.time_masks)
    std::cout << " [" << w.start_frame << ", " << w.start_frame + w.length
              << ")";
  std::cout << "\nfreq mask: [" << p.freq_start << ", "
            << p.freq_start + p.freq_length << ")\n";
  for (int d = dims - 1; d >= 0; --d) std::cout << grid[d] << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial audio augmentation and evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path, input_dir, output_dir, ref_dir, pred_dir;
  std::string json_out, stage, patterns_arg = "1,2,3,4,5,6,7,8";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
  bool workers_set = false;
  int count = 8, em_iters = 10, frames = 300, dims = 64;
  double gain_min = 0.5, gain_max = 1.0;
  seld::TfmConfig tfm_cfg;

  CLI::App* run = app.add_subcommand("run", "run the staged pipeline");
  run->add_option("--config", config_path, "pipeline config JSON")->required();
  run->add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--workers", workers, "override the worker count")
      ->each([&](const std::string&) { workers_set = true; });
  run->add_option("--stage", stage, "run a single stage only");

  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--input", input_dir, "dataset directory")->required();
    cmd->add_option("--output", output_dir, "output directory")->required();
  };

  CLI::App* acs = app.add_subcommand("acs", "channel-swap augmentation");
  add_io(acs);
  acs->add_option("--patterns", patterns_arg, "table rows, e.g. 1,4,7");
  acs->add_option("--workers", workers, "worker count");

  CLI::App* mcs = app.add_subcommand("mcs", "multi-channel simulation");
  add_io(mcs);
  mcs->add_option("--count", count, "number of simulated clips")->required();
  mcs->add_option("--iters", em_iters, "CGMM EM iterations");
  mcs->add_option("--seed", seed, "master seed");
  mcs->add_option("--workers", workers, "worker count");

  CLI::App* tdm = app.add_subcommand("tdm", "time-domain mixing");
  add_io(tdm);
  tdm->add_option("--count", count, "number of mixed clips")->required();
  tdm->add_option("--gain-min", gain_min, "low end of the mixing gain range");
  tdm->add_option("--gain-max", gain_max, "high end of the mixing gain range");
  tdm->add_option("--seed", seed, "master seed");
  tdm->add_option("--workers", workers, "worker count");

  CLI::App* feat = app.add_subcommand("features", "extract feature stacks");
  add_io(feat);
  feat->add_option("--workers", workers, "worker count");

  CLI::App* preview =
      app.add_subcommand("tfm-preview", "render mask placement for a seed");
  preview->add_option("--frames", frames, "feature frames");
  preview->add_option("--dims", dims, "feature dimensions");
  preview->add_option("--seed", seed, "mask seed");
  preview->add_option("--max-time-mask", tfm_cfg.max_time_mask);
  preview->add_option("--time-mask-period", tfm_cfg.time_mask_period);
  preview->add_option("--max-freq-mask", tfm_cfg.max_freq_mask);

  CLI::App* eval = app.add_subcommand("evaluate", "score predictions");
  eval->add_option("--ref", ref_dir, "reference CSV directory")->required();
  eval->add_option("--pred", pred_dir, "prediction CSV directory")->required();
  eval->add_option("--json", json_out, "also write a JSON report");

  CLI::App* inv = app.add_subcommand("inventory", "list segments");
  inv->add_option("--input", input_dir, "dataset directory")->required();
  inv->add_option("--output", output_dir, "inventory file (JSON lines)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path,
                     seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                     workers_set ? std::optional<int>(workers) : std::nullopt,
                     stage);
    }
    if (acs->parsed()) {
      seld::PipelineConfig cfg =
          stage_config(input_dir, output_dir, seed, workers);
      cfg.acs.enabled = true;
      cfg.acs.patterns.clear();
      for (const auto& tok : CLI::detail::split(patterns_arg, ','))
        cfg.acs.patterns.push_back(std::stoi(tok));
      return finish_run(seld::run_pipeline(cfg));
    }
    if (mcs->parsed()) {
      seld::PipelineConfig cfg =
          stage_config(input_dir, output_dir, seed, workers);
      cfg.mcs.enabled = true;
      cfg.mcs.pair_count = count;
      cfg.mcs.em_iters = em_iters;
      return finish_run(seld::run_pipeline(cfg));
    }
    if (tdm->parsed()) {
      seld::PipelineConfig cfg =
          stage_config(input_dir, output_dir, seed, workers);
      cfg.tdm.enabled = true;
      cfg.tdm.mix_count = count;
      cfg.tdm.gain_min = gain_min;
      cfg.tdm.gain_max = gain_max;
      return finish_run(seld::run_pipeline(cfg));
    }
    if (feat->parsed()) {
      seld::PipelineConfig cfg =
          stage_config(input_dir, output_dir, seed, workers);
      cfg.features.enabled = true;
      return finish_run(seld::run_pipeline(cfg));
    }
    if (preview->parsed())
      return cmd_tfm_preview(frames, dims, seed, tfm_cfg);
    if (eval->parsed()) return cmd_evaluate(ref_dir, pred_dir, json_out);
    if (inv->parsed()) return cmd_inventory(input_dir, output_dir);
  } catch (const seld::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
