#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "seld/dataset.hpp"
#include "support/fixtures.hpp"

using namespace seld;
namespace fs = std::filesystem;

namespace {

int run_tool(const std::string& args) {
  const std::string cmd =
      std::string(SELDKIT_BIN) + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("evaluate with identical ref and pred dirs exits cleanly") {
  const fs::path data = seld::testing::build_mini_dataset("cli_eval");
  const int rc = run_tool("evaluate --ref " + (data / "metadata").string() +
                          " --pred " + (data / "metadata").string());
  CHECK(rc == 0);
}

TEST_CASE("acs --patterns 7 swaps MIC channels 1 and 4") {
  const fs::path data = seld::testing::build_mini_dataset("cli_acs");
  const fs::path out = data.parent_path() / "cli_acs_out";
  fs::remove_all(out);
  const int rc = run_tool("acs --input " + data.string() + " --output " +
                          out.string() + " --patterns 7");
  CHECK(rc == 0);
  const MultichannelClip orig = read_wav(data / "mic" / "mix001.wav");
  const MultichannelClip swapped =
      read_wav(out / "acs" / "mic" / "mix001_acs7.wav");
  CHECK(swapped.channels[0] == orig.channels[3]);
  CHECK(swapped.channels[3] == orig.channels[0]);
}

TEST_CASE("inventory of a dataset with no solo events is empty and nonzero") {
  const fs::path data = seld::testing::build_mini_dataset("cli_inv");
  // Make the two events fully co-active within one file.
  EventAnnotationList ann;
  for (int f = 5; f < 25; ++f) {
    ann.rows.push_back({f, 6, 0, 40.0, 10.0});
    ann.rows.push_back({f, 13, 1, -120.0, -30.0});
  }
  emit_metadata(ann, data / "metadata" / "mix001.csv");
  emit_metadata(ann, data / "metadata" / "mix002.csv");

  const fs::path inv = data.parent_path() / "cli_inv.jsonl";
  const int rc =
      run_tool("inventory --input " + data.string() + " --output " + inv.string());
  CHECK(rc != 0);
  CHECK(read_inventory(inv).empty());
}

TEST_CASE("run with a bad config exits with code 1") {
  const fs::path cfg = fs::temp_directory_path() / "seld_test" / "bad.json";
  fs::create_directories(cfg.parent_path());
  std::ofstream(cfg) << R"({"version":1,"input_dir":"x","output_dir":"y",)"
                     << R"("acs":{"enabledd":true}})";
  CHECK(run_tool("run --config " + cfg.string()) == 1);
}
