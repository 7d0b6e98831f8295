#pragma once

#include <filesystem>
#include <string>

namespace seld::testing {

// Two-item on-disk dataset (mic/, foa/, metadata/): 4 s items, one static
// solo event each (Female Speech at (40, 10), Piano at (-120, -30)), active
// frames 5..25. Rebuilt from scratch on every call.
std::filesystem::path build_mini_dataset(const std::string& tag);

}  // namespace seld::testing
