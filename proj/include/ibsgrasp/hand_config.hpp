#pragma once

#include "ibsgrasp/hand_model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace ibsgrasp {

// Parses the hand description format (see docs/hand_config.md).
// Syntax problems throw ParseError with the offending line; structural
// problems throw ValidationError from the HandModel constructor.
HandModel load_hand(std::string_view config_text);
HandModel load_hand_file(const std::filesystem::path& path);

std::string serialize_hand(const HandModel& hand);

}  // namespace ibsgrasp
