#pragma once

#include <map>
#include <string>

#include "gevit/network.hpp"

namespace gevit {

// key=value lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies recognized keys onto a config; throws on unknown keys or
// unparsable values.
ModelConfig apply_config(ModelConfig base, const std::map<std::string, std::string>& kv);

}  // namespace gevit
