#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace storygraph {

/// KEY=VALUE lines; `#` comments, an optional `export ` prefix and single or
/// double quotes are understood. Throws ParseError on a line without '='.
std::map<std::string, std::string> parse_env(std::string_view text);

/// Sets every variable of the file that is not already set in the process
/// environment. Returns how many were set; a missing file sets nothing.
std::size_t load_env_file(const std::filesystem::path& path);

}  // namespace storygraph
