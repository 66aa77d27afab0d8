#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace srcn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat `key = value` file; '#' starts a comment, values may be quoted.
/// Throws ConfigError on malformed lines or repeated keys.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace srcn::cli
