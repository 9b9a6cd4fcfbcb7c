#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace vbrisk::tool {

using ordered_json = nlohmann::ordered_json;

/// What a run needs to be reproduced: the subcommand, its resolved options,
/// the seeds and the contents of any config file it read.
struct RunMeta {
  std::string command;
  ordered_json args = ordered_json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::pair<std::string, std::string>> inputs;  // config path, text

  void add_config(const std::string& path);
};

/// Every option of `sub` with its parsed or default value.
ordered_json collect_args(const CLI::App& sub);

std::uint64_t fnv1a64(std::string_view data);

/// Writes `<out>/run_meta.json` (no timestamps, so identical runs give
/// identical files).
void write_run_meta(const std::filesystem::path& out, const RunMeta& meta);

void ensure_dir(const std::filesystem::path& dir);

}  // namespace vbrisk::tool
