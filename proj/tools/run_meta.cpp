#include "run_meta.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vbrisk/error.hpp"

namespace vbrisk::tool {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunMeta::add_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::config, "cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  inputs.emplace_back(path, buf.str());
}

ordered_json collect_args(const CLI::App& sub) {
  ordered_json args = ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr() || opt == sub.get_help_all_ptr()) continue;
    std::string name = opt->get_single_name();
    if (name.empty()) continue;
    const auto& results = opt->results();
    if (!results.empty()) {
      if (opt->get_expected_max() > 1) {
        args[name] = results;
      } else if (opt->get_type_size() == 0) {
        args[name] = true;
      } else {
        args[name] = results.back();
      }
    } else if (opt->get_type_size() == 0) {
      args[name] = false;
    } else {
      args[name] = opt->get_default_str();
    }
  }
  return args;
}

void write_run_meta(const std::filesystem::path& out, const RunMeta& meta) {
  ensure_dir(out);
  ordered_json j;
  j["tool"] = "vbrisk";
  j["version"] = VBRISK_VERSION;
  j["command"] = meta.command;
  j["args"] = meta.args;
  ordered_json seeds = ordered_json::object();
  for (const auto& [k, v] : meta.seeds) seeds[k] = v;
  j["seeds"] = seeds;
  // output location is not part of the configuration
  ordered_json hashed_args = meta.args;
  if (hashed_args.is_object()) hashed_args.erase("out");
  std::string hashed = meta.command + "\n" + hashed_args.dump() + "\n" + seeds.dump();
  ordered_json configs = ordered_json::array();
  for (const auto& [path, text] : meta.inputs) {
    hashed += "\n" + text;
    configs.push_back({{"path", path}, {"fnv1a64", fmt::format("{:016x}", fnv1a64(text))}});
  }
  j["configs"] = configs;
  j["config_hash"] = fmt::format("{:016x}", fnv1a64(hashed));
  std::ofstream f(out / "run_meta.json", std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io, "cannot write " + (out / "run_meta.json").string());
  f << j.dump(2) << "\n";
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace vbrisk::tool
