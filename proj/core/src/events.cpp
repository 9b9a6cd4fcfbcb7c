#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::ingest {
namespace {

using detail::json;
using detail::ordered_json;

std::optional<ActivityEvent> parse_record(std::string_view line) {
  json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (rec.is_discarded() || !rec.is_object()) return std::nullopt;

  ActivityEvent ev;
  const auto uid = rec.find("user_id");
  if (uid == rec.end()) return std::nullopt;
  if (uid->is_string()) {
    ev.user_id = uid->get<std::string>();
  } else if (uid->is_number_integer()) {
    ev.user_id = std::to_string(uid->get<long long>());
  } else {
    return std::nullopt;
  }
  if (ev.user_id.empty()) return std::nullopt;

  const auto ts = rec.find("ts");
  if (ts == rec.end() || !ts->is_string()) return std::nullopt;
  const auto parsed = parse_iso8601(ts->get_ref<const std::string&>());
  if (!parsed) return std::nullopt;
  ev.timestamp = *parsed;

  const auto lat = rec.find("lat");
  const auto lon = rec.find("lon");
  const bool has_lat = lat != rec.end() && !lat->is_null();
  const bool has_lon = lon != rec.end() && !lon->is_null();
  if (has_lat != has_lon) return std::nullopt;
  if (has_lat) {
    if (!lat->is_number() || !lon->is_number()) return std::nullopt;
    geo::GeoPoint p{lat->get<double>(), lon->get<double>()};
    if (!geo::is_valid(p)) return std::nullopt;
    ev.geo = p;
  }

  const auto text = rec.find("text");
  if (text != rec.end() && !text->is_null()) {
    if (!text->is_string()) return std::nullopt;
    ev.text = text->get<std::string>();
  }
  if (!ev.geo && !ev.text) return std::nullopt;
  return ev;
}

}  // namespace

EventLoadResult parse_events(std::string_view text) {
  EventLoadResult result;
  std::size_t line_no = 0;
  std::size_t non_blank = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    ++non_blank;
    if (auto ev = parse_record(line)) {
      result.events.push_back(std::move(*ev));
    } else {
      ++result.rejected;
      result.rejected_lines.push_back(line_no);
    }
    if (end == text.size()) break;
  }
  if (non_blank > 0 && 2 * result.rejected > non_blank) {
    fail(Errc::format, "events: " + std::to_string(result.rejected) + " of " +
                           std::to_string(non_blank) + " records are malformed");
  }
  return result;
}

EventLoadResult load_events(const std::string& path) {
  return parse_events(detail::read_text(path));
}

std::string format_events(std::span<const ActivityEvent> events) {
  std::string out;
  for (const auto& ev : events) {
    ordered_json rec;
    rec["user_id"] = ev.user_id;
    rec["ts"] = format_iso8601(ev.timestamp);
    if (ev.geo) {
      rec["lat"] = ev.geo->lat;
      rec["lon"] = ev.geo->lon;
    }
    if (ev.text) rec["text"] = *ev.text;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_events(const std::string& path, std::span<const ActivityEvent> events) {
  detail::write_text(path, format_events(events));
}

std::vector<UserProfile> load_profiles(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) fail(Errc::validation, "profiles: missing header row");
  const csv::Header header(rows[0]);
  const std::size_t uid = header.require("user_id");
  const std::size_t home = header.require("profile_home");
  std::vector<UserProfile> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max(uid, home)) {
      fail(Errc::format, "profiles: row " + std::to_string(r + 1) + " has too few columns");
    }
    if (row[uid].empty()) fail(Errc::validation, "profiles: empty user_id on row " + std::to_string(r + 1));
    UserProfile p{row[uid], std::nullopt};
    if (!row[home].empty()) p.profile_home = row[home];
    out.push_back(std::move(p));
  }
  return out;
}

void write_profiles(const std::string& path, std::span<const UserProfile> profiles) {
  std::ostringstream out;
  csv::write_row(out, {"user_id", "profile_home"});
  for (const auto& p : profiles) csv::write_row(out, {p.user_id, p.profile_home.value_or("")});
  detail::write_text(path, out.str());
}

SocialGraph load_graph(const std::string& path) {
  const std::string text = detail::read_text(path);
  SocialGraph graph;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("user") ||
        !rec["user"].is_string()) {
      fail(Errc::format, "graph: line " + std::to_string(line_no) + " is not a {user, followers} record");
    }
    auto& list = graph.followers[rec["user"].get<std::string>()];
    if (rec.contains("followers")) {
      if (!rec["followers"].is_array()) {
        fail(Errc::format, "graph: line " + std::to_string(line_no) + ": followers must be an array");
      }
      for (const auto& f : rec["followers"]) {
        if (!f.is_string()) fail(Errc::format, "graph: line " + std::to_string(line_no) + ": follower ids must be strings");
        list.push_back(f.get<std::string>());
      }
    }
  }
  return graph;
}

void write_graph(const std::string& path, const SocialGraph& graph) {
  std::string out;
  for (const auto& [user, followers] : graph.followers) {
    ordered_json rec;
    rec["user"] = user;
    rec["followers"] = followers;
    out += rec.dump();
    out += '\n';
  }
  detail::write_text(path, out);
}

}  // namespace vbrisk::ingest
