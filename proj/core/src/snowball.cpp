#include <deque>
#include <unordered_map>

#include "vbrisk/error.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::ingest {

KeepPredicate profile_home_in(std::span<const UserProfile> profiles, std::set<std::string> zones) {
  std::unordered_map<std::string, std::string> homes;
  for (const auto& p : profiles) {
    if (p.profile_home) homes[p.user_id] = *p.profile_home;
  }
  return [homes = std::move(homes), zones = std::move(zones)](const std::string& user) {
    const auto it = homes.find(user);
    return it != homes.end() && zones.count(it->second) != 0;
  };
}

std::set<std::string> snowball_sample(const SocialGraph& graph,
                                      std::span<const std::string> seeds,
                                      const KeepPredicate& keep) {
  for (const auto& s : seeds) {
    if (!graph.contains(s)) fail(Errc::config, "snowball: unknown seed user '" + s + "'");
    if (!keep(s)) fail(Errc::config, "snowball: seed user '" + s + "' does not satisfy the keep predicate");
  }

  // Kept users reachable through kept users; the output adds their followers.
  std::set<std::string> expanded;
  std::set<std::string> sample;
  std::deque<std::string> frontier(seeds.begin(), seeds.end());
  for (const auto& s : seeds) {
    expanded.insert(s);
    sample.insert(s);
  }
  while (!frontier.empty()) {
    const std::string user = std::move(frontier.front());
    frontier.pop_front();
    const auto it = graph.followers.find(user);
    if (it == graph.followers.end()) continue;
    for (const auto& follower : it->second) {
      if (follower == user) continue;
      sample.insert(follower);
      if (!expanded.count(follower) && keep(follower)) {
        expanded.insert(follower);
        frontier.push_back(follower);
      }
    }
  }
  return sample;
}

}  // namespace vbrisk::ingest
