#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <tuple>

#include "vbrisk/homeloc/clustering.hpp"

namespace vbrisk::homeloc {
namespace {

constexpr double kMetersPerDegree = geo::kEarthRadiusM * 3.14159265358979323846 / 180.0;

}  // namespace

std::vector<Cluster> dbscan_user(std::span<const ingest::ActivityEvent> events,
                                 const DbscanOptions& options) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].geo) order.push_back(i);
  }
  if (order.empty()) return {};
  const std::size_t min_pts = std::max<std::size_t>(options.min_pts, 1);

  // Canonical visiting order: coordinates, then time, then text.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = events[a];
    const auto& eb = events[b];
    return std::tie(ea.geo->lat, ea.geo->lon, ea.timestamp, ea.text, a) <
           std::tie(eb.geo->lat, eb.geo->lon, eb.timestamp, eb.text, b);
  });
  const std::size_t n = order.size();

  // Neighbour lists; sorted by latitude, so the scan stops once the latitude
  // gap alone exceeds eps.
  const double eps_deg = options.eps_m / kMetersPerDegree * (1.0 + 1e-9);
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbours[i].push_back(i);
    const auto& pi = *events[order[i]].geo;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& pj = *events[order[j]].geo;
      if (pj.lat - pi.lat > eps_deg) break;
      if (geo::haversine_m(pi, pj) <= options.eps_m) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
    }
  }
  for (auto& nb : neighbours) std::sort(nb.begin(), nb.end());

  constexpr long kUnvisited = -2;
  constexpr long kNoise = -1;
  std::vector<long> assignment(n, kUnvisited);
  long next_cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (assignment[p] != kUnvisited) continue;
    if (neighbours[p].size() < min_pts) {
      assignment[p] = kNoise;
      continue;
    }
    const long c = next_cluster++;
    assignment[p] = c;
    std::deque<std::size_t> seeds(neighbours[p].begin(), neighbours[p].end());
    while (!seeds.empty()) {
      const std::size_t q = seeds.front();
      seeds.pop_front();
      if (assignment[q] == kNoise) assignment[q] = c;  // border point
      if (assignment[q] != kUnvisited) continue;
      assignment[q] = c;
      if (neighbours[q].size() >= min_pts) {
        seeds.insert(seeds.end(), neighbours[q].begin(), neighbours[q].end());
      }
    }
  }

  std::vector<Cluster> clusters(static_cast<std::size_t>(next_cluster));
  const std::string& user = events[order[0]].user_id;
  for (std::size_t k = 0; k < n; ++k) {
    if (assignment[k] >= 0) clusters[static_cast<std::size_t>(assignment[k])].members.push_back(order[k]);
  }
  for (auto& c : clusters) {
    c.user_id = user;
    std::sort(c.members.begin(), c.members.end());
    double lat = 0.0, lon = 0.0;
    for (std::size_t m : c.members) {
      lat += events[m].geo->lat;
      lon += events[m].geo->lon;
    }
    c.centroid = {lat / static_cast<double>(c.members.size()),
                  lon / static_cast<double>(c.members.size())};
  }
  return clusters;
}

}  // namespace vbrisk::homeloc
