#pragma once

#include <string>

#include "support.hpp"
#include "vbrisk/synth.hpp"

namespace testing_support {

/// Generator settings over the G1 geometry with a custom user count and seed.
inline vbrisk::synth::SynthConfig g1_like(std::uint64_t seed, std::size_t users) {
  const std::string json = R"({
    "n_users": )" + std::to_string(users) + R"(, "seed": )" + std::to_string(seed) + R"(,
    "home_rate": 0.6, "source_zone": "PR",
    "zones": "g1/zones.geojson", "neighborhoods": "g1/neighborhoods.geojson",
    "neighborhood_zone": "MIAMI-DADE",
    "profile_labels": {"MIAMI-DADE": "FL", "ORANGE": "FL", "HILLSBOROUGH": "FL"}})";
  return vbrisk::synth::synth_config_from_json(json, fixture("").string());
}

}  // namespace testing_support
