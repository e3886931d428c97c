#pragma once

#include <cstdint>
#include <optional>

#include "netvis/topology.hpp"

namespace netvis {

struct SynthParams {
  std::size_t devices = 1000;
  /// Defaults to 1.5 links per device.
  std::optional<std::size_t> links;
  std::uint64_t seed = 1;
  /// Share of devices given a management address / coordinates.
  double ip_fraction = 1.0;
  double geo_fraction = 1.0;
};

/// Deterministic synthetic topology: /24 subnets of up to 64 devices, eight
/// subnets per /16, /16s spread over at most 24 /8s, sites around the globe.
/// Links first form a spanning tree by preferential attachment, then extra
/// links are drawn 80/15/5 within subnet, within /16 and globally.
/// Always passes validate().
NetworkSnapshot generate_topology(const SynthParams& params);

}  // namespace netvis
