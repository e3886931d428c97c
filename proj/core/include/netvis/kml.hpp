#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/lod.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

namespace netvis {

struct KmlOptions {
  /// Number of tree levels to emit, coarsest first. Defaults to all.
  std::optional<std::uint32_t> levels_to_emit;
  /// One threshold per emitted level. Empty selects 0, 128, 512 and then x4
  /// per further level.
  std::vector<std::uint32_t> min_lod_pixels;
  bool include_links = true;
  /// Lines between cluster centroids for each meta-edge.
  bool include_meta_edges = false;
  std::string document_name = "network";
};

std::vector<std::uint32_t> default_min_lod_pixels(std::uint32_t levels);

enum class KmlErrorCode { kNoGeoData, kNotGeoHierarchy, kInvalidOptions };

std::string_view to_string(KmlErrorCode code);

struct KmlError {
  KmlErrorCode code;
  std::string message;
};

/// KML 2.2 document with one Folder and Region per cluster. Devices without
/// coordinates are left out and counted in a comment.
Expected<std::string, KmlError> export_kml(const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                           const KmlOptions& options = {});

/// Injective mapping of an arbitrary id onto the XML NCName alphabet.
std::string kml_id(std::string_view prefix, std::string_view id);

/// "lon,lat,0" with six decimals.
std::string kml_coordinates(const GeoPoint& p);

}  // namespace netvis
