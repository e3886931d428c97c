#include "netvis/kml.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace netvis {

std::string_view to_string(KmlErrorCode code) {
  switch (code) {
    case KmlErrorCode::kNoGeoData: return "NoGeoData";
    case KmlErrorCode::kNotGeoHierarchy: return "NotGeoHierarchy";
    case KmlErrorCode::kInvalidOptions: return "InvalidOptions";
  }
  return "Unknown";
}

std::vector<std::uint32_t> default_min_lod_pixels(std::uint32_t levels) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < levels; ++i) {
    if (i == 0) {
      out.push_back(0);
    } else if (i == 1) {
      out.push_back(128);
    } else {
      out.push_back(out.back() * 4);
    }
  }
  return out;
}

std::string kml_id(std::string_view prefix, std::string_view id) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(prefix);
  out += '-';
  for (unsigned char c : id) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-') {
      out += static_cast<char>(c);
    } else {
      out += '_';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double north = -90, south = 90, east = -180, west = 180;
  double lat_sum = 0, lon_sum = 0;
  std::uint64_t count = 0;

  void add(const GeoPoint& p) {
    north = std::max(north, p.lat);
    south = std::min(south, p.lat);
    east = std::max(east, p.lon);
    west = std::min(west, p.lon);
    lat_sum += p.lat;
    lon_sum += p.lon;
    ++count;
  }
  GeoPoint centroid() const {
    return {lat_sum / static_cast<double>(count), lon_sum / static_cast<double>(count)};
  }
};

constexpr double kPadFraction = 0.05;
constexpr double kMinPad = 1e-4;

class Writer {
 public:
  Writer(const NetworkSnapshot& snapshot, const ClusterTree& tree, const KmlOptions& options, std::uint32_t levels,
         std::vector<std::uint32_t> lod)
      : snapshot_(snapshot), tree_(tree), options_(options), levels_(levels), lod_(std::move(lod)) {}

  Expected<std::string, KmlError> run() {
    const auto& devices = tree_.devices();
    geo_.assign(devices.size(), nullptr);
    std::uint64_t geo_count = 0;
    for (std::uint32_t d = 0; d < devices.size(); ++d) {
      const Device* dev = snapshot_.find(devices[d]);
      if (dev && dev->geo && dev->geo->in_range()) {
        geo_[d] = dev;
        ++geo_count;
      }
    }
    if (geo_count == 0) return unexpected(KmlError{KmlErrorCode::kNoGeoData, "no device carries coordinates"});

    boxes_.assign(tree_.clusters().size(), Box{});
    const std::uint32_t deepest = levels_ - 1;
    placed_in_.resize(tree_.clusters().size());
    for (std::uint32_t d = 0; d < devices.size(); ++d) {
      if (!geo_[d]) continue;
      for (std::uint32_t c = tree_.leaf_of(d); c != kNoCluster; c = tree_.cluster(c).parent) {
        boxes_[c].add(*geo_[d]->geo);
        if (tree_.cluster(c).level == deepest) placed_in_[c].push_back(d);
      }
    }
    if (options_.include_links) collect_links();
    if (options_.include_meta_edges) collect_meta_edges();

    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n"
         << "<Document id=\"document\">\n"
         << "<name>" << escape(options_.document_name) << "</name>\n";
    const std::uint64_t omitted = devices.size() - geo_count;
    if (omitted > 0) out_ << "<!-- " << omitted << " devices without coordinates omitted -->\n";
    for (auto c : tree_.level(0)) folder(c, 1);
    out_ << "</Document>\n</kml>\n";
    return out_.str();
  }

 private:
  void collect_links() {
    lines_.resize(tree_.devices().size());
    for (const auto& [id, link] : snapshot_.links) {
      auto a = snapshot_.owner(link.a);
      auto b = snapshot_.owner(link.b);
      if (!a || !b) continue;
      auto da = tree_.device_ordinal(*a);
      auto db = tree_.device_ordinal(*b);
      if (!da || !db || !geo_[*da] || !geo_[*db]) continue;
      // Drawn by the device owning the canonical first interface.
      lines_[*da].push_back(*db);
    }
  }

  void collect_meta_edges() {
    meta_lines_.resize(tree_.clusters().size());
    for (std::uint32_t level = 0; level < levels_; ++level) {
      for (const auto& edge : compute_meta_edges(snapshot_, tree_, level)) {
        auto a = tree_.find(edge.a);
        auto b = tree_.find(edge.b);
        if (!a || !b || boxes_[*a].count == 0 || boxes_[*b].count == 0) continue;
        meta_lines_[*a].push_back(*b);
      }
    }
  }

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) out_ << "  ";
  }

  void line_string(const GeoPoint& a, const GeoPoint& b, int depth) {
    indent(depth);
    out_ << "<LineString><coordinates>" << kml_coordinates(a) << ' ' << kml_coordinates(b)
         << "</coordinates></LineString>\n";
  }

  void folder(std::uint32_t c, int depth) {
    const Cluster& cluster = tree_.cluster(c);
    const Box& box = boxes_[c];
    if (box.count == 0 || cluster.level >= levels_) return;
    double pad_lat = std::max(kPadFraction * (box.north - box.south), kMinPad);
    double pad_lon = std::max(kPadFraction * (box.east - box.west), kMinPad);
    GeoPoint centroid = box.centroid();

    indent(depth);
    out_ << "<Folder id=\"" << kml_id("f", cluster.id.str()) << "\">\n";
    indent(depth + 1);
    out_ << "<name>" << escape(cluster.label) << "</name>\n";
    indent(depth + 1);
    out_ << "<Region><LatLonAltBox>"
         << "<north>" << fixed6(std::min(90.0, box.north + pad_lat)) << "</north>"
         << "<south>" << fixed6(std::max(-90.0, box.south - pad_lat)) << "</south>"
         << "<east>" << fixed6(std::min(180.0, box.east + pad_lon)) << "</east>"
         << "<west>" << fixed6(std::max(-180.0, box.west - pad_lon)) << "</west>"
         << "</LatLonAltBox><Lod><minLodPixels>" << lod_[cluster.level]
         << "</minLodPixels><maxLodPixels>-1</maxLodPixels></Lod></Region>\n";

    indent(depth + 1);
    out_ << "<Placemark id=\"" << kml_id("c", cluster.id.str()) << "\">\n";
    indent(depth + 2);
    out_ << "<name>" << escape(cluster.label) << " (" << box.count << " devices)</name>\n";
    const bool meta = !meta_lines_.empty() && !meta_lines_[c].empty();
    if (meta) {
      indent(depth + 2);
      out_ << "<MultiGeometry>\n";
    }
    indent(depth + (meta ? 3 : 2));
    out_ << "<Point><coordinates>" << kml_coordinates(centroid) << "</coordinates></Point>\n";
    if (meta) {
      for (auto other : meta_lines_[c]) line_string(centroid, boxes_[other].centroid(), depth + 3);
      indent(depth + 2);
      out_ << "</MultiGeometry>\n";
    }
    indent(depth + 1);
    out_ << "</Placemark>\n";

    if (cluster.level + 1 < levels_) {
      for (auto child : cluster.children) folder(child, depth + 1);
    } else {
      for (auto d : placed_in_[c]) device(d, depth + 1);
    }
    indent(depth);
    out_ << "</Folder>\n";
  }

  void device(std::uint32_t d, int depth) {
    const Device& dev = *geo_[d];
    const bool links = !lines_.empty() && !lines_[d].empty();
    indent(depth);
    out_ << "<Placemark id=\"" << kml_id("d", dev.id.str()) << "\">\n";
    indent(depth + 1);
    out_ << "<name>" << escape(dev.name) << "</name>\n";
    indent(depth + 1);
    out_ << "<description>" << escape(std::string(to_string(dev.kind)));
    if (dev.mgmt_ip) out_ << ' ' << dev.mgmt_ip->to_string();
    if (dev.isp_tag) out_ << ' ' << escape(*dev.isp_tag);
    out_ << "</description>\n";
    if (links) {
      indent(depth + 1);
      out_ << "<MultiGeometry>\n";
    }
    indent(depth + (links ? 2 : 1));
    out_ << "<Point><coordinates>" << kml_coordinates(*dev.geo) << "</coordinates></Point>\n";
    if (links) {
      for (auto other : lines_[d]) line_string(*dev.geo, *geo_[other]->geo, depth + 2);
      indent(depth + 1);
      out_ << "</MultiGeometry>\n";
    }
    indent(depth);
    out_ << "</Placemark>\n";
  }

  const NetworkSnapshot& snapshot_;
  const ClusterTree& tree_;
  const KmlOptions& options_;
  std::uint32_t levels_;
  std::vector<std::uint32_t> lod_;
  std::vector<const Device*> geo_;
  std::vector<Box> boxes_;
  std::vector<std::vector<std::uint32_t>> placed_in_;
  std::vector<std::vector<std::uint32_t>> lines_;
  std::vector<std::vector<std::uint32_t>> meta_lines_;
  std::ostringstream out_;
};

}  // namespace

std::string kml_coordinates(const GeoPoint& p) { return fixed6(p.lon) + "," + fixed6(p.lat) + ",0"; }

Expected<std::string, KmlError> export_kml(const NetworkSnapshot& snapshot, const ClusterTree& tree,
                                           const KmlOptions& options) {
  if (tree.config().method != GroupingMethod::kGeo) {
    return unexpected(KmlError{KmlErrorCode::kNotGeoHierarchy, "KML export needs a geo hierarchy"});
  }
  if (tree.level_count() == 0) return unexpected(KmlError{KmlErrorCode::kInvalidOptions, "tree has no levels"});
  std::uint32_t levels = options.levels_to_emit.value_or(tree.level_count());
  if (levels == 0 || levels > tree.level_count()) {
    return unexpected(KmlError{KmlErrorCode::kInvalidOptions,
                               "levels_to_emit must lie in [1, " + std::to_string(tree.level_count()) + "]"});
  }
  std::vector<std::uint32_t> lod = options.min_lod_pixels.empty() ? default_min_lod_pixels(levels)
                                                                    : options.min_lod_pixels;
  if (lod.size() != levels) {
    return unexpected(KmlError{KmlErrorCode::kInvalidOptions, "min_lod_pixels needs one entry per emitted level"});
  }
  return Writer(snapshot, tree, options, levels, std::move(lod)).run();
}

}  // namespace netvis
