#include "netvis/json_codec.hpp"

#include <cmath>

namespace netvis {

using nlohmann::json;

namespace {

double finite_number(const json& j) {
  double v = j.get<double>();
  if (!std::isfinite(v)) throw CodecError("non-finite number");
  return v;
}

template <class T>
std::optional<T> optional_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_millis(std::int64_t ms) { return Timestamp{std::chrono::milliseconds{ms}}; }

void to_json(json& j, const Point& p) { j = json::array({p.x, p.y}); }

void from_json(const json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw CodecError("expected [x, y]");
  p.x = finite_number(j[0]);
  p.y = finite_number(j[1]);
}

void to_json(json& j, const LinkStats& s) {
  j = json::object();
  j["utilization_pct"] = s.utilization_pct ? json(*s.utilization_pct) : json(nullptr);
  j["last_updated"] = s.last_updated ? json(to_millis(*s.last_updated)) : json(nullptr);
}

void from_json(const json& j, LinkStats& s) {
  s.utilization_pct.reset();
  s.last_updated.reset();
  if (auto it = j.find("utilization_pct"); it != j.end() && !it->is_null()) {
    double v = finite_number(*it);
    if (v < 0 || v > 100) throw CodecError("utilization_pct out of range");
    s.utilization_pct = v;
  }
  if (auto ms = optional_field<std::int64_t>(j, "last_updated")) s.last_updated = from_millis(*ms);
}

void to_json(json& j, const EditOp& op) {
  j = json::object();
  j["seq"] = op.seq;
  j["kind"] = std::string(to_string(op.kind()));
  j["author"] = op.author;
  j["at"] = to_millis(op.at);
  json payload = json::object();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AddLink>) {
          payload["link"] = p.link;
          payload["a"] = p.a;
          payload["b"] = p.b;
        } else if constexpr (std::is_same_v<T, RemoveLink>) {
          payload["link"] = p.link;
        } else if constexpr (std::is_same_v<T, MoveNode>) {
          payload["device"] = p.device;
          payload["position"] = p.position;
        } else if constexpr (std::is_same_v<T, SetDeviceAttr>) {
          payload["device"] = p.device;
          payload["key"] = p.key;
          payload["value"] = p.value ? json(*p.value) : json(nullptr);
        } else if constexpr (std::is_same_v<T, SetVlanMembership>) {
          payload["vlan"] = p.vlan;
          payload["iface"] = p.iface;
          payload["member"] = p.member;
        } else {
          payload["device"] = p.device;
          payload["geo"] = p.geo ? json{{"lat", p.geo->lat}, {"lon", p.geo->lon}} : json(nullptr);
        }
      },
      op.payload);
  j["payload"] = std::move(payload);
}

void from_json(const json& j, EditOp& op) {
  if (!j.is_object()) throw CodecError("edit op must be an object");
  auto kind = parse_edit_kind(j.at("kind").get<std::string>());
  if (!kind) throw CodecError("unknown edit kind");
  op.seq = j.value("seq", std::uint64_t{0});
  op.author = j.value("author", std::string{});
  op.at = from_millis(j.value("at", std::int64_t{0}));
  const json& p = j.at("payload");
  if (!p.is_object()) throw CodecError("payload must be an object");
  switch (*kind) {
    case EditKind::kAddLink:
      op.payload = AddLink{LinkId(p.value("link", std::string{})), p.at("a").get<InterfaceId>(),
                           p.at("b").get<InterfaceId>()};
      break;
    case EditKind::kRemoveLink:
      op.payload = RemoveLink{p.at("link").get<LinkId>()};
      break;
    case EditKind::kMoveNode:
      op.payload = MoveNode{p.at("device").get<DeviceId>(), p.at("position").get<Point>()};
      break;
    case EditKind::kSetDeviceAttr:
      op.payload = SetDeviceAttr{p.at("device").get<DeviceId>(), p.at("key").get<std::string>(),
                                 optional_field<std::string>(p, "value")};
      break;
    case EditKind::kSetVlanMembership:
      op.payload = SetVlanMembership{p.at("vlan").get<VlanId>(), p.at("iface").get<InterfaceId>(),
                                     p.value("member", true)};
      break;
    case EditKind::kSetGeo: {
      std::optional<GeoPoint> geo;
      if (auto it = p.find("geo"); it != p.end() && !it->is_null()) {
        geo = GeoPoint{finite_number(it->at("lat")), finite_number(it->at("lon"))};
      }
      op.payload = SetGeo{p.at("device").get<DeviceId>(), geo};
      break;
    }
  }
}

void to_json(json& j, const Viewport& v) {
  j = json{{"center", v.center}, {"scale", v.scale}, {"pixel_size", json::array({v.pixel_width, v.pixel_height})}};
}

void from_json(const json& j, Viewport& v) {
  v.center = j.at("center").get<Point>();
  v.scale = finite_number(j.at("scale"));
  const json& size = j.at("pixel_size");
  if (!size.is_array() || size.size() != 2) throw CodecError("pixel_size must be [w, h]");
  v.pixel_width = finite_number(size[0]);
  v.pixel_height = finite_number(size[1]);
}

void to_json(json& j, const GroupingConfig& c) {
  j = json{{"method", std::string(to_string(c.method))},
           {"levels", c.levels},
           {"max_render_elements", c.max_render_elements},
           {"expand_policy", std::string(to_string(c.expand_policy))},
           {"auto_expand_px", c.auto_expand_px}};
}

void from_json(const json& j, GroupingConfig& c) {
  auto method = parse_grouping_method(j.at("method").get<std::string>());
  if (!method) throw CodecError("unknown grouping method");
  c = *method == GroupingMethod::kGeo ? GroupingConfig::geo_defaults() : GroupingConfig::ip_prefix_defaults();
  if (auto it = j.find("levels"); it != j.end()) {
    c.levels.clear();
    for (const auto& v : *it) c.levels.push_back(finite_number(v));
  }
  if (auto it = j.find("max_render_elements"); it != j.end()) c.max_render_elements = it->get<std::uint32_t>();
  if (auto it = j.find("expand_policy"); it != j.end()) {
    auto policy = parse_expand_policy(it->get<std::string>());
    if (!policy) throw CodecError("unknown expand policy");
    c.expand_policy = *policy;
  }
  if (auto it = j.find("auto_expand_px"); it != j.end()) c.auto_expand_px = finite_number(*it);
}

void to_json(json& j, const MetaEdge& e) {
  j = json{{"a", e.a}, {"b", e.b}, {"multiplicity", e.multiplicity}, {"sample_links", e.sample_links}};
}

void from_json(const json& j, MetaEdge& e) {
  e.a = j.at("a").get<ClusterId>();
  e.b = j.at("b").get<ClusterId>();
  e.multiplicity = j.at("multiplicity").get<std::uint64_t>();
  e.sample_links = j.value("sample_links", std::vector<LinkId>{});
}

void to_json(json& j, const RenderCluster& c) {
  j = json{{"id", c.id},
           {"level", c.level},
           {"position", c.position},
           {"device_count", c.device_count},
           {"expanded", c.expanded},
           {"label", c.label}};
}

void from_json(const json& j, RenderCluster& c) {
  c.id = j.at("id").get<ClusterId>();
  c.level = j.at("level").get<std::uint32_t>();
  c.position = j.at("position").get<Point>();
  c.device_count = j.at("device_count").get<std::uint64_t>();
  c.expanded = j.value("expanded", false);
  c.label = j.value("label", std::string{});
}

void to_json(json& j, const RenderDevice& d) {
  j = json{{"id", d.id}, {"position", d.position}, {"kind", std::string(to_string(d.kind))}, {"name", d.name}};
}

void from_json(const json& j, RenderDevice& d) {
  d.id = j.at("id").get<DeviceId>();
  d.position = j.at("position").get<Point>();
  auto kind = parse_device_kind(j.at("kind").get<std::string>());
  if (!kind) throw CodecError("unknown device kind");
  d.kind = *kind;
  d.name = j.value("name", std::string{});
}

void to_json(json& j, const RenderEdge& e) { j = json{{"id", e.id}, {"a", e.a}, {"b", e.b}}; }

void from_json(const json& j, RenderEdge& e) {
  e.id = j.at("id").get<LinkId>();
  e.a = j.at("a").get<DeviceId>();
  e.b = j.at("b").get<DeviceId>();
}

void to_json(json& j, const RenderSet& s) {
  j = json{{"clusters", s.clusters},
           {"devices", s.devices},
           {"edges", s.edges},
           {"meta_edges", s.meta_edges},
           {"snapshot_version", s.snapshot_version},
           {"layout_version", s.layout_version}};
}

void from_json(const json& j, RenderSet& s) {
  s.clusters = j.at("clusters").get<std::vector<RenderCluster>>();
  s.devices = j.at("devices").get<std::vector<RenderDevice>>();
  s.edges = j.at("edges").get<std::vector<RenderEdge>>();
  s.meta_edges = j.at("meta_edges").get<std::vector<MetaEdge>>();
  s.snapshot_version = j.at("snapshot_version").get<std::uint64_t>();
  s.layout_version = j.at("layout_version").get<std::uint64_t>();
}

void to_json(json& j, const RenderDelta& d) {
  json removed_meta = json::array();
  for (const auto& key : d.removed_meta_edges) removed_meta.push_back(json::array({key.a, key.b}));
  j = json{{"from_snapshot_version", d.from_snapshot_version},
           {"snapshot_version", d.snapshot_version},
           {"from_layout_version", d.from_layout_version},
           {"layout_version", d.layout_version},
           {"added",
            {{"clusters", d.added_clusters},
             {"devices", d.added_devices},
             {"edges", d.added_edges},
             {"meta_edges", d.added_meta_edges}}},
           {"removed",
            {{"clusters", d.removed_clusters},
             {"devices", d.removed_devices},
             {"edges", d.removed_edges},
             {"meta_edges", std::move(removed_meta)}}},
           {"moved",
            {{"clusters", d.moved_clusters},
             {"devices", d.moved_devices},
             {"edges", d.moved_edges},
             {"meta_edges", d.moved_meta_edges}}}};
}

void from_json(const json& j, RenderDelta& d) {
  d.from_snapshot_version = j.at("from_snapshot_version").get<std::uint64_t>();
  d.snapshot_version = j.at("snapshot_version").get<std::uint64_t>();
  d.from_layout_version = j.at("from_layout_version").get<std::uint64_t>();
  d.layout_version = j.at("layout_version").get<std::uint64_t>();
  const json& added = j.at("added");
  d.added_clusters = added.at("clusters").get<std::vector<RenderCluster>>();
  d.added_devices = added.at("devices").get<std::vector<RenderDevice>>();
  d.added_edges = added.at("edges").get<std::vector<RenderEdge>>();
  d.added_meta_edges = added.at("meta_edges").get<std::vector<MetaEdge>>();
  const json& removed = j.at("removed");
  d.removed_clusters = removed.at("clusters").get<std::vector<ClusterId>>();
  d.removed_devices = removed.at("devices").get<std::vector<DeviceId>>();
  d.removed_edges = removed.at("edges").get<std::vector<LinkId>>();
  d.removed_meta_edges.clear();
  for (const auto& pair : removed.at("meta_edges")) {
    if (!pair.is_array() || pair.size() != 2) throw CodecError("meta-edge key must be [a, b]");
    d.removed_meta_edges.push_back({pair[0].get<ClusterId>(), pair[1].get<ClusterId>()});
  }
  const json& moved = j.at("moved");
  d.moved_clusters = moved.at("clusters").get<std::vector<RenderCluster>>();
  d.moved_devices = moved.at("devices").get<std::vector<RenderDevice>>();
  d.moved_edges = moved.at("edges").get<std::vector<RenderEdge>>();
  d.moved_meta_edges = moved.at("meta_edges").get<std::vector<MetaEdge>>();
}

std::string encode_edit(const EditOp& op) { return json(op).dump(); }

Expected<EditOp, std::string> decode_edit(std::string_view text) {
  try {
    return json::parse(text).get<EditOp>();
  } catch (const std::exception& e) {
    return unexpected(std::string(e.what()));
  }
}

}  // namespace netvis
