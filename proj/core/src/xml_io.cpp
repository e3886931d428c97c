#include "netvis/xml_io.hpp"

#include <expat.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

namespace netvis {

std::string format_decimal(double value, int min_decimals) {
  char buf[512];
  auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  std::string out(buf, result.ptr);
  if (min_decimals > 0) {
    auto dot = out.find('.');
    int have = 0;
    if (dot == std::string::npos) {
      out += '.';
    } else {
      have = static_cast<int>(out.size() - dot - 1);
    }
    if (have < min_decimals) out.append(static_cast<std::size_t>(min_decimals - have), '0');
  }
  return out;
}

namespace {

// --- value parsing -------------------------------------------------------

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

template <class Int>
std::optional<Int> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  Int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

// --- parser state ----------------------------------------------------------

enum class Element { kNetwork, kDevices, kDevice, kIface, kAttr, kPin, kLinks, kLink, kVlans, kVlan, kMember };

struct Position {
  std::uint64_t line = 0;
  std::uint64_t column = 0;
};

struct PendingLink {
  Link link;
  Position at;
};

struct PendingMember {
  VlanId vlan;
  InterfaceId iface;
  Position at;
};

class TopologyReader {
 public:
  TopologyReader() : parser_(XML_ParserCreate("UTF-8")) {
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &TopologyReader::on_start, &TopologyReader::on_end);
    XML_SetXmlDeclHandler(parser_, &TopologyReader::on_decl);
    XML_SetEntityDeclHandler(parser_, &TopologyReader::on_entity);
  }
  ~TopologyReader() { XML_ParserFree(parser_); }
  TopologyReader(const TopologyReader&) = delete;
  TopologyReader& operator=(const TopologyReader&) = delete;

  ParseReport run(std::string_view bytes) {
    constexpr std::size_t kChunk = std::size_t{1} << 28;
    bool ok = true;
    std::size_t offset = 0;
    do {
      std::size_t n = std::min(kChunk, bytes.size() - offset);
      bool last = offset + n == bytes.size();
      if (XML_Parse(parser_, bytes.data() + offset, static_cast<int>(n), last) == XML_STATUS_ERROR) {
        ok = false;
        break;
      }
      offset += n;
    } while (offset < bytes.size());

    if (!ok && !stopped_) {
      error(here(), std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser_)));
    }
    if (ok && !saw_root_) error(here(), "document has no <network> element");
    if (report_.errors.empty()) resolve();
    if (report_.errors.empty()) report_.snapshot = std::move(snapshot_);
    return std::move(report_);
  }

 private:
  static void XMLCALL on_decl(void* self, const XML_Char*, const XML_Char* encoding, int) {
    auto* reader = static_cast<TopologyReader*>(self);
    if (encoding && !iequals(encoding, "UTF-8")) {
      reader->error(reader->here(), std::string("unsupported encoding '") + encoding + "', expected UTF-8");
      reader->stop();
    }
  }

  static void XMLCALL on_entity(void* self, const XML_Char* name, int, const XML_Char*, int, const XML_Char*,
                                const XML_Char*, const XML_Char*, const XML_Char*) {
    auto* reader = static_cast<TopologyReader*>(self);
    reader->error(reader->here(), std::string("entity declaration '") + name + "' is not allowed");
    reader->stop();
  }

  static void XMLCALL on_start(void* self, const XML_Char* name, const XML_Char** atts) {
    static_cast<TopologyReader*>(self)->start(name, atts);
  }
  static void XMLCALL on_end(void* self, const XML_Char*) { static_cast<TopologyReader*>(self)->end(); }

  Position here() const {
    return {XML_GetCurrentLineNumber(parser_), XML_GetCurrentColumnNumber(parser_) + 1};
  }
  void error(Position at, std::string message) {
    report_.errors.push_back({at.line, at.column, std::move(message)});
  }
  void warn(Position at, std::string message) {
    report_.warnings.push_back({at.line, at.column, std::move(message)});
  }
  void stop() {
    stopped_ = true;
    XML_StopParser(parser_, XML_FALSE);
  }

  std::optional<Element> child_kind(std::string_view name) const {
    if (stack_.empty()) return name == "network" ? std::optional{Element::kNetwork} : std::nullopt;
    switch (stack_.back()) {
      case Element::kNetwork:
        if (name == "devices") return Element::kDevices;
        if (name == "links") return Element::kLinks;
        if (name == "vlans") return Element::kVlans;
        break;
      case Element::kDevices:
        if (name == "device") return Element::kDevice;
        break;
      case Element::kDevice:
        if (name == "iface") return Element::kIface;
        if (name == "attr") return Element::kAttr;
        if (name == "pin") return Element::kPin;
        break;
      case Element::kLinks:
        if (name == "link") return Element::kLink;
        break;
      case Element::kVlans:
        if (name == "vlan") return Element::kVlan;
        break;
      case Element::kVlan:
        if (name == "member") return Element::kMember;
        break;
      default:
        break;
    }
    return std::nullopt;
  }

  // Attribute access with unknown-attribute warnings.
  class Attributes {
   public:
    Attributes(TopologyReader& reader, std::string_view element, const XML_Char** atts,
               std::initializer_list<std::string_view> known)
        : reader_(reader), element_(element) {
      for (int i = 0; atts[i]; i += 2) {
        std::string_view key = atts[i];
        if (std::find(known.begin(), known.end(), key) == known.end()) {
          reader.warn(reader.here(), "unknown attribute '" + std::string(key) + "' on <" +
                                         std::string(element) + "> ignored");
          continue;
        }
        values_.emplace(key, atts[i + 1]);
      }
    }

    std::optional<std::string_view> get(std::string_view key) const {
      auto it = values_.find(key);
      if (it == values_.end()) return std::nullopt;
      return it->second;
    }

    std::optional<std::string_view> required(std::string_view key) {
      auto value = get(key);
      if (!value) {
        reader_.error(reader_.here(), "<" + std::string(element_) + "> is missing required attribute '" +
                                          std::string(key) + "'");
        failed_ = true;
      } else if (value->empty() && key == "id") {
        reader_.error(reader_.here(), "<" + std::string(element_) + "> has an empty id");
        failed_ = true;
        return std::nullopt;
      }
      return value;
    }

    template <class T, class Parse>
    std::optional<T> number(std::string_view key, Parse&& parse, const char* what) {
      auto value = get(key);
      if (!value) return std::nullopt;
      auto parsed = parse(*value);
      if (!parsed) {
        reader_.error(reader_.here(), "attribute '" + std::string(key) + "' on <" + std::string(element_) +
                                          "> is not " + what + ": '" + std::string(*value) + "'");
        failed_ = true;
      }
      return parsed;
    }

    void reject(std::string message) {
      reader_.error(reader_.here(), std::move(message));
      failed_ = true;
    }
    bool failed() const { return failed_; }

   private:
    TopologyReader& reader_;
    std::string_view element_;
    std::map<std::string_view, std::string_view> values_;
    bool failed_ = false;
  };

  void start(const XML_Char* raw_name, const XML_Char** atts) {
    std::string_view name = raw_name;
    if (skip_depth_ > 0) {
      ++skip_depth_;
      return;
    }
    auto kind = child_kind(name);
    if (!kind) {
      if (stack_.empty()) {
        error(here(), "root element must be <network>, found <" + std::string(name) + ">");
        stop();
        return;
      }
      warn(here(), "unknown element <" + std::string(name) + "> ignored");
      skip_depth_ = 1;
      return;
    }
    stack_.push_back(*kind);
    switch (*kind) {
      case Element::kNetwork: start_network(atts); break;
      case Element::kDevice: start_device(atts); break;
      case Element::kIface: start_iface(atts); break;
      case Element::kAttr: start_attr(atts); break;
      case Element::kPin: start_pin(atts); break;
      case Element::kLink: start_link(atts); break;
      case Element::kVlan: start_vlan(atts); break;
      case Element::kMember: start_member(atts); break;
      case Element::kDevices:
      case Element::kLinks:
      case Element::kVlans: Attributes(*this, name, atts, {}); break;
    }
  }

  void end() {
    if (skip_depth_ > 0) {
      --skip_depth_;
      return;
    }
    if (stack_.empty()) return;
    if (stack_.back() == Element::kDevice) current_device_.reset();
    if (stack_.back() == Element::kVlan) current_vlan_.reset();
    stack_.pop_back();
  }

  void start_network(const XML_Char** atts) {
    saw_root_ = true;
    Attributes attrs(*this, "network", atts, {"version"});
    if (auto version = attrs.get("version"); version && *version != "1") {
      attrs.reject("unsupported document version '" + std::string(*version) + "'");
    }
  }

  void start_device(const XML_Char** atts) {
    Attributes attrs(*this, "device", atts, {"id", "name", "kind", "mgmtIp", "lat", "lon", "isp"});
    auto id = attrs.required("id");
    auto name = attrs.required("name");
    auto kind_text = attrs.required("kind");
    Device device;
    if (kind_text) {
      if (auto kind = parse_device_kind(*kind_text)) {
        device.kind = *kind;
      } else {
        attrs.reject("unknown device kind '" + std::string(*kind_text) + "'");
      }
    }
    device.mgmt_ip = attrs.number<Ipv4Address>("mgmtIp", &Ipv4Address::parse, "an IPv4 address");
    auto lat = attrs.number<double>("lat", parse_double, "a number");
    auto lon = attrs.number<double>("lon", parse_double, "a number");
    if (lat.has_value() != lon.has_value()) {
      if (!attrs.failed()) attrs.reject("lat and lon must be given together");
    } else if (lat && lon) {
      device.geo = GeoPoint{*lat, *lon};
      if (!device.geo->in_range()) attrs.reject("GeoOutOfRange: lat/lon outside [-90,90]x[-180,180]");
    }
    if (auto isp = attrs.get("isp")) device.isp_tag = std::string(*isp);
    if (!id || !name || attrs.failed()) return;

    device.id = DeviceId(*id);
    device.name = std::string(*name);
    if (snapshot_.devices.contains(device.id)) {
      error(here(), "duplicate device id '" + device.id.str() + "'");
      return;
    }
    current_device_ = device.id;
    snapshot_.devices.emplace(device.id, std::move(device));
  }

  Device* current_device() {
    if (!current_device_) return nullptr;
    return &snapshot_.devices.at(*current_device_);
  }

  void start_iface(const XML_Char** atts) {
    Attributes attrs(*this, "iface", atts, {"id", "name", "ip", "speedBps"});
    auto id = attrs.required("id");
    auto name = attrs.required("name");
    Interface iface;
    iface.ip = attrs.number<Ipv4Prefix>("ip", &Ipv4Prefix::parse, "an IPv4 address/prefix");
    iface.speed_bps = attrs.number<std::uint64_t>("speedBps", parse_int<std::uint64_t>, "an unsigned integer");
    Device* owner = current_device();
    if (!id || !name || attrs.failed() || !owner) return;
    iface.id = InterfaceId(*id);
    iface.name = std::string(*name);
    iface.device = owner->id;
    if (snapshot_.interfaces.contains(iface.id)) {
      error(here(), "duplicate interface id '" + iface.id.str() + "'");
      return;
    }
    owner->interfaces.push_back(iface.id);
    snapshot_.interfaces.emplace(iface.id, std::move(iface));
  }

  void start_attr(const XML_Char** atts) {
    Attributes attrs(*this, "attr", atts, {"key", "value"});
    auto key = attrs.required("key");
    auto value = attrs.required("value");
    Device* owner = current_device();
    if (!key || !value || !owner) return;
    if (key->empty()) {
      error(here(), "<attr> has an empty key");
      return;
    }
    if (!owner->attributes.emplace(std::string(*key), std::string(*value)).second) {
      error(here(), "duplicate attribute key '" + std::string(*key) + "' on device " + owner->id.str());
    }
  }

  void start_pin(const XML_Char** atts) {
    Attributes attrs(*this, "pin", atts, {"x", "y"});
    auto x_text = attrs.required("x");
    auto y_text = attrs.required("y");
    auto x = attrs.number<double>("x", parse_double, "a finite number");
    auto y = attrs.number<double>("y", parse_double, "a finite number");
    Device* owner = current_device();
    if (!x_text || !y_text || !x || !y || !owner) return;
    if (snapshot_.pins.contains(owner->id)) {
      error(here(), "device " + owner->id.str() + " has more than one <pin>");
      return;
    }
    snapshot_.pins.emplace(owner->id, Point{*x, *y});
  }

  void start_link(const XML_Char** atts) {
    Attributes attrs(*this, "link", atts, {"id", "a", "b", "utilizationPct", "lastUpdated"});
    auto id = attrs.required("id");
    auto a = attrs.required("a");
    auto b = attrs.required("b");
    LinkStats stats;
    stats.utilization_pct = attrs.number<double>("utilizationPct", parse_double, "a number");
    if (stats.utilization_pct && !(*stats.utilization_pct >= 0.0 && *stats.utilization_pct <= 100.0)) {
      attrs.reject("utilizationPct outside [0,100]");
    }
    if (auto ms = attrs.number<std::int64_t>("lastUpdated", parse_int<std::int64_t>, "an integer")) {
      stats.last_updated = Timestamp{std::chrono::milliseconds{*ms}};
    }
    if (!id || !a || !b || attrs.failed()) return;
    LinkId link_id(*id);
    if (!link_ids_.insert(link_id).second) {
      error(here(), "duplicate link id '" + link_id.str() + "'");
      return;
    }
    links_.push_back({make_link(link_id, InterfaceId(*a), InterfaceId(*b), stats), here()});
  }

  void start_vlan(const XML_Char** atts) {
    Attributes attrs(*this, "vlan", atts, {"id", "tag", "name"});
    auto id = attrs.required("id");
    auto tag_text = attrs.required("tag");
    auto tag = attrs.number<int>("tag", parse_int<int>, "an integer");
    if (tag && (*tag < 1 || *tag > 4094)) attrs.reject("vlan tag " + std::to_string(*tag) + " outside [1,4094]");
    if (!id || !tag_text || !tag || attrs.failed()) return;
    Vlan vlan;
    vlan.id = VlanId(*id);
    vlan.tag = static_cast<std::uint16_t>(*tag);
    if (auto name = attrs.get("name")) vlan.name = std::string(*name);
    if (snapshot_.vlans.contains(vlan.id)) {
      error(here(), "duplicate vlan id '" + vlan.id.str() + "'");
      return;
    }
    current_vlan_ = vlan.id;
    snapshot_.vlans.emplace(vlan.id, std::move(vlan));
  }

  void start_member(const XML_Char** atts) {
    Attributes attrs(*this, "member", atts, {"iface"});
    auto iface = attrs.required("iface");
    if (!iface || !current_vlan_) return;
    members_.push_back({*current_vlan_, InterfaceId(*iface), here()});
  }

  // Cross-references are resolved after the whole document is read so that
  // sections may appear in any order.
  void resolve() {
    std::set<std::pair<InterfaceId, InterfaceId>> pairs;
    for (auto& pending : links_) {
      const Link& link = pending.link;
      const Interface* a = snapshot_.find(link.a);
      const Interface* b = snapshot_.find(link.b);
      if (!a || !b) {
        const InterfaceId& missing = a ? link.b : link.a;
        error(pending.at,
              "DanglingReference: link " + link.id.str() + " endpoint '" + missing.str() + "' is undefined");
        continue;
      }
      if (link.a == link.b || a->device == b->device) {
        error(pending.at, "SelfLoop: link " + link.id.str() + " connects device " + a->device.str() + " to itself");
        continue;
      }
      if (!pairs.insert({link.a, link.b}).second) {
        error(pending.at, "DuplicateLink: link " + link.id.str() + " repeats an existing interface pair");
        continue;
      }
      snapshot_.links.emplace(link.id, link);
    }
    for (auto& member : members_) {
      if (!snapshot_.find(member.iface)) {
        error(member.at, "DanglingReference: vlan " + member.vlan.str() + " member '" + member.iface.str() +
                             "' is undefined");
        continue;
      }
      snapshot_.vlans.at(member.vlan).members.insert(member.iface);
    }
    if (!report_.errors.empty()) return;
    for (const auto& violation : validate(snapshot_)) {
      error({}, std::string(to_string(violation.rule)) + ": " + violation.id + ": " + violation.detail);
    }
  }

  XML_Parser parser_;
  ParseReport report_;
  NetworkSnapshot snapshot_;
  std::vector<Element> stack_;
  int skip_depth_ = 0;
  bool stopped_ = false;
  bool saw_root_ = false;
  std::optional<DeviceId> current_device_;
  std::optional<VlanId> current_vlan_;
  std::set<LinkId> link_ids_;
  std::vector<PendingLink> links_;
  std::vector<PendingMember> members_;
};

// --- serialization -------------------------------------------------------

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
}

void attr(std::string& out, std::string_view key, std::string_view value) {
  out += ' ';
  out += key;
  out += "=\"";
  append_escaped(out, value);
  out += '"';
}

}  // namespace

ParseReport parse_topology(std::string_view xml_bytes) {
  TopologyReader reader;
  return reader.run(xml_bytes);
}

std::string serialize_topology(const NetworkSnapshot& s) {
  std::string out;
  out.reserve(256 + s.devices.size() * 160 + s.links.size() * 60);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<network version=\"1\">\n";

  if (s.devices.empty()) {
    out += "  <devices/>\n";
  } else {
    out += "  <devices>\n";
    for (const auto& [id, device] : s.devices) {
      out += "    <device";
      attr(out, "id", id.str());
      attr(out, "name", device.name);
      attr(out, "kind", to_string(device.kind));
      if (device.mgmt_ip) attr(out, "mgmtIp", device.mgmt_ip->to_string());
      if (device.geo) {
        attr(out, "lat", format_decimal(device.geo->lat, 6));
        attr(out, "lon", format_decimal(device.geo->lon, 6));
      }
      if (device.isp_tag) attr(out, "isp", *device.isp_tag);
      auto pin = s.pins.find(id);
      if (device.interfaces.empty() && device.attributes.empty() && pin == s.pins.end()) {
        out += "/>\n";
        continue;
      }
      out += ">\n";
      for (const auto& iface_id : device.interfaces) {
        const Interface* iface = s.find(iface_id);
        if (!iface) continue;
        out += "      <iface";
        attr(out, "id", iface->id.str());
        attr(out, "name", iface->name);
        if (iface->ip) attr(out, "ip", iface->ip->to_string());
        if (iface->speed_bps) attr(out, "speedBps", std::to_string(*iface->speed_bps));
        out += "/>\n";
      }
      for (const auto& [key, value] : device.attributes) {
        out += "      <attr";
        attr(out, "key", key);
        attr(out, "value", value);
        out += "/>\n";
      }
      if (pin != s.pins.end()) {
        out += "      <pin";
        attr(out, "x", format_decimal(pin->second.x));
        attr(out, "y", format_decimal(pin->second.y));
        out += "/>\n";
      }
      out += "    </device>\n";
    }
    out += "  </devices>\n";
  }

  if (s.links.empty()) {
    out += "  <links/>\n";
  } else {
    out += "  <links>\n";
    for (const auto& [id, link] : s.links) {
      out += "    <link";
      attr(out, "id", id.str());
      attr(out, "a", link.a.str());
      attr(out, "b", link.b.str());
      if (link.stats.utilization_pct) attr(out, "utilizationPct", format_decimal(*link.stats.utilization_pct));
      if (link.stats.last_updated) {
        attr(out, "lastUpdated", std::to_string(link.stats.last_updated->time_since_epoch().count()));
      }
      out += "/>\n";
    }
    out += "  </links>\n";
  }

  if (s.vlans.empty()) {
    out += "  <vlans/>\n";
  } else {
    out += "  <vlans>\n";
    for (const auto& [id, vlan] : s.vlans) {
      out += "    <vlan";
      attr(out, "id", id.str());
      attr(out, "tag", std::to_string(vlan.tag));
      if (!vlan.name.empty()) attr(out, "name", vlan.name);
      if (vlan.members.empty()) {
        out += "/>\n";
        continue;
      }
      out += ">\n";
      for (const auto& member : vlan.members) {
        out += "      <member";
        attr(out, "iface", member.str());
        out += "/>\n";
      }
      out += "    </vlan>\n";
    }
    out += "  </vlans>\n";
  }
  out += "</network>\n";
  return out;
}

}  // namespace netvis
