#include "fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "netvis/json_codec.hpp"

namespace netvis::testing {

using json = nlohmann::json;

std::string minimal_xml() {
  return R"(<?xml version="1.0" encoding="UTF-8"?>
<network version="1">
  <devices>
    <device id="d1" name="core-1" kind="router" mgmtIp="10.1.0.1" lat="40.712800" lon="-74.006000" isp="ExampleNet">
      <iface id="i1" name="ge-0/0/0" ip="10.1.0.1/30" speedBps="1000000000"/>
    </device>
    <device id="d2" name="edge-1" kind="switch" mgmtIp="10.1.0.2">
      <iface id="i2" name="ge-0/0/1" ip="10.1.0.2/30"/>
    </device>
  </devices>
  <links>
    <link id="l1" a="i1" b="i2" utilizationPct="12.5"/>
  </links>
  <vlans/>
</network>
)";
}

std::string dangling_xml() {
  return R"(<?xml version="1.0" encoding="UTF-8"?>
<network version="1">
  <devices>
    <device id="d1" name="a" kind="router"><iface id="i1" name="e0"/></device>
    <device id="d2" name="b" kind="host"><iface id="i2" name="e0"/></device>
  </devices>
  <links>
    <link id="l1" a="i1" b="if-99"/>
  </links>
</network>
)";
}

NetworkSnapshot small_network() {
  SnapshotBuilder b;
  auto device = [&](const char* id, DeviceKind kind, std::optional<Ipv4Address> ip, std::optional<GeoPoint> geo,
                    std::vector<const char*> ifaces) {
    Device d;
    d.id = DeviceId(id);
    d.name = std::string("dev-") + id;
    d.kind = kind;
    d.mgmt_ip = ip;
    d.geo = geo;
    d.isp_tag = "ExampleNet";
    d.attributes["os"] = "test-os";
    b.add_device(d);
    for (const char* iid : ifaces) {
      Interface iface;
      iface.id = InterfaceId(iid);
      iface.device = d.id;
      iface.name = iid;
      b.add_interface(iface);
    }
  };
  device("d1", DeviceKind::kRouter, Ipv4Address(10, 1, 0, 1), GeoPoint{40.7128, -74.006}, {"d1-i1", "d1-i2"});
  device("d2", DeviceKind::kSwitch, Ipv4Address(10, 1, 0, 2), GeoPoint{40.73, -73.99}, {"d2-i1", "d2-i2", "d2-i3"});
  device("d3", DeviceKind::kHost, Ipv4Address(10, 1, 9, 9), GeoPoint{40.75, -73.98}, {"d3-i1"});
  device("d4", DeviceKind::kRouter, Ipv4Address(10, 2, 0, 1), GeoPoint{51.5, -0.12}, {"d4-i1", "d4-i2", "d4-i3"});
  device("d5", DeviceKind::kHost, Ipv4Address(10, 2, 0, 5), GeoPoint{51.52, -0.1}, {"d5-i1"});
  device("d6", DeviceKind::kPeripheral, std::nullopt, std::nullopt, {"d6-i1"});
  b.add_link(LinkId("l1"), InterfaceId("d1-i1"), InterfaceId("d2-i1"), LinkStats{12.5, std::nullopt});
  b.add_link(LinkId("l2"), InterfaceId("d2-i2"), InterfaceId("d3-i1"));
  b.add_link(LinkId("l3"), InterfaceId("d1-i2"), InterfaceId("d4-i1"));
  b.add_link(LinkId("l4"), InterfaceId("d4-i2"), InterfaceId("d5-i1"));
  b.add_link(LinkId("l5"), InterfaceId("d4-i3"), InterfaceId("d6-i1"));
  Vlan v;
  v.id = VlanId("v10");
  v.tag = 10;
  v.name = "mgmt";
  v.members = {InterfaceId("d1-i1"), InterfaceId("d1-i2")};
  b.add_vlan(v);
  auto s = std::move(b).build();
  if (!s) throw std::logic_error("small_network fixture is invalid");
  return std::move(*s);
}

TempDir::TempDir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "netvis-test-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

namespace {

template <class Map>
const typename Map::value_type* pick(const Map& m, std::mt19937_64& rng) {
  if (m.empty()) return nullptr;
  auto it = m.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(rng() % m.size()));
  return &*it;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

EditOp random_valid_edit(const NetworkSnapshot& s, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    EditOp op;
    switch (rng() % 6) {
      case 0: {
        auto a = pick(s.interfaces, rng);
        auto b = pick(s.interfaces, rng);
        if (!a || !b) continue;
        op.payload = AddLink{LinkId("x" + std::to_string(rng() % 1000000000)), a->first, b->first};
        break;
      }
      case 1: {
        auto l = pick(s.links, rng);
        if (!l) continue;
        op.payload = RemoveLink{l->first};
        break;
      }
      case 2: {
        auto d = pick(s.devices, rng);
        if (!d) continue;
        op.payload = MoveNode{d->first, Point{std::round(unit(rng) * 1e4), std::round(unit(rng) * 1e4)}};
        break;
      }
      case 3: {
        auto d = pick(s.devices, rng);
        if (!d) continue;
        static const char* keys[] = {"os", "role", "rack"};
        std::optional<std::string> value;
        if (rng() % 3) value = "v" + std::to_string(rng() % 100);
        op.payload = SetDeviceAttr{d->first, keys[rng() % 3], value};
        break;
      }
      case 4: {
        auto v = pick(s.vlans, rng);
        auto i = pick(s.interfaces, rng);
        if (!v || !i) continue;
        op.payload = SetVlanMembership{v->first, i->first, rng() % 2 == 0};
        break;
      }
      default: {
        auto d = pick(s.devices, rng);
        if (!d) continue;
        std::optional<GeoPoint> geo;
        if (rng() % 4) geo = GeoPoint{std::round((unit(rng) * 180 - 90) * 1e6) / 1e6, std::round((unit(rng) * 360 - 180) * 1e6) / 1e6};
        op.payload = SetGeo{d->first, geo};
        break;
      }
    }
    if (apply_edit(s, op)) return op;
  }
  throw std::logic_error("no valid edit found");
}

json viewport_json(const Viewport& v) { return json(v); }

MessageSink ScriptedClient::sink() {
  return [this](std::string text) {
    std::lock_guard lock(mutex_);
    inbox_.push_back(std::move(text));
  };
}

json ScriptedClient::hello(int proto_version) {
  service_.handle_message(json{{"type", "Hello"}, {"proto_version", proto_version}}.dump(), sink());
  auto messages = take();
  if (messages.empty()) return nullptr;
  if (messages.front().value("type", "") == "Welcome") session_ = messages.front()["session"];
  return messages.front();
}

std::vector<json> ScriptedClient::send(json message) {
  if (!message.contains("session")) message["session"] = session_;
  return send_raw(message.dump());
}

std::vector<json> ScriptedClient::send_raw(const std::string& text) {
  service_.handle_message(text, sink());
  return take();
}

std::vector<json> ScriptedClient::take() {
  std::deque<std::string> pending;
  {
    std::lock_guard lock(mutex_);
    pending.swap(inbox_);
  }
  std::vector<json> out;
  for (auto& text : pending) {
    json m = json::parse(text);
    const std::string type = m.value("type", "");
    if (type == "Render") {
      scene_ = m.at("render_set").get<RenderSet>();
    } else if (type == "Delta") {
      RenderDelta d = m.at("delta").get<RenderDelta>();
      if (!scene_ || d.from_snapshot_version != scene_->snapshot_version ||
          d.from_layout_version != scene_->layout_version) {
        consistent_ = false;
      } else {
        scene_ = apply_delta(*scene_, d);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace netvis::testing
