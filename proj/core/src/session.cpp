#include "netvis/session.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "netvis/json_codec.hpp"

namespace netvis {

using json = nlohmann::json;

struct Service::Session {
  std::string id;
  MessageSink sink;
  std::mutex command;
  std::mutex state;
  bool has_viewport = false;
  Viewport viewport;
  ExpansionState expansion;
  GroupingConfig grouping;
  std::string algorithm;
  std::optional<RenderSet> last;
  std::uint64_t known_version = 0;
  std::uint64_t stats_cursor = 0;
};

struct Service::Shared {
  struct StatsEntry {
    LinkStats stats;
    std::uint64_t revision = 0;
  };
  std::shared_ptr<const NetworkSnapshot> snapshot;
  std::map<std::string, ViewPtr> views;
  /// "d:<id>", "i:<id>", "l:<id>", "v:<id>" -> version that deleted it.
  std::map<std::string, std::uint64_t> tombstones;
  std::map<LinkId, StatsEntry> stats;
  std::uint64_t stats_revision = 0;

  const LinkStats* stats_for(const Link& link) const {
    auto it = stats.find(link.id);
    return it == stats.end() ? &link.stats : &it->second.stats;
  }
};

struct Service::Message {
  json body;
  std::string type;
};

namespace {

std::string view_key(const GroupingConfig& grouping, const std::string& algorithm) {
  return grouping.key() + "|" + algorithm;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json error_message(std::string_view session, std::string_view code, std::string_view message) {
  json j{{"type", "Error"}, {"code", code}, {"message", message}};
  if (!session.empty()) j["session"] = session;
  return j;
}

std::vector<std::string> referenced_keys(const EditOp& op) {
  return std::visit(
      [](const auto& p) -> std::vector<std::string> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AddLink>) {
          return {"i:" + p.a.str(), "i:" + p.b.str()};
        } else if constexpr (std::is_same_v<T, RemoveLink>) {
          return {};
        } else if constexpr (std::is_same_v<T, SetVlanMembership>) {
          return {"v:" + p.vlan.str(), "i:" + p.iface.str()};
        } else {
          return {"d:" + p.device.str()};
        }
      },
      op.payload);
}

bool key_present(const NetworkSnapshot& s, const std::string& key) {
  std::string_view id = std::string_view(key).substr(2);
  switch (key[0]) {
    case 'd': return s.find(DeviceId(id)) != nullptr;
    case 'i': return s.find(InterfaceId(id)) != nullptr;
    case 'l': return s.find(LinkId(id)) != nullptr;
    case 'v': return s.find(VlanId(id)) != nullptr;
  }
  return false;
}

json geo_json(const std::optional<GeoPoint>& geo) {
  if (!geo) return nullptr;
  return json{{"lat", geo->lat}, {"lon", geo->lon}};
}

json vlan_ref(const Vlan& v) { return json{{"id", v.id}, {"tag", v.tag}, {"name", v.name}}; }

json interface_json(const NetworkSnapshot& s, const Interface& iface) {
  json vlans = json::array();
  for (const auto& [id, v] : s.vlans) {
    if (v.members.count(iface.id)) vlans.push_back(vlan_ref(v));
  }
  json j{{"id", iface.id}, {"device", iface.device}, {"name", iface.name}, {"vlans", vlans}};
  j["ip"] = iface.ip ? json(iface.ip->to_string()) : json(nullptr);
  j["speed_bps"] = iface.speed_bps ? json(*iface.speed_bps) : json(nullptr);
  return j;
}

}  // namespace

Service::Service(NetworkSnapshot initial, std::shared_ptr<EditStore> store, ServiceOptions options,
                 LayoutRegistry registry)
    : options_(std::move(options)), registry_(std::move(registry)), store_(std::move(store)),
      shared_(std::make_unique<Shared>()) {
  if (!options_.clock) {
    options_.clock = [] { return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()); };
  }
  shared_->snapshot = std::make_shared<const NetworkSnapshot>(std::move(initial));
  session_salt_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  memory_seq_ = store_ ? store_->last_seq() : 0;
}

Service::~Service() = default;

std::shared_ptr<const LayoutAlgorithm> Service::algorithm(const std::string& name) const {
  return registry_.find(name);
}

std::shared_ptr<const NetworkSnapshot> Service::snapshot() const {
  std::shared_lock lock(shared_mutex_);
  return shared_->snapshot;
}

NetworkSnapshot Service::snapshot_with_stats() const {
  std::shared_lock lock(shared_mutex_);
  NetworkSnapshot out = *shared_->snapshot;
  for (const auto& [id, entry] : shared_->stats) {
    if (auto it = out.links.find(id); it != out.links.end()) it->second.stats = entry.stats;
  }
  return out;
}

std::size_t Service::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::string Service::health_json() const {
  auto snap = snapshot();
  return json{{"status", "ok"},
              {"snapshot_version", snap->version},
              {"devices", snap->devices.size()},
              {"links", snap->links.size()},
              {"sessions", session_count()}}
      .dump();
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void Service::close_session(const std::string& session) {
  std::lock_guard lock(sessions_mutex_);
  sessions_.erase(session);
}

std::string Service::new_session_id() {
  char buf[24];
  std::snprintf(buf, sizeof buf, "s-%016llx",
                static_cast<unsigned long long>(splitmix(session_salt_ + ++session_counter_)));
  return buf;
}

void Service::send(Session& session, std::string text) {
  if (session.sink) session.sink(std::move(text));
}

void Service::send_error(Session& session, std::string_view code, std::string_view message) {
  send(session, error_message(session.id, code, message).dump());
}

Service::ViewPtr Service::lookup_view(const std::string& key) const {
  std::shared_lock lock(shared_mutex_);
  auto it = shared_->views.find(key);
  if (it == shared_->views.end() || it->second->snapshot != shared_->snapshot) return nullptr;
  return it->second;
}

Expected<Service::ViewPtr, LayoutError> Service::build_view(const std::shared_ptr<const NetworkSnapshot>& snapshot,
                                                           const GroupingConfig& grouping,
                                                           const std::string& algorithm_name) const {
  auto algo = algorithm(algorithm_name);
  if (!algo) return unexpected(LayoutError{LayoutErrorCode::kUnknownAlgorithm, "unknown algorithm " + algorithm_name});
  auto view = std::make_shared<View>();
  view->grouping = grouping;
  view->algorithm = algorithm_name;
  view->snapshot = snapshot;
  view->tree = std::make_shared<const ClusterTree>(build_hierarchy(*snapshot, grouping));
  auto layout = layout_hierarchy(*snapshot, *view->tree, options_.layout, *algo);
  if (!layout) return unexpected(layout.error());
  view->layout = std::make_shared<const HierarchyLayout>(std::move(*layout));
  view->scene = std::make_shared<const SceneIndex>(*snapshot, *view->tree, *view->layout);
  return ViewPtr(std::move(view));
}

Expected<Service::ViewPtr, LayoutError> Service::update_view(const View& prev,
                                                            const std::shared_ptr<const NetworkSnapshot>& next,
                                                            const NetworkSnapshot& before, const EditOp& op) const {
  auto algo = algorithm(prev.algorithm);
  if (!algo) return unexpected(LayoutError{LayoutErrorCode::kUnknownAlgorithm, "unknown algorithm " + prev.algorithm});
  auto view = std::make_shared<View>(prev);
  view->snapshot = next;
  bool structural = false;
  if (op.kind() == EditKind::kSetGeo && prev.grouping.method == GroupingMethod::kGeo) {
    auto tree = build_hierarchy(*next, prev.grouping);
    if (!same_structure(*prev.tree, tree)) {
      view->tree = std::make_shared<const ClusterTree>(std::move(tree));
      structural = true;
    }
  }
  if (structural) {
    auto layout = layout_hierarchy(*next, *view->tree, options_.layout, *algo);
    if (!layout) return unexpected(layout.error());
    layout->revision = prev.layout->revision + 1;
    view->layout = std::make_shared<const HierarchyLayout>(std::move(*layout));
  } else if (auto touched = layout_footprint(before, op); !touched.empty()) {
    auto layout = update_hierarchy_layout(*prev.layout, *next, *view->tree, touched, options_.layout, *algo);
    if (!layout) return unexpected(layout.error());
    view->layout = std::make_shared<const HierarchyLayout>(std::move(*layout));
  }
  view->scene = std::make_shared<const SceneIndex>(*next, *view->tree, *view->layout);
  return ViewPtr(std::move(view));
}

Expected<Service::ViewPtr, LayoutError> Service::ensure_view(const GroupingConfig& grouping,
                                                            const std::string& algorithm_name) {
  const std::string key = view_key(grouping, algorithm_name);
  if (auto v = lookup_view(key)) return v;
  std::lock_guard edit(edit_mutex_);
  if (auto v = lookup_view(key)) return v;
  auto built = build_view(snapshot(), grouping, algorithm_name);
  if (!built) return built;
  std::unique_lock lock(shared_mutex_);
  shared_->views[key] = *built;
  return built;
}

Status<LayoutError> Service::warm_up() {
  auto v = ensure_view(options_.grouping, options_.algorithm);
  if (!v) return unexpected(v.error());
  return ok_status;
}

bool Service::deliver(Session& s) {
  ViewPtr view = lookup_view(view_key(s.grouping, s.algorithm));
  if (!view) return false;
  auto rs = viewport_query(*view->scene, s.viewport, s.expansion);
  if (!rs) {
    send_error(s, to_string(rs.error().code), rs.error().message);
    return true;
  }
  json msg;
  if (!s.last) {
    msg = json{{"type", "Render"}, {"session", s.id}, {"render_set", *rs}};
  } else {
    RenderDelta delta = render_delta(*s.last, *rs);
    if (delta.size() > rs->element_count()) {
      msg = json{{"type", "Render"}, {"session", s.id}, {"render_set", *rs}};
    } else {
      msg = json{{"type", "Delta"}, {"session", s.id}, {"delta", delta}};
    }
  }
  s.known_version = rs->snapshot_version;
  s.last = std::move(*rs);
  send(s, msg.dump());
  return true;
}

void Service::refresh(Session& s) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    GroupingConfig grouping;
    std::string algo;
    {
      std::lock_guard lock(s.state);
      if (!s.has_viewport) return;
      grouping = s.grouping;
      algo = s.algorithm;
    }
    auto view = ensure_view(grouping, algo);
    std::lock_guard lock(s.state);
    if (!view) {
      send_error(s, "LayoutFailed", view.error().message);
      return;
    }
    if (deliver(s)) return;
  }
  std::lock_guard lock(s.state);
  send_error(s, "Internal", "view kept changing during refresh");
}

void Service::broadcast() {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) sessions.push_back(s);
  }
  for (const auto& s : sessions) {
    std::lock_guard lock(s->state);
    if (s->has_viewport) deliver(*s);
  }
}

std::string Service::handle_message(std::string_view text, const MessageSink& reply) {
  Message msg;
  try {
    msg.body = json::parse(text);
  } catch (const json::exception& e) {
    if (reply) reply(error_message({}, "MalformedMessage", e.what()).dump());
    return {};
  }
  if (!msg.body.is_object() || !msg.body.contains("type") || !msg.body["type"].is_string()) {
    if (reply) reply(error_message({}, "MalformedMessage", "message needs a string \"type\"").dump());
    return {};
  }
  msg.type = msg.body["type"].get<std::string>();
  if (msg.type == "Hello") {
    return on_hello(msg, reply);
  }
  std::shared_ptr<Session> session;
  if (auto it = msg.body.find("session"); it != msg.body.end() && it->is_string()) {
    session = find_session(it->get<std::string>());
  }
  if (!session) {
    if (reply) reply(error_message({}, "UnknownSession", "message carries no live session id").dump());
    return {};
  }
  std::lock_guard command(session->command);
  on_command(*session, msg);
  return {};
}

std::string Service::on_hello(const Message& msg, const MessageSink& reply) {
  auto it = msg.body.find("proto_version");
  if (it == msg.body.end() || !it->is_number_integer()) {
    if (reply) reply(error_message({}, "MalformedMessage", "Hello needs an integer proto_version").dump());
    return {};
  }
  if (it->get<std::int64_t>() != kProtocolVersion) {
    if (reply) {
      reply(error_message({}, "UnsupportedVersion", "supported proto_version is " + std::to_string(kProtocolVersion))
                .dump());
    }
    return {};
  }
  auto session = std::make_shared<Session>();
  session->sink = reply;
  session->grouping = options_.grouping;
  session->algorithm = options_.algorithm;
  std::uint64_t version;
  {
    std::shared_lock lock(shared_mutex_);
    version = shared_->snapshot->version;
    session->stats_cursor = shared_->stats_revision;
  }
  session->known_version = version;
  {
    std::lock_guard lock(sessions_mutex_);
    do {
      session->id = new_session_id();
    } while (sessions_.count(session->id));
    sessions_[session->id] = session;
  }
  json welcome{{"type", "Welcome"},
               {"session", session->id},
               {"proto_version", kProtocolVersion},
               {"snapshot_version", version},
               {"capabilities",
                {{"layouts", registry_.names()},
                 {"groupings", {to_string(GroupingMethod::kIpPrefix), to_string(GroupingMethod::kGeo)}},
                 {"expand_policies",
                  {to_string(ExpandPolicy::kClick), to_string(ExpandPolicy::kZoom), to_string(ExpandPolicy::kBoth)}}}},
               {"defaults", {{"grouping", options_.grouping}, {"layout", options_.algorithm}}}};
  std::lock_guard lock(session->state);
  send(*session, welcome.dump());
  return session->id;
}

void Service::on_command(Session& s, const Message& msg) {
  const json& body = msg.body;
  if (msg.type == "SetViewport") {
    Viewport v;
    try {
      v = body.at("viewport").get<Viewport>();
    } catch (const std::exception& e) {
      std::lock_guard lock(s.state);
      send_error(s, "MalformedViewport", e.what());
      return;
    }
    if (!is_valid(v)) {
      std::lock_guard lock(s.state);
      send_error(s, "MalformedViewport", "viewport needs a positive finite scale and pixel size");
      return;
    }
    {
      std::lock_guard lock(s.state);
      s.viewport = v;
      s.has_viewport = true;
    }
    refresh(s);
  } else if (msg.type == "Expand" || msg.type == "Collapse") {
    auto it = body.find("cluster");
    if (it == body.end() || !it->is_string()) {
      std::lock_guard lock(s.state);
      send_error(s, "MalformedMessage", msg.type + " needs a cluster id");
      return;
    }
    ClusterId id(it->get<std::string>());
    GroupingConfig grouping;
    std::string algo;
    {
      std::lock_guard lock(s.state);
      grouping = s.grouping;
      algo = s.algorithm;
    }
    auto view = ensure_view(grouping, algo);
    {
      std::lock_guard lock(s.state);
      if (!view) {
        send_error(s, "LayoutFailed", view.error().message);
        return;
      }
      auto next = msg.type == "Expand" ? expand(*(*view)->tree, id, s.expansion)
                                       : collapse(*(*view)->tree, id, s.expansion);
      if (!next) {
        send_error(s, to_string(next.error().code), next.error().message);
        return;
      }
      s.expansion = std::move(*next);
    }
    refresh(s);
  } else if (msg.type == "SelectLayout") {
    auto it = body.find("name");
    std::string name = it != body.end() && it->is_string() ? it->get<std::string>() : std::string{};
    if (!algorithm(name)) {
      std::lock_guard lock(s.state);
      send_error(s, "UnknownAlgorithm", "no layout algorithm named '" + name + "'");
      return;
    }
    {
      std::lock_guard lock(s.state);
      s.algorithm = name;
    }
    refresh(s);
  } else if (msg.type == "SetGrouping") {
    GroupingConfig grouping;
    try {
      grouping = body.at("grouping").get<GroupingConfig>();
    } catch (const std::exception& e) {
      std::lock_guard lock(s.state);
      send_error(s, "InvalidGrouping", e.what());
      return;
    }
    if (auto ok = validate(grouping); !ok) {
      std::lock_guard lock(s.state);
      send_error(s, "InvalidGrouping", ok.error().message);
      return;
    }
    {
      std::lock_guard lock(s.state);
      if (!(s.grouping == grouping)) s.expansion = {};
      s.grouping = grouping;
    }
    refresh(s);
  } else if (msg.type == "Edit") {
    on_edit(s, msg);
  } else if (msg.type == "GetDetail") {
    on_detail(s, msg);
  } else {
    std::lock_guard lock(s.state);
    send_error(s, "MalformedMessage", "unknown message type '" + msg.type + "'");
  }
}

void Service::on_edit(Session& s, const Message& msg) {
  EditOp op;
  try {
    op = msg.body.at("op").get<EditOp>();
  } catch (const std::exception& e) {
    std::lock_guard lock(s.state);
    send_error(s, "MalformedMessage", std::string("bad edit op: ") + e.what());
    return;
  }
  std::uint64_t client_version;
  {
    std::lock_guard lock(s.state);
    client_version = s.known_version;
  }
  if (auto it = msg.body.find("snapshot_version"); it != msg.body.end() && it->is_number_unsigned()) {
    client_version = it->get<std::uint64_t>();
  }
  auto reject = [&](std::string_view reason, std::string_view message) {
    std::lock_guard lock(s.state);
    send(s, json{{"type", "EditReject"}, {"session", s.id}, {"reason", reason}, {"message", message}}.dump());
  };

  std::lock_guard edit(edit_mutex_);
  std::shared_ptr<const NetworkSnapshot> before;
  std::map<std::string, ViewPtr> views;
  {
    std::shared_lock lock(shared_mutex_);
    before = shared_->snapshot;
    views = shared_->views;
    // A concurrent RemoveLink of the same link is a plain UnknownId.
    for (const auto& key : referenced_keys(op)) {
      if (key_present(*before, key)) continue;
      auto tomb = shared_->tombstones.find(key);
      if (tomb != shared_->tombstones.end() && tomb->second > client_version) {
        std::string id = key.substr(2);
        lock.unlock();
        reject("StaleView", id + " was deleted after version " + std::to_string(client_version));
        return;
      }
    }
  }
  if (auto* add = std::get_if<AddLink>(&op.payload); add && add->link.empty()) {
    std::string base = "l-" + std::to_string(before->version + 1);
    std::string id = base;
    for (int k = 1; before->find(LinkId(id)); ++k) id = base + "-" + std::to_string(k);
    add->link = LinkId(id);
  }
  op.author = s.id;
  op.at = options_.clock();
  auto next = apply_edit(*before, op);
  if (!next) {
    reject(to_string(next.error().code), next.error().message);
    return;
  }
  if (store_) {
    auto seq = store_->append(op);
    if (!seq) {
      reject("Internal", seq.error().message);
      return;
    }
    op.seq = *seq;
  } else {
    op.seq = ++memory_seq_;
  }
  auto next_ptr = std::make_shared<const NetworkSnapshot>(std::move(*next));

  std::set<std::string> used{view_key(options_.grouping, options_.algorithm)};
  {
    std::vector<std::shared_ptr<Session>> sessions;
    {
      std::lock_guard lock(sessions_mutex_);
      for (const auto& [id, other] : sessions_) sessions.push_back(other);
    }
    for (const auto& other : sessions) {
      std::lock_guard lock(other->state);
      used.insert(view_key(other->grouping, other->algorithm));
    }
  }
  std::map<std::string, ViewPtr> next_views;
  for (const auto& [key, view] : views) {
    if (!used.count(key) || view->snapshot != before) continue;
    auto updated = update_view(*view, next_ptr, *before, op);
    if (!updated) updated = build_view(next_ptr, view->grouping, view->algorithm);
    if (updated) next_views[key] = *updated;
  }
  {
    std::unique_lock lock(shared_mutex_);
    shared_->snapshot = next_ptr;
    shared_->views = std::move(next_views);
    if (auto* rm = std::get_if<RemoveLink>(&op.payload)) {
      shared_->tombstones["l:" + rm->link.str()] = next_ptr->version;
      shared_->stats.erase(rm->link);
    }
  }
  {
    json ack{{"type", "EditAck"}, {"session", s.id}, {"seq", op.seq}, {"version", next_ptr->version}};
    if (auto* add = std::get_if<AddLink>(&op.payload)) ack["link"] = add->link;
    std::lock_guard lock(s.state);
    s.known_version = next_ptr->version;
    send(s, ack.dump());
  }
  broadcast();
}

void Service::on_detail(Session& s, const Message& msg) {
  auto it = msg.body.find("id");
  if (it == msg.body.end() || !it->is_string()) {
    std::lock_guard lock(s.state);
    send_error(s, "MalformedMessage", "GetDetail needs an id");
    return;
  }
  const std::string id = it->get<std::string>();
  const std::string hint = msg.body.value("entity", std::string{});
  auto wants = [&](std::string_view kind) { return hint.empty() || hint == kind; };

  GroupingConfig grouping;
  std::string algo;
  {
    std::lock_guard lock(s.state);
    grouping = s.grouping;
    algo = s.algorithm;
  }
  ViewPtr view = lookup_view(view_key(grouping, algo));

  json entity;
  {
    std::shared_lock lock(shared_mutex_);
    const NetworkSnapshot& snap = *shared_->snapshot;
    auto stats_json = [&](const Link& link) { return json(*shared_->stats_for(link)); };
    if (const Device* d = wants("device") ? snap.find(DeviceId(id)) : nullptr) {
      json ifaces = json::array();
      json links = json::array();
      std::set<InterfaceId> mine(d->interfaces.begin(), d->interfaces.end());
      for (const auto& iid : d->interfaces) {
        if (const Interface* iface = snap.find(iid)) ifaces.push_back(interface_json(snap, *iface));
      }
      for (const auto& [lid, link] : snap.links) {
        bool at_a = mine.count(link.a) > 0;
        bool at_b = mine.count(link.b) > 0;
        if (!at_a && !at_b) continue;
        const InterfaceId& local = at_a ? link.a : link.b;
        const InterfaceId& peer = at_a ? link.b : link.a;
        auto peer_device = snap.owner(peer);
        links.push_back(json{{"id", lid},
                             {"interface", local},
                             {"peer_interface", peer},
                             {"peer_device", peer_device ? json(*peer_device) : json(nullptr)},
                             {"stats", stats_json(link)}});
      }
      entity = json{{"kind", "device"},
                    {"id", d->id},
                    {"name", d->name},
                    {"device_kind", to_string(d->kind)},
                    {"mgmt_ip", d->mgmt_ip ? json(d->mgmt_ip->to_string()) : json(nullptr)},
                    {"geo", geo_json(d->geo)},
                    {"isp", d->isp_tag ? json(*d->isp_tag) : json(nullptr)},
                    {"attributes", d->attributes},
                    {"interfaces", ifaces},
                    {"links", links}};
      if (auto pin = snap.pins.find(d->id); pin != snap.pins.end()) entity["pinned"] = pin->second;
      if (view && view->snapshot == shared_->snapshot) {
        if (auto ord = view->tree->device_ordinal(d->id)) entity["position"] = view->layout->device_position[*ord];
      }
    } else if (const Link* l = wants("link") ? snap.find(LinkId(id)) : nullptr) {
      auto da = snap.owner(l->a);
      auto db = snap.owner(l->b);
      entity = json{{"kind", "link"},
                    {"id", l->id},
                    {"a", l->a},
                    {"b", l->b},
                    {"a_device", da ? json(*da) : json(nullptr)},
                    {"b_device", db ? json(*db) : json(nullptr)},
                    {"stats", stats_json(*l)}};
    } else if (const Interface* i = wants("interface") ? snap.find(InterfaceId(id)) : nullptr) {
      entity = interface_json(snap, *i);
      entity["kind"] = "interface";
    } else if (const Vlan* v = wants("vlan") ? snap.find(VlanId(id)) : nullptr) {
      entity = json{{"kind", "vlan"}, {"id", v->id}, {"tag", v->tag}, {"name", v->name}, {"members", v->members}};
    } else if (auto c = view && wants("cluster") ? view->tree->find(ClusterId(id)) : std::nullopt) {
      const Cluster& cluster = view->tree->cluster(*c);
      json children = json::array();
      for (auto child : cluster.children) children.push_back(view->tree->cluster(child).id);
      entity = json{{"kind", "cluster"},
                    {"id", cluster.id},
                    {"label", cluster.label},
                    {"level", cluster.level},
                    {"device_count", cluster.device_count},
                    {"children", children},
                    {"position", view->layout->cluster_position[*c]}};
    }
  }
  std::lock_guard lock(s.state);
  if (entity.is_null()) {
    send_error(s, "UnknownId", "no entity with id '" + id + "'");
    return;
  }
  send(s, json{{"type", "Detail"}, {"session", s.id}, {"entity", entity}}.dump());
}

Status<UploadError> Service::replace_topology(NetworkSnapshot snapshot) {
  if (auto violations = validate(snapshot); !violations.empty()) {
    std::string text = std::to_string(violations.size()) + " violation(s); first: " +
                       std::string(to_string(violations.front().rule)) + " " + violations.front().id + ": " +
                       violations.front().detail;
    return unexpected(UploadError{text});
  }
  std::lock_guard edit(edit_mutex_);
  auto before = this->snapshot();
  snapshot.version = before->version + 1;
  if (store_) {
    if (auto ok = store_->rebase(snapshot); !ok) return unexpected(UploadError{ok.error().message});
  }
  auto next = std::make_shared<const NetworkSnapshot>(std::move(snapshot));

  std::map<std::string, std::uint64_t> tombs;
  auto bury = [&](char kind, const std::string& id, bool present) {
    if (!present) tombs[std::string{kind, ':'} + id] = next->version;
  };
  for (const auto& [id, x] : before->devices) bury('d', id.str(), next->find(id));
  for (const auto& [id, x] : before->interfaces) bury('i', id.str(), next->find(id));
  for (const auto& [id, x] : before->links) bury('l', id.str(), next->find(id));
  for (const auto& [id, x] : before->vlans) bury('v', id.str(), next->find(id));

  std::map<std::string, std::pair<GroupingConfig, std::string>> wanted{
      {view_key(options_.grouping, options_.algorithm), {options_.grouping, options_.algorithm}}};
  {
    std::vector<std::shared_ptr<Session>> sessions;
    {
      std::lock_guard lock(sessions_mutex_);
      for (const auto& [id, other] : sessions_) sessions.push_back(other);
    }
    for (const auto& other : sessions) {
      std::lock_guard lock(other->state);
      wanted[view_key(other->grouping, other->algorithm)] = {other->grouping, other->algorithm};
    }
  }
  std::map<std::string, ViewPtr> views;
  for (const auto& [key, want] : wanted) {
    if (auto built = build_view(next, want.first, want.second)) views[key] = *built;
  }
  {
    std::unique_lock lock(shared_mutex_);
    shared_->snapshot = next;
    shared_->views = std::move(views);
    for (const auto& [key, version] : tombs) shared_->tombstones[key] = version;
    for (auto& [key, version] : shared_->tombstones) {
      if (key_present(*next, key)) version = 0;
    }
    shared_->stats.clear();
  }
  broadcast();
  return ok_status;
}

Status<StatsError> Service::update_link_stats(const LinkId& link, const LinkStats& stats) {
  if (stats.utilization_pct &&
      !(std::isfinite(*stats.utilization_pct) && *stats.utilization_pct >= 0 && *stats.utilization_pct <= 100)) {
    return unexpected(StatsError{"utilization_pct must lie in [0,100]"});
  }
  std::unique_lock lock(shared_mutex_);
  if (!shared_->snapshot->find(link)) return unexpected(StatsError{"unknown link " + link.str()});
  auto& entry = shared_->stats[link];
  entry.stats = stats;
  entry.revision = ++shared_->stats_revision;
  return ok_status;
}

void Service::push_stats() {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) sessions.push_back(s);
  }
  for (const auto& s : sessions) {
    std::lock_guard lock(s->state);
    json changed = json::object();
    {
      std::shared_lock shared(shared_mutex_);
      if (s->last) {
        for (const auto& edge : s->last->edges) {
          auto it = shared_->stats.find(edge.id);
          if (it != shared_->stats.end() && it->second.revision > s->stats_cursor) changed[edge.id.str()] = it->second.stats;
        }
      }
      s->stats_cursor = shared_->stats_revision;
    }
    if (!changed.empty()) send(*s, json{{"type", "StatsUpdate"}, {"session", s->id}, {"stats", changed}}.dump());
  }
}

std::optional<RenderSet> Service::current_query(const std::string& id) {
  auto s = find_session(id);
  if (!s) return std::nullopt;
  for (int attempt = 0; attempt < 16; ++attempt) {
    GroupingConfig grouping;
    std::string algo;
    {
      std::lock_guard lock(s->state);
      if (!s->has_viewport) return std::nullopt;
      grouping = s->grouping;
      algo = s->algorithm;
    }
    if (!ensure_view(grouping, algo)) return std::nullopt;
    std::lock_guard lock(s->state);
    if (auto view = lookup_view(view_key(s->grouping, s->algorithm))) {
      auto rs = viewport_query(*view->scene, s->viewport, s->expansion);
      if (!rs) return std::nullopt;
      return std::move(*rs);
    }
  }
  return std::nullopt;
}

std::optional<RenderSet> Service::last_render_set(const std::string& id) {
  auto s = find_session(id);
  if (!s) return std::nullopt;
  std::lock_guard lock(s->state);
  return s->last;
}

}  // namespace netvis
