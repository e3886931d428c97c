#include "netvis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace netvis {
namespace {

constexpr std::size_t kSubnetSize = 64;
constexpr std::size_t kSubnetsPerBlock = 8;
constexpr std::size_t kMaxSlash8 = 24;

// std distributions differ across standard libraries; these do not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::mt19937_64 engine_;
};

std::string padded(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
  return buf;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

struct Plan {
  std::size_t subnet;
  std::size_t block;
};

std::vector<std::uint8_t> pick_distinct(Rng& rng, std::vector<std::uint8_t> pool, std::size_t count) {
  for (std::size_t i = 0; i < count && i < pool.size(); ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(std::min(count, pool.size()));
  return pool;
}

}  // namespace

NetworkSnapshot generate_topology(const SynthParams& params) {
  Rng rng(params.seed);
  const std::size_t n = params.devices;
  const std::size_t m = params.links.value_or(n + n / 2);
  const std::size_t subnets = (n + kSubnetSize - 1) / kSubnetSize;
  const std::size_t blocks = (subnets + kSubnetsPerBlock - 1) / kSubnetsPerBlock;
  const std::size_t ports = std::max<std::size_t>(4, n == 0 ? 4 : (2 * m + n - 1) / n + 2);

  // Address plan: /8s from the unicast range, distinct /16s per /8.
  std::vector<std::uint8_t> first_octets;
  for (int o = 1; o <= 223; ++o) {
    if (o != 127) first_octets.push_back(static_cast<std::uint8_t>(o));
  }
  auto slash8 = pick_distinct(rng, first_octets, std::min(kMaxSlash8, std::max<std::size_t>(1, (blocks + 15) / 16)));
  std::vector<std::vector<std::uint8_t>> seconds(slash8.size());
  std::vector<std::uint8_t> all_seconds(256);
  for (int i = 0; i < 256; ++i) all_seconds[i] = static_cast<std::uint8_t>(i);
  for (auto& s : seconds) s = pick_distinct(rng, all_seconds, 256);
  struct Block {
    std::uint8_t a, b;
    GeoPoint site;
  };
  std::vector<Block> block_info(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    std::size_t s8 = i % slash8.size();
    std::size_t k = i / slash8.size();
    block_info[i].a = slash8[s8];
    block_info[i].b = seconds[s8][k % 256];
    block_info[i].site = {rng.uniform(-60.0, 70.0), rng.uniform(-179.0, 179.0)};
  }

  SnapshotBuilder builder;
  std::vector<Plan> plan(n);
  std::vector<std::vector<std::string>> ifaces(n);
  std::vector<std::vector<std::uint8_t>> used(n);
  std::vector<GeoPoint> subnet_site(subnets);
  for (std::size_t s = 0; s < subnets; ++s) {
    const GeoPoint& site = block_info[s / kSubnetsPerBlock].site;
    subnet_site[s] = {site.lat + rng.uniform(-0.5, 0.5), site.lon + rng.uniform(-0.5, 0.5)};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = i / kSubnetSize;
    const std::size_t host = i % kSubnetSize;
    const Block& blk = block_info[s / kSubnetsPerBlock];
    plan[i] = {s, s / kSubnetsPerBlock};
    Device d;
    d.id = DeviceId(padded('d', i));
    d.name = (host == 0 ? "rtr-" : host == 1 ? "sw-" : "host-") + std::to_string(i);
    d.kind = host == 0 ? DeviceKind::kRouter
             : host == 1 ? DeviceKind::kSwitch
             : rng.uniform() < 0.15 ? DeviceKind::kPeripheral
                                    : DeviceKind::kHost;
    Ipv4Address addr(blk.a, blk.b, static_cast<std::uint8_t>(s % kSubnetsPerBlock),
                     static_cast<std::uint8_t>(host + 1));
    if (rng.uniform() < params.ip_fraction) d.mgmt_ip = addr;
    if (rng.uniform() < params.geo_fraction) {
      const GeoPoint& site = subnet_site[s];
      d.geo = GeoPoint{std::clamp(round6(site.lat + rng.uniform(-0.05, 0.05)), -90.0, 90.0),
                       std::clamp(round6(site.lon + rng.uniform(-0.05, 0.05)), -180.0, 180.0)};
    }
    d.isp_tag = "isp-" + std::to_string(blk.a);
    d.attributes["os"] = host == 0 ? "router-os" : host == 1 ? "switch-os" : "generic";
    builder.add_device(d);
    for (std::size_t p = 0; p < ports; ++p) {
      Interface iface;
      iface.id = InterfaceId(padded('i', i) + "-" + std::to_string(p));
      iface.device = d.id;
      iface.name = "eth" + std::to_string(p);
      iface.speed_bps = host < 2 ? 10'000'000'000ULL : 1'000'000'000ULL;
      if (p == 0) iface.ip = Ipv4Prefix{addr, 24};
      ifaces[i].push_back(iface.id.str());
      builder.add_interface(std::move(iface));
    }
    used[i].assign(ports, 0);
  }

  // Preferential attachment urns: each device appears degree + 1 times.
  std::vector<std::vector<std::uint32_t>> subnet_urn(subnets);
  std::vector<std::vector<std::uint32_t>> block_urn(blocks);
  std::vector<std::uint32_t> global_urn;
  std::vector<std::uint32_t> degree(n, 0);
  auto enroll = [&](std::uint32_t d) {
    subnet_urn[plan[d].subnet].push_back(d);
    block_urn[plan[d].block].push_back(d);
    global_urn.push_back(d);
  };
  auto free_port = [&](std::uint32_t d) -> std::optional<std::size_t> {
    std::vector<std::size_t> free;
    for (std::size_t p = 0; p < used[d].size(); ++p) {
      if (!used[d][p]) free.push_back(p);
    }
    if (free.empty()) return std::nullopt;
    return free[rng.below(free.size())];
  };
  std::size_t made = 0;
  auto connect = [&](std::uint32_t x, std::uint32_t y) {
    if (x == y || made >= m) return false;
    auto px = free_port(x);
    auto py = free_port(y);
    if (!px || !py) return false;
    used[x][*px] = used[y][*py] = 1;
    LinkStats stats;
    if (rng.uniform() < 0.5) stats.utilization_pct = std::round(rng.uniform(0.0, 100.0) * 10.0) / 10.0;
    builder.add_link(LinkId(padded('l', made)), InterfaceId(ifaces[x][*px]), InterfaceId(ifaces[y][*py]), stats);
    ++made;
    ++degree[x];
    ++degree[y];
    enroll(x);
    enroll(y);
    return true;
  };
  auto pick = [&](const std::vector<std::uint32_t>& urn) { return urn[rng.below(urn.size())]; };

  // Spanning tree: hosts attach within their subnet, routers to an earlier
  // router of the same /16 or, for a /16's first subnet, of an earlier /16.
  std::vector<std::uint32_t> routers;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t s = plan[i].subnet;
    const bool first_in_subnet = i % kSubnetSize == 0;
    if (first_in_subnet) {
      if (!routers.empty()) {
        std::vector<std::uint32_t> same_block;
        for (auto r : routers) {
          if (plan[r].block == plan[i].block) same_block.push_back(r);
        }
        std::uint32_t peer = same_block.empty() ? routers[rng.below(routers.size())]
                                                : same_block[rng.below(same_block.size())];
        enroll(i);
        if (!connect(i, peer)) {
          for (auto r : routers) {
            if (connect(i, r)) break;
          }
        }
      } else {
        enroll(i);
      }
      routers.push_back(i);
      continue;
    }
    enroll(i);
    bool linked = false;
    for (int tries = 0; tries < 8 && !linked; ++tries) linked = connect(i, pick(subnet_urn[s]));
    // Hubs run out of ports; fall back to the nearest earlier device.
    for (std::uint32_t j = i; j-- > s * kSubnetSize && !linked;) linked = connect(i, j);
  }

  // Extra links by scope.
  std::size_t attempts = 0;
  const std::size_t max_attempts = 20 * m + 100;
  while (made < m && attempts++ < max_attempts && n > 1) {
    double r = rng.uniform();
    std::uint32_t x = pick(global_urn);
    std::uint32_t y;
    if (r < 0.80 && subnet_urn[plan[x].subnet].size() > 1) {
      y = pick(subnet_urn[plan[x].subnet]);
    } else if (r < 0.95 && block_urn[plan[x].block].size() > 1) {
      y = pick(block_urn[plan[x].block]);
    } else {
      y = pick(global_urn);
    }
    connect(x, y);
  }

  for (std::size_t s = 0; s < subnets; ++s) {
    Vlan vlan;
    vlan.id = VlanId(padded('v', s));
    vlan.tag = static_cast<std::uint16_t>(s % 4094 + 1);
    const Block& blk = block_info[s / kSubnetsPerBlock];
    vlan.name = "subnet-" + std::to_string(blk.a) + "." + std::to_string(blk.b) + "." +
                std::to_string(s % kSubnetsPerBlock);
    for (std::size_t i = s * kSubnetSize; i < std::min(n, (s + 1) * kSubnetSize); ++i) {
      vlan.members.insert(InterfaceId(ifaces[i][0]));
    }
    builder.add_vlan(std::move(vlan));
  }
  return std::move(builder).build_unchecked();
}

}  // namespace netvis
