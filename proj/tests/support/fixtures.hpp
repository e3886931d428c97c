#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netvis/edit.hpp"
#include "netvis/render.hpp"
#include "netvis/session.hpp"
#include "netvis/topology.hpp"

namespace netvis::testing {

/// Two devices with one interface each and one link.
std::string minimal_xml();
/// Link endpoint "if-99" is undefined; the link sits on line 8.
std::string dangling_xml();
inline constexpr int kDanglingLine = 8;

/// Six devices in 10.1.0.0/16 and 10.2.0.0/16 with coordinates, a VLAN 10
/// holding both interfaces of d1, and five links.
NetworkSnapshot small_network();

/// Removed recursively on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::string& bytes);

/// Random op against `s` that apply_edit accepts.
EditOp random_valid_edit(const NetworkSnapshot& s, std::mt19937_64& rng);

/// One scripted protocol client: collects everything the service sends to
/// it and mirrors the render set the way a browser would.
class ScriptedClient {
 public:
  explicit ScriptedClient(Service& service) : service_(service) {}

  /// Sends Hello{proto_version} and returns the first reply.
  nlohmann::json hello(int proto_version = 1);
  const std::string& session() const { return session_; }

  /// Adds "session" and sends; returns messages received since.
  std::vector<nlohmann::json> send(nlohmann::json message);
  std::vector<nlohmann::json> send_raw(const std::string& text);
  /// Pending messages. Render replaces the mirrored scene, Delta applies to it.
  std::vector<nlohmann::json> take();

  const std::optional<RenderSet>& scene() const { return scene_; }
  /// False once a Delta arrived that did not start from the mirrored versions.
  bool consistent() const { return consistent_; }

 private:
  MessageSink sink();

  Service& service_;
  std::string session_;
  std::mutex mutex_;
  std::deque<std::string> inbox_;
  std::optional<RenderSet> scene_;
  bool consistent_ = true;
};

nlohmann::json viewport_json(const Viewport& v);

}  // namespace netvis::testing
