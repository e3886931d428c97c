#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "netvis/hier_layout.hpp"
#include "netvis/layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/persistence.hpp"
#include "netvis/render.hpp"
#include "netvis/topology.hpp"

namespace netvis {

inline constexpr int kProtocolVersion = 1;

/// Receives serialized server messages for one connection, in generation
/// order. Called with internal locks held: it must not call back into the
/// Service and should only enqueue.
using MessageSink = std::function<void(std::string)>;

struct ServiceOptions {
  GroupingConfig grouping;
  std::string algorithm{kDefaultAlgorithm};
  LayoutParams layout;
  /// Clock used to stamp accepted edits.
  std::function<Timestamp()> clock;
};

/// One bounded, laid-out view of the current snapshot for a (grouping,
/// algorithm) pair. Shared by every session using that pair.
struct View {
  GroupingConfig grouping;
  std::string algorithm;
  std::shared_ptr<const NetworkSnapshot> snapshot;
  std::shared_ptr<const ClusterTree> tree;
  std::shared_ptr<const HierarchyLayout> layout;
  std::shared_ptr<const SceneIndex> scene;
};

struct UploadError {
  std::string message;
};

struct StatsError {
  std::string message;
};

/// Transport-independent protocol endpoint. Connections feed client text
/// messages to handle_message(); replies and broadcasts go to the sink
/// registered by the session's Hello.
///
/// Locking: commands of one session are serialized by its command mutex.
/// Edits, uploads and view builds are serialized by the edit mutex. Shared
/// state (snapshot, views, stats) sits behind a reader-writer lock and is
/// replaced wholesale. Per-session output is guarded by the session's state
/// mutex, which the writer takes only after publishing.
class Service {
 public:
  /// `store` may be null for a purely in-memory service.
  Service(NetworkSnapshot initial, std::shared_ptr<EditStore> store, ServiceOptions options,
          LayoutRegistry registry = LayoutRegistry::with_builtins());
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// `reply` receives Welcome (and becomes the session's sink) or errors that
  /// cannot be attributed to a session. Returns the id of a session created
  /// by a Hello, empty otherwise.
  std::string handle_message(std::string_view text, const MessageSink& reply);
  void close_session(const std::string& session);

  /// Admin upload: validates, rebases the store and re-renders every session.
  Status<UploadError> replace_topology(NetworkSnapshot snapshot);

  /// Live stats overlay; not journaled.
  Status<StatsError> update_link_stats(const LinkId& link, const LinkStats& stats);
  /// One stats period: a StatsUpdate per session listing visible links whose
  /// stats changed since that session's previous push.
  void push_stats();

  /// Builds the view for the defaults so the first SetViewport is fast.
  Status<LayoutError> warm_up();

  std::shared_ptr<const NetworkSnapshot> snapshot() const;
  /// Snapshot with the stats overlay folded in, for export.
  NetworkSnapshot snapshot_with_stats() const;
  std::size_t session_count() const;
  std::string health_json() const;

  /// Fresh viewport_query for the session's current state.
  std::optional<RenderSet> current_query(const std::string& session);
  /// The render set the session's client holds according to the server.
  std::optional<RenderSet> last_render_set(const std::string& session);

 private:
  struct Session;
  struct Shared;
  struct Message;

  using ViewPtr = std::shared_ptr<const View>;

  std::shared_ptr<Session> find_session(const std::string& id) const;

  Expected<ViewPtr, LayoutError> ensure_view(const GroupingConfig& grouping, const std::string& algorithm);
  Expected<ViewPtr, LayoutError> build_view(const std::shared_ptr<const NetworkSnapshot>& snapshot,
                                            const GroupingConfig& grouping, const std::string& algorithm) const;
  Expected<ViewPtr, LayoutError> update_view(const View& prev, const std::shared_ptr<const NetworkSnapshot>& next,
                                             const NetworkSnapshot& before, const EditOp& op) const;
  ViewPtr lookup_view(const std::string& key) const;

  /// Re-renders one session; needs its state mutex. False when the view for
  /// the session is not current.
  bool deliver(Session& session);
  /// Ensures the view, then delivers; retries if an edit overtakes it.
  void refresh(Session& session);
  void broadcast();

  std::string on_hello(const Message& msg, const MessageSink& reply);
  void on_command(Session& session, const Message& msg);
  void on_edit(Session& session, const Message& msg);
  void on_detail(Session& session, const Message& msg);

  std::string new_session_id();
  void send(Session& session, std::string text);
  void send_error(Session& session, std::string_view code, std::string_view message);
  std::shared_ptr<const LayoutAlgorithm> algorithm(const std::string& name) const;

  ServiceOptions options_;
  LayoutRegistry registry_;
  std::shared_ptr<EditStore> store_;

  std::mutex edit_mutex_;
  mutable std::shared_mutex shared_mutex_;
  std::unique_ptr<Shared> shared_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t session_counter_ = 0;
  std::uint64_t session_salt_ = 0;
  std::uint64_t memory_seq_ = 0;
};

}  // namespace netvis
