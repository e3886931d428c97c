#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "netvis/edit.hpp"
#include "netvis/lod.hpp"
#include "netvis/render.hpp"
#include "netvis/result.hpp"
#include "netvis/topology.hpp"

// Wire encoding shared by the session protocol and the edit log. Field names
// are snake_case; positions are [x, y] arrays; timestamps are milliseconds
// since the Unix epoch. from_json overloads throw nlohmann::json exceptions
// or CodecError on malformed input.

namespace netvis {

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class Tag>
void to_json(nlohmann::json& j, const Id<Tag>& id) {
  j = id.str();
}
template <class Tag>
void from_json(const nlohmann::json& j, Id<Tag>& id) {
  id = Id<Tag>(j.get<std::string>());
}

void to_json(nlohmann::json& j, const Point& p);
void from_json(const nlohmann::json& j, Point& p);
void to_json(nlohmann::json& j, const LinkStats& s);
void from_json(const nlohmann::json& j, LinkStats& s);
void to_json(nlohmann::json& j, const EditOp& op);
void from_json(const nlohmann::json& j, EditOp& op);
void to_json(nlohmann::json& j, const Viewport& v);
void from_json(const nlohmann::json& j, Viewport& v);
void to_json(nlohmann::json& j, const GroupingConfig& c);
void from_json(const nlohmann::json& j, GroupingConfig& c);
void to_json(nlohmann::json& j, const MetaEdge& e);
void from_json(const nlohmann::json& j, MetaEdge& e);
void to_json(nlohmann::json& j, const RenderCluster& c);
void from_json(const nlohmann::json& j, RenderCluster& c);
void to_json(nlohmann::json& j, const RenderDevice& d);
void from_json(const nlohmann::json& j, RenderDevice& d);
void to_json(nlohmann::json& j, const RenderEdge& e);
void from_json(const nlohmann::json& j, RenderEdge& e);
void to_json(nlohmann::json& j, const RenderSet& s);
void from_json(const nlohmann::json& j, RenderSet& s);
void to_json(nlohmann::json& j, const RenderDelta& d);
void from_json(const nlohmann::json& j, RenderDelta& d);

std::int64_t to_millis(Timestamp t);
Timestamp from_millis(std::int64_t ms);

/// Compact single-line encoding used for log records.
std::string encode_edit(const EditOp& op);
Expected<EditOp, std::string> decode_edit(std::string_view text);

}  // namespace netvis
