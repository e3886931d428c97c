#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "netvis/layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/result.hpp"

namespace netvis {

/// Line-oriented "key = value" server configuration. '#' starts a comment.
///
///   listen_addr            host:port (default 127.0.0.1:8080)
///   refresh_rate_seconds   stats push period, >= 1 (default 30)
///   max_render_elements    render-set bound (default 2000)
///   grouping_method        ip-prefix | geo
///   grouping_levels        comma-separated prefix lengths or cell sizes
///   expand_policy          click | zoom | both
///   auto_expand_px         on-screen size that opens a cloud (default 150)
///   layout_algorithm       registered algorithm name (default fdp-bh)
///   layout_iterations, layout_seed, layout_theta, layout_cooling,
///   layout_width, layout_height
///   data_dir               store directory (default ./data)
///   initial_topology       XML used when data_dir holds no store yet
///   static_dir             files served under /
///   admin_token            bearer token for POST /api/v1/topology
struct ServerConfig {
  std::string listen_addr = "127.0.0.1:8080";
  unsigned refresh_rate_seconds = 30;
  GroupingConfig grouping;
  std::string layout_algorithm = "fdp-bh";
  LayoutParams layout;
  std::filesystem::path data_dir = "data";
  std::filesystem::path initial_topology;
  std::filesystem::path static_dir;
  std::string admin_token;
};

/// Relative paths are resolved against `base_dir`.
Expected<ServerConfig, ConfigError> parse_server_config(std::string_view text,
                                                        const std::filesystem::path& base_dir = {});
Expected<ServerConfig, ConfigError> load_server_config(const std::filesystem::path& file);

/// Splits "host:port"; the port must be numeric.
Expected<std::pair<std::string, unsigned short>, ConfigError> split_listen_addr(std::string_view addr);

}  // namespace netvis
