#include "netvis/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace netvis {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && p == text.data() + text.size();
}

}  // namespace

Expected<std::pair<std::string, unsigned short>, ConfigError> split_listen_addr(std::string_view addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    return unexpected(ConfigError{"listen_addr must be host:port"});
  }
  unsigned port = 0;
  if (!parse_number(addr.substr(colon + 1), port) || port > 65535) {
    return unexpected(ConfigError{"listen_addr port must be a number in [0,65535]"});
  }
  return std::pair{std::string(addr.substr(0, colon)), static_cast<unsigned short>(port)};
}

Expected<ServerConfig, ConfigError> parse_server_config(std::string_view text, const std::filesystem::path& base_dir) {
  ServerConfig cfg;
  std::optional<GroupingMethod> method;
  std::optional<std::vector<double>> levels;
  std::optional<std::uint32_t> max_elements;
  std::optional<ExpandPolicy> policy;
  std::optional<double> expand_px;

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    return unexpected(ConfigError{"line " + std::to_string(line_no) + ": " + why});
  };
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) return fail("expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));

    if (key == "listen_addr") {
      if (auto s = split_listen_addr(value); !s) return fail(s.error().message);
      cfg.listen_addr = value;
    } else if (key == "refresh_rate_seconds") {
      if (!parse_number(value, cfg.refresh_rate_seconds) || cfg.refresh_rate_seconds < 1) {
        return fail("refresh_rate_seconds must be an integer >= 1");
      }
    } else if (key == "max_render_elements") {
      std::uint32_t v = 0;
      if (!parse_number(value, v) || v == 0) return fail("max_render_elements must be a positive integer");
      max_elements = v;
    } else if (key == "grouping_method") {
      method = parse_grouping_method(value);
      if (!method) return fail("grouping_method must be ip-prefix or geo");
    } else if (key == "grouping_levels") {
      std::vector<double> parsed;
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        double v = 0;
        std::string t = trim(item);
        if (!parse_number(std::string_view(t), v)) return fail("grouping_levels must be comma-separated numbers");
        parsed.push_back(v);
      }
      levels = std::move(parsed);
    } else if (key == "expand_policy") {
      policy = parse_expand_policy(value);
      if (!policy) return fail("expand_policy must be click, zoom or both");
    } else if (key == "auto_expand_px") {
      double v = 0;
      if (!parse_number(std::string_view(value), v)) return fail("auto_expand_px must be a number");
      expand_px = v;
    } else if (key == "layout_algorithm") {
      cfg.layout_algorithm = value;
    } else if (key == "layout_iterations") {
      if (!parse_number(value, cfg.layout.iterations)) return fail("layout_iterations must be an integer");
    } else if (key == "layout_seed") {
      if (!parse_number(value, cfg.layout.seed)) return fail("layout_seed must be an integer");
    } else if (key == "layout_theta") {
      if (!parse_number(std::string_view(value), cfg.layout.theta)) return fail("layout_theta must be a number");
    } else if (key == "layout_cooling") {
      if (!parse_number(std::string_view(value), cfg.layout.cooling)) return fail("layout_cooling must be a number");
    } else if (key == "layout_width") {
      if (!parse_number(std::string_view(value), cfg.layout.width)) return fail("layout_width must be a number");
    } else if (key == "layout_height") {
      if (!parse_number(std::string_view(value), cfg.layout.height)) return fail("layout_height must be a number");
    } else if (key == "data_dir") {
      cfg.data_dir = path_of(value);
    } else if (key == "initial_topology") {
      cfg.initial_topology = path_of(value);
    } else if (key == "static_dir") {
      cfg.static_dir = path_of(value);
    } else if (key == "admin_token") {
      cfg.admin_token = value;
    } else {
      return fail("unknown key '" + key + "'");
    }
  }

  if (method) cfg.grouping = *method == GroupingMethod::kGeo ? GroupingConfig::geo_defaults() : GroupingConfig{};
  if (levels) cfg.grouping.levels = *levels;
  if (max_elements) cfg.grouping.max_render_elements = *max_elements;
  if (policy) cfg.grouping.expand_policy = *policy;
  if (expand_px) cfg.grouping.auto_expand_px = *expand_px;
  if (auto s = validate(cfg.grouping); !s) return unexpected(ConfigError{"grouping: " + s.error().message});
  if (auto s = check_params(cfg.layout); !s) return unexpected(ConfigError{"layout: " + s.error().message});
  if (cfg.data_dir.is_relative() && !base_dir.empty() && cfg.data_dir == "data") cfg.data_dir = base_dir / "data";
  return cfg;
}

Expected<ServerConfig, ConfigError> load_server_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return unexpected(ConfigError{"cannot read " + file.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_server_config(buf.str(), file.parent_path());
}

}  // namespace netvis
