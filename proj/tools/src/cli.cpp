#include "netvis/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "netvis/config.hpp"
#include "netvis/hier_layout.hpp"
#include "netvis/kml.hpp"
#include "netvis/layout.hpp"
#include "netvis/lod.hpp"
#include "netvis/persistence.hpp"
#include "netvis/server.hpp"
#include "netvis/session.hpp"
#include "netvis/synth.hpp"
#include "netvis/xml_io.hpp"

namespace netvis::cli {
namespace {

namespace fs = std::filesystem;

std::optional<std::string> read_file(const fs::path& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << path.string() << "\n";
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_output(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path.empty() || path == "-") {
    out << text;
    return true;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  file.close();
  if (!file) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

void print_diagnostics(const ParseReport& report, const std::string& file, std::ostream& err) {
  for (const auto& d : report.errors) {
    err << file << ":" << d.line << ":" << d.column << ": error: " << d.message << "\n";
  }
}

std::optional<NetworkSnapshot> load_topology(const std::string& file, std::ostream& err) {
  auto text = read_file(file, err);
  if (!text) return std::nullopt;
  ParseReport report = parse_topology(*text);
  if (!report.ok()) {
    print_diagnostics(report, file, err);
    return std::nullopt;
  }
  return std::move(*report.snapshot);
}

std::optional<std::vector<double>> parse_list(const std::string& text, std::ostream& err) {
  std::vector<double> values;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      err << "error: '" << item << "' is not a number\n";
      return std::nullopt;
    }
  }
  return values;
}

int cmd_validate(const std::string& file, std::ostream& err) {
  auto text = read_file(file, err);
  if (!text) return kExitFailure;
  ParseReport report = parse_topology(*text);
  print_diagnostics(report, file, err);
  return report.ok() ? kExitOk : kExitFailure;
}

struct LayoutArgs {
  std::string file;
  std::string algorithm{kDefaultAlgorithm};
  std::uint64_t seed = 1;
  unsigned iterations = 300;
  std::string grouping = "none";
  std::string out;
};

int cmd_layout(const LayoutArgs& a, std::ostream& out, std::ostream& err) {
  auto snapshot = load_topology(a.file, err);
  if (!snapshot) return kExitFailure;
  auto registry = LayoutRegistry::with_builtins();
  auto algorithm = registry.find(a.algorithm);
  if (!algorithm) {
    err << "error: unknown layout algorithm '" << a.algorithm << "'\n";
    return kExitUsage;
  }
  LayoutParams params;
  params.seed = a.seed;
  params.iterations = a.iterations;
  Expected<LayoutResult, LayoutError> result = unexpected(LayoutError{LayoutErrorCode::kInvalidParams, ""});
  if (a.grouping == "none") {
    result = compute_layout(make_device_graph(*snapshot).graph, params, *algorithm);
  } else {
    auto method = parse_grouping_method(a.grouping);
    if (!method) {
      err << "error: --grouping must be none, ip-prefix or geo\n";
      return kExitUsage;
    }
    GroupingConfig cfg = *method == GroupingMethod::kGeo ? GroupingConfig::geo_defaults() : GroupingConfig{};
    ClusterTree tree = build_hierarchy(*snapshot, cfg);
    auto layout = layout_hierarchy(*snapshot, tree, params, *algorithm);
    if (layout) {
      result = layout->to_result(tree);
    } else {
      result = unexpected(layout.error());
    }
  }
  if (!result) {
    err << "error: layout failed: " << result.error().message << "\n";
    return kExitFailure;
  }
  return write_output(a.out, format_position_table(*result), out, err) ? kExitOk : kExitFailure;
}

struct KmlArgs {
  std::string file;
  std::string levels;
  std::optional<std::uint32_t> emit_levels;
  std::string min_lod;
  bool no_links = false;
  bool meta_edges = false;
  std::string name = "network";
  std::string out;
};

int cmd_export_kml(const KmlArgs& a, std::ostream& out, std::ostream& err) {
  auto snapshot = load_topology(a.file, err);
  if (!snapshot) return kExitFailure;
  GroupingConfig cfg = GroupingConfig::geo_defaults();
  if (!a.levels.empty()) {
    auto levels = parse_list(a.levels, err);
    if (!levels) return kExitUsage;
    cfg.levels = *levels;
  }
  if (auto ok = validate(cfg); !ok) {
    err << "error: --levels: " << ok.error().message << "\n";
    return kExitUsage;
  }
  KmlOptions options;
  options.levels_to_emit = a.emit_levels;
  options.include_links = !a.no_links;
  options.include_meta_edges = a.meta_edges;
  options.document_name = a.name;
  if (!a.min_lod.empty()) {
    auto lod = parse_list(a.min_lod, err);
    if (!lod) return kExitUsage;
    for (double v : *lod) {
      if (v < 0 || v != static_cast<std::uint32_t>(v)) {
        err << "error: --min-lod entries must be non-negative integers\n";
        return kExitUsage;
      }
      options.min_lod_pixels.push_back(static_cast<std::uint32_t>(v));
    }
  }
  ClusterTree tree = build_hierarchy(*snapshot, cfg);
  auto kml = export_kml(*snapshot, tree, options);
  if (!kml) {
    err << "error: " << to_string(kml.error().code) << ": " << kml.error().message << "\n";
    return kml.error().code == KmlErrorCode::kInvalidOptions ? kExitUsage : kExitFailure;
  }
  return write_output(a.out, *kml, out, err) ? kExitOk : kExitFailure;
}

int cmd_compact(const std::string& dir, std::ostream& err) {
  if (auto ok = compact(dir); !ok) {
    err << "error: " << to_string(ok.error().code) << ": " << ok.error().message << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

struct GenArgs {
  std::size_t n = 1000;
  std::optional<std::size_t> m;
  std::uint64_t seed = 1;
  double ip_fraction = 1.0;
  double geo_fraction = 1.0;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  SynthParams params;
  params.devices = a.n;
  params.links = a.m;
  params.seed = a.seed;
  params.ip_fraction = a.ip_fraction;
  params.geo_fraction = a.geo_fraction;
  return write_output(a.out, serialize_topology(generate_topology(params)), out, err) ? kExitOk : kExitFailure;
}

int cmd_serve(const std::string& config_path, std::ostream& err) {
  auto config = load_server_config(config_path);
  if (!config) {
    err << "error: " << config.error().message << "\n";
    return kExitFailure;
  }
  auto listen = split_listen_addr(config->listen_addr);
  if (!listen) {
    err << "error: " << listen.error().message << "\n";
    return kExitFailure;
  }
  std::error_code ec;
  fs::create_directories(config->data_dir, ec);
  if (!fs::exists(config->data_dir / "manifest")) {
    NetworkSnapshot initial;
    if (!config->initial_topology.empty()) {
      auto loaded = load_topology(config->initial_topology.string(), err);
      if (!loaded) return kExitFailure;
      initial = std::move(*loaded);
    }
    if (auto ok = FileEditStore::initialize(config->data_dir, initial); !ok) {
      err << "error: " << ok.error().message << "\n";
      return kExitFailure;
    }
  }
  Recovered recovered;
  auto store = FileEditStore::open(config->data_dir, &recovered);
  if (!store) {
    err << "error: recovery failed: " << to_string(store.error().code) << ": " << store.error().message << "\n";
    return kExitFailure;
  }
  for (const auto& w : recovered.warnings) err << "warning: " << w << "\n";

  ServiceOptions options;
  options.grouping = config->grouping;
  options.algorithm = config->layout_algorithm;
  options.layout = config->layout;
  Service service(std::move(recovered.snapshot), std::shared_ptr<EditStore>(std::move(*store)), options);
  if (auto ok = service.warm_up(); !ok) {
    err << "error: initial layout failed: " << ok.error().message << "\n";
    return kExitFailure;
  }

  ServerOptions server_options;
  server_options.host = listen->first;
  server_options.port = listen->second;
  server_options.static_dir = config->static_dir;
  server_options.admin_token = config->admin_token;
  server_options.refresh_rate_seconds = config->refresh_rate_seconds;
  HttpServer server(service, server_options);
  if (auto ok = server.start(); !ok) {
    err << "error: " << ok.error() << "\n";
    return kExitFailure;
  }
  err << "listening on " << listen->first << ":" << server.port() << "\n";
  server.wait_for_signal();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network topology visualization service", "netvis"};
  app.require_subcommand(1, 1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Recover the store and run the HTTP/WebSocket server");
  serve->add_option("--config", config_path, "Server configuration file")->required();

  std::string validate_file;
  auto* validate_cmd = app.add_subcommand("validate", "Check a topology document; exit 0 iff it is valid");
  validate_cmd->add_option("file", validate_file, "Topology XML")->required();

  LayoutArgs layout;
  auto* layout_cmd = app.add_subcommand("layout", "Write the 'id x y' position table of a topology");
  layout_cmd->add_option("file", layout.file, "Topology XML")->required();
  layout_cmd->add_option("--algo", layout.algorithm, "Layout algorithm");
  layout_cmd->add_option("--seed", layout.seed, "Random seed");
  layout_cmd->add_option("--iterations", layout.iterations, "Layout iterations");
  layout_cmd->add_option("--grouping", layout.grouping, "none, ip-prefix or geo");
  layout_cmd->add_option("--out", layout.out, "Output file (default stdout)");

  KmlArgs kml;
  auto* kml_cmd = app.add_subcommand("export-kml", "Write a KML document of the geo hierarchy");
  kml_cmd->add_option("file", kml.file, "Topology XML")->required();
  kml_cmd->add_option("--levels", kml.levels, "Comma-separated cell sizes in degrees");
  kml_cmd->add_option("--emit-levels", kml.emit_levels, "Number of hierarchy levels to emit");
  kml_cmd->add_option("--min-lod", kml.min_lod, "Comma-separated minLodPixels per level");
  kml_cmd->add_flag("--no-links", kml.no_links, "Omit link LineStrings");
  kml_cmd->add_flag("--meta-edges", kml.meta_edges, "Draw cluster meta-edges");
  kml_cmd->add_option("--name", kml.name, "Document name");
  kml_cmd->add_option("--out", kml.out, "Output file (default stdout)");

  std::string data_dir;
  auto* compact_cmd = app.add_subcommand("compact", "Fold the edit log into a new base");
  compact_cmd->add_option("data_dir", data_dir, "Store directory")->required();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a deterministic synthetic topology");
  gen_cmd->add_option("--n", gen.n, "Device count");
  gen_cmd->add_option("--m", gen.m, "Link count (default 1.5 per device)");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--ip-fraction", gen.ip_fraction, "Share of devices with a management address")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--geo-fraction", gen.geo_fraction, "Share of devices with coordinates")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--out", gen.out, "Output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'netvis --help' for usage\n";
    return kExitUsage;
  }

  if (*serve) return cmd_serve(config_path, err);
  if (*validate_cmd) return cmd_validate(validate_file, err);
  if (*layout_cmd) return cmd_layout(layout, out, err);
  if (*kml_cmd) return cmd_export_kml(kml, out, err);
  if (*compact_cmd) return cmd_compact(data_dir, err);
  if (*gen_cmd) return cmd_gen(gen, out, err);
  return kExitUsage;
}

}  // namespace netvis::cli
