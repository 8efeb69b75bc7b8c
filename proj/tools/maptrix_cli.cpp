// maptrix: one-shot rendering and the HTTP service.
#include "maptrix/errors.hpp"
#include "maptrix/flow_service.hpp"
#include "maptrix/layout_json.hpp"
#include "maptrix/maptrix_assembler.hpp"
#include "maptrix/svg_renderer.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace maptrix;

constexpr int kUsageExit = 2;

const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  other failure (I/O, unexpected error)\n"
    "  2  bad command line\n"
    "  3  IngestError (ids in the CSV and boundaries differ, unreadable input)\n"
    "  4  ValidationError\n"
    "  5  GeometryError\n"
    "  6  RangeError\n"
    "  7  AggregationError\n"
    "  8  ContiguityError\n"
    "  9  SteepLeaderError (the message suggests a feasible --k)\n"
    " 10  ModeError\n"
    " 11  DegenerateSiteError\n";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw std::runtime_error("cannot write '" + path + "'");
}

std::array<double, 2> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("--filter expects lo:hi");
  try {
    std::size_t used = 0;
    const double lo = std::stod(text.substr(0, colon), &used);
    const std::string hi_text = text.substr(colon + 1);
    std::size_t used_hi = 0;
    const double hi = std::stod(hi_text, &used_hi);
    if (used != colon || used_hi != hi_text.size()) throw std::invalid_argument("trailing");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ValidationError("--filter expects two numbers as lo:hi, got '" + text + "'");
  }
}

struct RenderArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string mode = "same-country";
  std::string filter;
  std::string group_file;
  std::string style_file;
  std::string layout_json;
  std::string diagnostics;
  std::string projection = "equirectangular";
  double w = 1.0;
  double k = 1.0;
  bool legacy_bars = false;
  bool log_scale = false;
  bool no_refine = false;
};

int run_render(const RenderArgs& a) {
  LayoutConfig config;
  config.labelling.k = a.k;
  config.refinement.w = a.w;
  config.refine = !a.no_refine;
  StyleSpec style;
  if (!a.style_file.empty()) {
    std::istringstream in(read_file(a.style_file));
    style = load_style(in);
  }
  style.legacy_bars = style.legacy_bars || a.legacy_bars;
  style.log_scale = style.log_scale || a.log_scale;
  config.style = style;

  Projection projection;
  if (a.projection == "planar") projection.kind = Projection::Kind::planar;

  const bool two_country = a.mode == "two-country";
  if (two_country != (a.inputs.size() == 3)) {
    throw ModeError(two_country ? "two-country mode takes FLOWS ORIGIN_BOUNDARIES DEST_BOUNDARIES"
                                : "same-country mode takes FLOWS BOUNDARIES");
  }
  std::istringstream flows(read_file(a.inputs[0]));
  std::istringstream bounds(read_file(a.inputs[1]));
  std::shared_ptr<const FlowDataset> data;
  if (two_country) {
    std::istringstream dest(read_file(a.inputs[2]));
    data = std::make_shared<const FlowDataset>(load_two_country(flows, bounds, dest, projection));
  } else {
    data = std::make_shared<const FlowDataset>(load_dataset(flows, bounds, projection));
  }

  SelectionState selection;
  if (!a.filter.empty()) selection.range = parse_range(a.filter);
  if (!a.group_file.empty()) {
    const auto j = nlohmann::json::parse(read_file(a.group_file), nullptr, false);
    if (j.is_discarded()) throw ValidationError("group file is not valid JSON");
    selection.groups = groups_from_json(j);
  }
  // Range errors surface before any layout work.
  if (selection.range) filter_by_range(FlowDataset(), (*selection.range)[0], (*selection.range)[1]);

  MapTrixLayout result = two_country ? layout_two_country(data, config) : layout(data, config);
  if (selection.range || !selection.groups.empty()) result = relayout(result, selection);

  write_file(a.out, render(result, style));
  if (!a.layout_json.empty()) write_file(a.layout_json, layout_to_json(result).dump(1) + "\n");
  if (!a.diagnostics.empty()) {
    std::ostringstream diag;
    std::vector<std::string> ids;
    for (const auto& r : result.origin_panel.regions) ids.push_back(r.id);
    if (config.refine) write_diagnostics(result.origin_refinement, ids, diag, "origin");
    ids.clear();
    for (const auto& r : result.destination_panel.regions) ids.push_back(r.id);
    if (config.refine) write_diagnostics(result.dest_refinement, ids, diag, "destination");
    write_file(a.diagnostics, diag.str());
  }
  std::cerr << "wrote " << a.out << ": " << result.matrix.rows << "x" << result.matrix.cols << " matrix, "
            << result.leader_count() << " leaders, " << (result.origin_crossings + result.destination_crossings)
            << " crossings\n";
  return 0;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot_dir;
  std::string static_dir;
  std::string style_file;
  std::size_t cache_size = 16;
};

int run_serve(const ServeArgs& a) {
  ServiceConfig config;
  config.cache_size = a.cache_size;
  if (!a.snapshot_dir.empty()) config.snapshot_dir = a.snapshot_dir;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  if (!a.style_file.empty()) {
    std::istringstream in(read_file(a.style_file));
    config.style = load_style(in);
    config.layout.style = config.style;
  }
  FlowService service(config);
  httplib::Server server;
  service.install(server);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on http://" << a.host << ":" << a.port << " (" << service.session_count()
            << " sessions restored)\n";
  if (!server.listen(a.host, a.port)) {
    std::cerr << "error: cannot listen on " << a.host << ":" << a.port << '\n';
    return 1;
  }
  g_server = nullptr;
  service.snapshot();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MapTrix flow layout: OD matrix plus origin and destination maps joined by leaders"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Lay out a dataset and write an SVG");
  render_cmd->add_option("inputs", render_args.inputs,
                         "FLOWS BOUNDARIES (same-country) or FLOWS ORIGIN_BOUNDARIES DEST_BOUNDARIES (two-country)")
      ->required()
      ->expected(2, 3)
      ->check(CLI::ExistingFile);
  render_cmd->add_option("-o,--out", render_args.out, "SVG output path")->required();
  render_cmd->add_option("--mode", render_args.mode, "same-country or two-country")
      ->check(CLI::IsMember({"same-country", "two-country"}));
  render_cmd->add_option("--filter", render_args.filter, "keep flows in lo:hi");
  render_cmd->add_option("--group", render_args.group_file, "JSON file of region groups to merge")
      ->check(CLI::ExistingFile);
  render_cmd->add_option("--w", render_args.w, "weight of the even-separation term");
  render_cmd->add_option("--k", render_args.k, "gradient of the leader diagonals");
  render_cmd->add_option("--style", render_args.style_file, "JSON style overrides")->check(CLI::ExistingFile);
  render_cmd->add_flag("--legacy-bars", render_args.legacy_bars, "draw total-flow bars along the matrix");
  render_cmd->add_flag("--log-scale", render_args.log_scale, "colour cells by log flow");
  render_cmd->add_flag("--no-refine", render_args.no_refine, "keep leaders at the region anchors");
  render_cmd->add_option("--layout-json", render_args.layout_json, "also write the layout JSON");
  render_cmd->add_option("--diagnostics", render_args.diagnostics, "write refinement diagnostics (JSON lines)");
  render_cmd->add_option("--projection", render_args.projection, "equirectangular or planar")
      ->check(CLI::IsMember({"equirectangular", "planar"}));

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve_args.host, "bind address")->envname("MAPTRIX_HOST");
  serve_cmd->add_option("--port", serve_args.port, "TCP port")->envname("MAPTRIX_PORT");
  serve_cmd->add_option("--snapshot-dir", serve_args.snapshot_dir, "persist sessions here on shutdown")
      ->envname("MAPTRIX_SNAPSHOT_DIR");
  serve_cmd->add_option("--static-dir", serve_args.static_dir, "serve explorer assets from here")
      ->envname("MAPTRIX_STATIC_DIR");
  serve_cmd->add_option("--style", serve_args.style_file, "JSON style overrides")->envname("MAPTRIX_STYLE");
  serve_cmd->add_option("--cache-size", serve_args.cache_size, "cached layouts per session")
      ->envname("MAPTRIX_CACHE_SIZE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (*render_cmd) return run_render(render_args);
    return run_serve(serve_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << '\n';
    return exit_code_for(e.name());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
