#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "normint/discontinuity_opt.hpp"
#include "normint/io_formats.hpp"
#include "normint/metrics.hpp"
#include "normint/parallel.hpp"
#include "normint/scene_synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace normint {
namespace {

struct RunConfig {
  std::string normals;
  std::string mask;
  std::string out;
  std::string gt;
  std::string camera = "ortho";
  double focal = 0.0;
  std::vector<double> center;
  SolverConfig solver;
  std::uint64_t seed = 0;

  // synth
  std::string scene = "step";
  int size = 64;
  double jump = 5.0;
  int teeth = 4;
  double depth = 5.0;
  double radius = 20.0;
  std::vector<double> slope = {0.75, -0.3};
  double side_slope = 1.0;
  double noise = 0.0;
  int holes = 0;
  double hole_radius = 3.0;

  // eval
  std::string pred;
  std::string gauge = "median";
  std::string name;
  std::string record;
};

void add_io_options(CLI::App& cmd, RunConfig& c, bool gt) {
  cmd.add_option("--normals", c.normals, "16-bit RGB normal map PNG");
  cmd.add_option("--mask", c.mask, "8-bit mask PNG, intersected with the valid normals");
  if (gt) cmd.add_option("--gt", c.gt, "ground-truth depth PFM for a summary MADE and heatmap");
}

void add_camera_options(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--camera", c.camera, "camera model")
      ->check(CLI::IsMember({"ortho", "persp"}))
      ->capture_default_str();
  cmd.add_option("--focal", c.focal, "focal length in pixels (persp)");
  cmd.add_option("--center", c.center, "principal point cu,cv (default: image centre)")
      ->delimiter(',')
      ->expected(2);
}

void add_solver_options(CLI::App& cmd, RunConfig& c, bool full) {
  SolverConfig& s = c.solver;
  cmd.add_option("--cg-tol", s.cg_tol, "relative residual tolerance of each CG solve")->capture_default_str();
  cmd.add_option("--cg-max-iter", s.cg_max_iter, "CG iteration budget per solve")->capture_default_str();
  if (!full) return;
  cmd.add_option("--lambda-soft", s.lambda_soft, "lambda_soft")->capture_default_str();
  cmd.add_option("--lambda-hard", s.lambda_hard, "lambda_hard")->capture_default_str();
  cmd.add_option("--nmax", s.n_max, "outer iterations N_max")->capture_default_str();
  cmd.add_option("--k", s.k, "filter sharpness k")->capture_default_str();
  cmd.add_option("--tau", s.tau, "tangentness offset tau")->capture_default_str();
  cmd.add_flag("--early-stop,!--no-early-stop", s.early_stop, "stop once E_v + lambda_c E_disc settles")
      ->capture_default_str();
  cmd.add_option("--early-stop-tol", s.early_stop_tol, "relative change per cycle for --early-stop")
      ->capture_default_str();
  cmd.add_option("--snapshot-every", s.snapshot_every, "write depth and g' every N iterations (0 = off)")
      ->capture_default_str();
}

void add_synth_options(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--scene", c.scene, "scene kind")
      ->check(CLI::IsMember({"plane", "step", "comb", "sphere"}))
      ->capture_default_str();
  cmd.add_option("--size", c.size, "image side in pixels")->capture_default_str();
  cmd.add_option("--jump", c.jump, "step jump h")->capture_default_str();
  cmd.add_option("--teeth", c.teeth, "comb teeth")->capture_default_str();
  cmd.add_option("--depth", c.depth, "comb tooth height")->capture_default_str();
  cmd.add_option("--radius", c.radius, "sphere radius")->capture_default_str();
  cmd.add_option("--slope", c.slope, "plane slopes a,b")->delimiter(',')->expected(2)->capture_default_str();
  cmd.add_option("--side-slope", c.side_slope, "slope of the step's far side and the comb faces")
      ->capture_default_str();
  cmd.add_option("--noise", c.noise, "gradient noise sigma")->capture_default_str();
  cmd.add_option("--holes", c.holes, "number of random disk holes")->capture_default_str();
  cmd.add_option("--hole-radius", c.hole_radius, "hole radius in pixels")->capture_default_str();
}

struct Command {
  std::string name;
  std::string help;
  std::function<void(CLI::App&, RunConfig&)> add_options;
  std::function<int(const RunConfig&)> run;
};

constexpr const char* kConfigHelp =
    "Config file: flat `key = value` lines ('#' starts a comment). Keys are the long\n"
    "option names without dashes (`lambda_soft` and `lambda-soft` both work);\n"
    "flags given on the command line override the file.";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Turns the config file into command-line tokens for every key the command
// line did not already set.
std::vector<std::string> config_tokens(const CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    const CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "help" || key == "config")
      throw Error(path + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw Error(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (opt->count() > 0) continue;
    if (opt->get_expected_min() == 0) {
      tokens.push_back("--" + key + "=" + value);
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

CameraModel make_camera(const RunConfig& c, int width, int height) {
  if (c.camera == "ortho") return CameraModel::orthographic();
  const double cu = c.center.size() == 2 ? c.center[0] : 0.5 * (width - 1);
  const double cv = c.center.size() == 2 ? c.center[1] : 0.5 * (height - 1);
  return CameraModel::perspective(c.focal, cu, cv);
}

NormalMap load_normals(const RunConfig& c) {
  if (c.normals.empty()) throw Error("--normals is required");
  NormalMap normals = read_normal_map(c.normals);
  if (!c.mask.empty()) {
    const Mask extra = read_mask_png(c.mask);
    if (!extra.same_shape(normals.mask)) throw Error("mask size does not match the normal map");
    for (int y = 0; y < extra.height(); ++y)
      for (int x = 0; x < extra.width(); ++x)
        if (!extra(x, y)) normals.mask(x, y) = 0;
  }
  return normals;
}

fs::path output_dir(const RunConfig& c) {
  if (c.out.empty()) throw Error("--out is required");
  fs::create_directories(c.out);
  return c.out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void write_gprime_image(const PixelGraph& graph, const std::vector<double>& gprime, const fs::path& path) {
  const double range = max_abs(gprime);
  write_gprime_png(graph, gprime, range > 0.0 ? range : 1.0, path);
}

// Prints MADE against --gt and writes the error heatmap next to the depth.
void compare_with_gt(const RunConfig& c, const DepthMap& depth, const Mask& mask, const fs::path& dir) {
  if (c.gt.empty()) return;
  const DepthMap gt = read_depth_pfm(c.gt);
  const MadeResult m = made(depth, gt, mask);
  DepthMap err(depth.width(), depth.height(), kNoDepth);
  double hi = 0.0;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (mask(x, y) && std::isfinite(depth(x, y)) && std::isfinite(gt(x, y))) {
        err(x, y) = std::abs(depth(x, y) - gt(x, y) - m.offset);
        hi = std::max(hi, err(x, y));
      }
  write_heatmap_png(err, 0.0, hi > 0.0 ? hi : 1.0, dir / "heatmap.png");
  std::printf("MADE vs %s: %.6g (offset %.6g, heatmap range [0, %.6g])\n", c.gt.c_str(), m.made, m.offset, hi);
}

json solver_json(const SolverConfig& s) {
  return json{{"lambda_soft", s.lambda_soft}, {"lambda_hard", s.lambda_hard}, {"lambda_center", s.lambda_center()},
              {"nmax", s.n_max},           {"k", s.k},                     {"tau", s.tau},
              {"cg_tol", s.cg_tol},        {"cg_max_iter", s.cg_max_iter}, {"early_stop", s.early_stop}};
}

json camera_json(const CameraModel& cam) {
  json j{{"model", cam.is_perspective() ? "persp" : "ortho"}};
  if (cam.is_perspective()) {
    j["focal"] = cam.focal;
    j["center"] = {cam.cu, cam.cv};
  }
  return j;
}

void write_trace(const OptimizeResult& r, const SolverConfig& s, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  json header{{"record", "header"},
              {"mode", r.trace.mode == DepthMode::Perspective ? "perspective" : "orthographic"},
              {"camera", camera_json(s.camera)},
              {"config", solver_json(s)},
              {"vertices", r.graph.vertex_count()},
              {"aux_edges", r.graph.aux_edges().size()}};
  out << header.dump() << '\n';
  for (const IterationRecord& it : r.trace.iterations) {
    json j{{"record", "iteration"},
           {"n", it.iteration},
           {"lambda", it.lambda},
           {"e_data", it.e_data},
           {"e_disc", it.e_disc},
           {"nonzero_fraction", it.nonzero_fraction},
           {"cg_iterations", it.cg.iterations},
           {"cg_residual", it.cg.relative_residual}};
    out << j.dump() << '\n';
  }
  out << json{{"record", "end"}, {"iterations", r.trace.iterations.size()}, {"stopped_early", r.trace.stopped_early}}
             .dump()
      << '\n';
}

int cmd_integrate(const RunConfig& c) {
  const NormalMap normals = load_normals(c);
  SolverConfig cfg = c.solver;
  cfg.camera = make_camera(c, normals.width(), normals.height());
  const fs::path dir = output_dir(c);
  const OptimizeResult r = optimize(normals, cfg);

  write_depth_pfm(r.depth_map, dir / "depth.pfm");
  write_gprime_image(r.graph, r.gprime, dir / "gprime.png");
  write_obj(export_quad_mesh(r.graph, r.depth, cfg.camera), dir / "mesh.obj");
  write_trace(r, cfg, dir / "trace.jsonl");
  if (!r.trace.snapshots.empty()) {
    const fs::path snap_dir = dir / "snapshots";
    fs::create_directories(snap_dir);
    for (const Snapshot& s : r.trace.snapshots) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "%06d", s.iteration);
      const DepthSolution d{s.values, r.depth.mode};
      write_depth_pfm(average_to_depth_map(r.graph, d), snap_dir / (std::string("depth_") + stem + ".pfm"));
      write_gprime_image(r.graph, s.gprime, snap_dir / (std::string("gprime_") + stem + ".png"));
    }
  }

  const IterationRecord& last = r.trace.iterations.back();
  std::printf("iterations %zu%s, E_v %.6g, E_disc %.6g, nonzero g' %.6g\n", r.trace.iterations.size(),
              r.trace.stopped_early ? " (early stop)" : "", last.e_data, last.e_disc, last.nonzero_fraction);
  compare_with_gt(c, r.depth_map, normals.mask, dir);
  return 0;
}

int cmd_poisson(const RunConfig& c) {
  const NormalMap normals = load_normals(c);
  const CameraModel camera = make_camera(c, normals.width(), normals.height());
  const fs::path dir = output_dir(c);
  const PixelGraph graph = build_graph(normals.mask);
  SolveReport report;
  const DepthSolution d =
      poisson_baseline(normals, camera, graph, CgOptions{c.solver.cg_tol, c.solver.cg_max_iter}, 1.0, &report);
  const DepthMap depth = average_to_depth_map(graph, d);
  write_depth_pfm(depth, dir / "depth.pfm");
  write_obj(export_quad_mesh(graph, d, camera), dir / "mesh.obj");
  std::printf("CG iterations %d, relative residual %.3g\n", report.iterations, report.relative_residual);
  compare_with_gt(c, depth, normals.mask, dir);
  return 0;
}

int cmd_mesh(const RunConfig& c) {
  const NormalMap normals = load_normals(c);
  SolverConfig cfg = c.solver;
  cfg.camera = make_camera(c, normals.width(), normals.height());
  if (c.out.empty()) throw Error("--out is required");
  const fs::path out = c.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const OptimizeResult r = optimize(normals, cfg);
  const QuadMesh mesh = export_quad_mesh(r.graph, r.depth, cfg.camera);
  write_obj(mesh, out);
  std::printf("wrote %zu vertices, %zu faces to %s\n", mesh.vertices.size(), mesh.faces.size(), out.c_str());
  return 0;
}

int cmd_synth(const RunConfig& c) {
  Scene s;
  if (c.scene == "plane") s = make_plane(c.slope[0], c.slope[1], c.size, c.size);
  else if (c.scene == "step") s = make_step(c.jump, c.size, c.side_slope);
  else if (c.scene == "comb") s = make_comb(c.teeth, c.depth, c.size, c.side_slope);
  else s = make_sphere_on_plane(c.radius, c.size);
  s = add_gradient_noise(std::move(s), c.noise, c.seed);
  s = punch_holes(std::move(s), HoleSpec{c.holes, c.hole_radius}, c.seed + 1);

  const fs::path dir = output_dir(c);
  write_normal_map(s.normals, dir / "normals.png");
  write_mask_png(s.normals.mask, dir / "mask.png");
  write_depth_pfm(s.gt_depth, dir / "gt.pfm");
  json params(s.params);
  std::ofstream(dir / "scene.json") << json{{"scene", s.name}, {"seed", c.seed}, {"params", params}}.dump(2) << '\n';
  std::printf("%s scene %dx%d, %zu masked pixels -> %s\n", s.name.c_str(), s.width(), s.height(),
              count_masked(s.normals.mask), dir.c_str());
  return 0;
}

int cmd_eval(const RunConfig& c) {
  if (c.pred.empty() || c.gt.empty()) throw Error("--pred and --gt are required");
  const DepthMap pred = read_depth_pfm(c.pred);
  const DepthMap gt = read_depth_pfm(c.gt);
  Mask mask = c.mask.empty() ? Mask(gt.width(), gt.height(), 1) : read_mask_png(c.mask);
  const MadeResult m = made(pred, gt, mask, c.gauge == "none" ? Gauge::None : Gauge::Median);
  EvalReport report;
  report.name = c.name.empty() ? c.pred : c.name;
  report.made = m.made;
  report.offset = m.offset;
  std::printf("%s\n", report.to_text().c_str());
  const std::string line = report.to_json_line();
  std::printf("%s\n", line.c_str());
  if (!c.record.empty()) {
    std::ofstream out(c.record, std::ios::app);
    if (!out) throw Error("cannot append to " + c.record);
    out << line << '\n';
  }
  return 0;
}

std::vector<Command> commands() {
  return {
      {"integrate", "Integrate a normal map with discontinuity optimization",
       [](CLI::App& cmd, RunConfig& c) {
         add_io_options(cmd, c, true);
         cmd.add_option("--out", c.out, "output directory");
         add_camera_options(cmd, c);
         add_solver_options(cmd, c, true);
       },
       cmd_integrate},
      {"poisson", "Plain least-squares (Poisson) integration",
       [](CLI::App& cmd, RunConfig& c) {
         add_io_options(cmd, c, true);
         cmd.add_option("--out", c.out, "output directory");
         add_camera_options(cmd, c);
         add_solver_options(cmd, c, false);
       },
       cmd_poisson},
      {"mesh", "Integrate and write only the per-pixel quad mesh",
       [](CLI::App& cmd, RunConfig& c) {
         add_io_options(cmd, c, false);
         cmd.add_option("--out", c.out, "output OBJ path");
         add_camera_options(cmd, c);
         add_solver_options(cmd, c, true);
       },
       cmd_mesh},
      {"synth", "Write a synthetic scene (normals.png, mask.png, gt.pfm)",
       [](CLI::App& cmd, RunConfig& c) {
         cmd.add_option("--out", c.out, "output directory");
         add_synth_options(cmd, c);
         cmd.add_option("--seed", c.seed, "seed for noise and holes")->capture_default_str();
       },
       cmd_synth},
      {"eval", "MADE of a predicted depth PFM against ground truth",
       [](CLI::App& cmd, RunConfig& c) {
         cmd.add_option("--pred", c.pred, "predicted depth PFM");
         cmd.add_option("--gt", c.gt, "ground-truth depth PFM");
         cmd.add_option("--mask", c.mask, "8-bit mask PNG (default: every finite pixel)");
         cmd.add_option("--gauge", c.gauge, "offset alignment")
             ->check(CLI::IsMember({"median", "none"}))
             ->capture_default_str();
         cmd.add_option("--name", c.name, "record name (default: --pred path)");
         cmd.add_option("--record", c.record, "append the JSON line to this file");
       },
       cmd_eval},
  };
}

struct Parsed {
  std::unique_ptr<CLI::App> app;
  std::unique_ptr<RunConfig> config;
  const Command* command = nullptr;
};

Parsed build_app(const std::vector<Command>& cmds) {
  Parsed p;
  p.app = std::make_unique<CLI::App>("Normal integration with explicit discontinuity optimization", "normint");
  p.config = std::make_unique<RunConfig>();
  p.app->require_subcommand(1);
  p.app->set_version_flag("--version", "normint 0.1.0");
  for (const Command& cmd : cmds) {
    CLI::App* sub = p.app->add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", "flat key = value file; command-line flags take precedence");
    cmd.add_options(*sub, *p.config);
    sub->footer(kConfigHelp);
  }
  return p;
}

int run(int argc, char** argv) {
  const std::vector<Command> cmds = commands();
  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);

  Parsed p = build_app(cmds);
  try {
    p.app->parse(std::vector<std::string>(args));
  } catch (const CLI::ParseError& e) {
    return p.app->exit(e);
  }
  CLI::App* sub = p.app->get_subcommands().front();
  const CLI::Option* config_opt = sub->get_option("--config");
  const std::string config_path = config_opt->count() > 0 ? config_opt->as<std::string>() : "";
  if (!config_path.empty()) {
    // File values go right after the subcommand so explicit flags still win.
    std::vector<std::string> merged(args.begin(), args.end());
    std::vector<std::string> extra = config_tokens(*sub, config_path);
    merged.insert(merged.end() - 1, extra.rbegin(), extra.rend());
    p = build_app(cmds);
    try {
      p.app->parse(merged);
    } catch (const CLI::ParseError& e) {
      return p.app->exit(e);
    }
    sub = p.app->get_subcommands().front();
  }
  for (const Command& cmd : cmds)
    if (cmd.name == sub->get_name()) return cmd.run(*p.config);
  return 1;
}

}  // namespace
}  // namespace normint

int main(int argc, char** argv) {
  normint::configure_threads();
  try {
    return normint::run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "normint: %s\n", e.what());
    return 1;
  }
}
