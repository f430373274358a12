#include "octimls/fitter.hpp"
#include "octimls/io.hpp"
#include "octimls/mesher.hpp"
#include "octimls/metrics.hpp"
#include "octimls/parallel.hpp"
#include "octimls/recon.hpp"
#include "octimls/shapes.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace {

using namespace octimls;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Global {
  int threads = 0;
  std::uint64_t seed = 0;
};

struct SdfArgs {
  std::string mesh, out;
  int res = 256;
};

struct SampleArgs {
  std::string mesh, out;
  std::size_t n = 3000;
  double sigma = 0.0;
  bool normalize = true;
};

struct ShapeArgs {
  std::string kind = "sphere", out;
  double radius = 0.5, major = 0.5, minor = 0.2, half = 0.5;
  int detail = 5;
};

struct FitArgs {
  std::string sdf, cloud, out, trace, scaffold = "gt";
  int depth = 7;
  FitConfig cfg;
};

struct ReconArgs {
  std::string cloud, out;
  ReconOptions opts;
};

struct MeshArgs {
  std::string mls, out, band_dump;
  int res = 128;
  int depth = 6;
  bool full_grid = false;
};

struct EvalArgs {
  std::string pred, gt;
  MetricOptions opts;
  bool record = false;
};

int cmd_sdf(const SdfArgs& a) {
  const auto normalized = normalize_mesh(read_obj(a.mesh));
  if (a.res < 2) throw Error("resolution-too-small", "SDF resolution must be at least 2");
  MeshToSdfReport report;
  const auto grid = mesh_to_sdf(normalized.mesh, a.res, &report);
  write_sdf(a.out, grid);
  std::cerr << "# winding_probes " << report.winding_probes << " offending " << report.offending_probes << '\n';
  return kExitOk;
}

int cmd_sample(const SampleArgs& a, const Global& g) {
  auto mesh = read_obj(a.mesh);
  if (a.normalize) mesh = normalize_mesh(mesh).mesh;
  write_points(a.out, sample_surface(mesh, a.n, a.sigma, g.seed));
  return kExitOk;
}

int cmd_shape(const ShapeArgs& a) {
  TriangleMesh mesh;
  if (a.kind == "sphere") {
    validate_shape(Sphere{Vec3::Zero(), a.radius});
    mesh = make_icosphere(a.radius, a.detail);
  } else if (a.kind == "torus") {
    validate_shape(Torus{a.major, a.minor});
    mesh = make_torus(a.major, a.minor, 32 << std::min(a.detail, 6) >> 2, 16 << std::min(a.detail, 6) >> 2);
  } else if (a.kind == "box") {
    validate_shape(Box{Vec3::Constant(a.half)});
    mesh = make_box(Vec3::Constant(a.half), 1 << std::min(a.detail, 6));
  } else {
    throw Error("invalid-shape", "unknown shape kind '" + a.kind + "'");
  }
  write_obj(a.out, mesh);
  return kExitOk;
}

int cmd_fit(FitArgs a, const Global& g) {
  a.cfg.seed = g.seed;
  const auto sdf = read_sdf(a.sdf);
  std::shared_ptr<const Octree> scaffold;
  if (a.scaffold == "gt") {
    scaffold = std::make_shared<const Octree>(build_gt_octree(sdf, a.depth));
  } else if (a.scaffold == "cloud") {
    if (a.cloud.empty()) throw Error("invalid-config", "--scaffold cloud needs --cloud");
    scaffold = std::make_shared<const Octree>(build_octree(read_points(a.cloud), a.depth));
  } else {
    throw Error("invalid-config", "--scaffold must be 'gt' or 'cloud'");
  }
  const auto result = fit(scaffold, sdf, a.cfg);

  std::string trace;
  for (const auto& r : result.trace) {
    trace += format_trace_line(r) + '\n';
    if (r.out_of_band * 100 > r.samples)
      std::cerr << "warning: epoch " << r.epoch << ": " << r.out_of_band << " of " << r.samples
                << " SDF samples outside the band were skipped\n";
  }
  if (!a.trace.empty()) write_text(a.trace, trace);
  write_mls(a.out, result.points);
  std::cerr << "# sdf_loss initial " << format_number(result.initial_sdf_loss) << " final "
            << format_number(result.final_sdf_loss) << '\n';
  if (result.diverged) {
    std::cerr << "error: diverged: non-finite loss; last finite state written\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_recon(const ReconArgs& a) {
  write_mls(a.out, reconstruct(read_points(a.cloud), a.opts));
  return kExitOk;
}

int cmd_mesh(const MeshArgs& a) {
  const auto mls = read_mls(a.mls, a.depth);
  MeshOptions opts;
  opts.resolution = a.res;
  opts.band_only = !a.full_grid;
  MeshStats stats;
  std::vector<BandRecord> band;
  const auto mesh = extract_mesh(mls, opts, &stats, a.band_dump.empty() ? nullptr : &band);
  if (mesh.empty()) std::cerr << "warning: no zero crossing on the grid; mesh is empty\n";
  write_obj(a.out, mesh);
  if (!a.band_dump.empty()) write_band_dump(a.band_dump, a.res, band);
  std::cerr << "# cells " << stats.cells << " corners " << stats.corners << " outside " << stats.outside_corners
            << " degenerate " << stats.degenerate_triangles << " vertices " << mesh.vertices.size() << " triangles " << mesh.triangles.size() << '\n';
  return kExitOk;
}

int cmd_eval(EvalArgs a, const Global& g) {
  a.opts.seed = g.seed;
  const auto pred = read_obj(a.pred);
  if (pred.empty()) throw Error("empty-prediction", "predicted mesh has no triangles");
  const auto report = evaluate(pred, read_obj(a.gt), a.opts);
  std::cout << (a.record ? report.to_record() + '\n' : report.to_text());
  return kExitOk;
}

void add_weights(CLI::App* cmd, LossWeights& w) {
  cmd->add_option("--lambda-octree", w.octree, "Octree structure loss weight")->capture_default_str();
  cmd->add_option("--lambda-sdf6", w.sdf_level6, "SDF value weight, level-6 samples")->capture_default_str();
  cmd->add_option("--lambda-sdf7", w.sdf_level7, "SDF value weight, level-7 samples")->capture_default_str();
  cmd->add_option("--lambda-grad", w.gradient, "Gradient alignment weight")->capture_default_str();
  cmd->add_option("--lambda-rep", w.repulsion, "Repulsion weight")->capture_default_str();
  cmd->add_option("--lambda-proj", w.projection, "Projection smoothness weight")->capture_default_str();
  cmd->add_option("--lambda-rad", w.radius, "Radius smoothness weight")->capture_default_str();
  cmd->add_option("--lambda-wd", w.weight_decay, "Weight decay")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Octree-scaffolded IMLS surface reconstruction"};
  app.set_version_flag("--version", std::string(OCTIMLS_VERSION));
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file; flags win over the file");
  app.allow_config_extras(false);

  Global g;
  app.add_option("--threads", g.threads, "Worker thread cap (0 = hardware)")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();

  SdfArgs sdf;
  auto* c_sdf = app.add_subcommand("sdf", "Signed distance grid of a watertight mesh");
  c_sdf->add_option("--mesh", sdf.mesh, "Input OBJ")->required();
  c_sdf->add_option("--res", sdf.res, "Grid points per axis")->capture_default_str();
  c_sdf->add_option("--out", sdf.out, "Output grid")->required();

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Oriented surface samples of a mesh");
  c_sample->add_option("--mesh", sample.mesh, "Input OBJ")->required();
  c_sample->add_option("--n", sample.n, "Sample count")->capture_default_str();
  c_sample->add_option("--sigma", sample.sigma, "Gaussian noise, fraction of the longest side")->capture_default_str();
  c_sample->add_flag("!--no-normalize", sample.normalize, "Keep the mesh frame");
  c_sample->add_option("--out", sample.out, "Output points")->required();

  ShapeArgs shape;
  auto* c_shape = app.add_subcommand("shape", "Write an analytic test mesh");
  c_shape->add_option("--kind", shape.kind, "sphere, torus or box")->capture_default_str();
  c_shape->add_option("--radius", shape.radius, "Sphere radius")->capture_default_str();
  c_shape->add_option("--major", shape.major, "Torus major radius")->capture_default_str();
  c_shape->add_option("--minor", shape.minor, "Torus minor radius")->capture_default_str();
  c_shape->add_option("--half", shape.half, "Box half extent")->capture_default_str();
  c_shape->add_option("--detail", shape.detail, "Tessellation level")->capture_default_str();
  c_shape->add_option("--out", shape.out, "Output OBJ")->required();

  FitArgs fit_args;
  auto* c_fit = app.add_subcommand("fit", "Fit MLS points to an SDF grid");
  c_fit->add_option("--sdf", fit_args.sdf, "Input grid")->required();
  c_fit->add_option("--cloud", fit_args.cloud, "Point cloud for --scaffold cloud");
  c_fit->add_option("--scaffold", fit_args.scaffold, "gt (from the SDF) or cloud")->capture_default_str();
  c_fit->add_option("--depth", fit_args.depth, "Scaffold depth")->capture_default_str();
  c_fit->add_option("--s", fit_args.cfg.points_per_octant, "MLS points per octant")->capture_default_str();
  c_fit->add_option("--beta", fit_args.cfg.beta, "Offset range factor")->capture_default_str();
  c_fit->add_option("--lr", fit_args.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  c_fit->add_option("--stage1-epochs", fit_args.cfg.stage1_epochs, "Level-6 epochs")->capture_default_str();
  c_fit->add_option("--stage2-epochs", fit_args.cfg.stage2_epochs, "All-level epochs")->capture_default_str();
  c_fit->add_option("--steps-per-epoch", fit_args.cfg.steps_per_epoch, "Adam steps per epoch")->capture_default_str();
  add_weights(c_fit, fit_args.cfg.weights);
  c_fit->add_option("--trace", fit_args.trace, "Loss trace output");
  c_fit->add_option("--out", fit_args.out, "Output MLS points")->required();

  ReconArgs recon;
  auto* c_recon = app.add_subcommand("recon", "Classical IMLS from an oriented cloud");
  c_recon->add_option("--cloud", recon.cloud, "Oriented points")->required();
  c_recon->add_option("--k", recon.opts.k, "Radius neighbour rank")->capture_default_str();
  c_recon->add_option("--depth", recon.opts.depth, "Scaffold depth")->capture_default_str();
  c_recon->add_option("--out", recon.out, "Output MLS points")->required();

  MeshArgs mesh;
  auto* c_mesh = app.add_subcommand("mesh", "Marching cubes of an MLS point file");
  c_mesh->add_option("--mls", mesh.mls, "Input MLS points")->required();
  c_mesh->add_option("--res", mesh.res, "Cells per axis")->capture_default_str();
  c_mesh->add_option("--depth", mesh.depth, "Scaffold depth when the file carries none")->capture_default_str();
  c_mesh->add_flag("--full-grid", mesh.full_grid, "Evaluate every cell");
  c_mesh->add_option("--band-dump", mesh.band_dump, "Binary dump of band corner values");
  c_mesh->add_option("--out", mesh.out, "Output OBJ")->required();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Compare a predicted mesh with ground truth");
  c_eval->add_option("--pred", eval.pred, "Predicted OBJ")->required();
  c_eval->add_option("--gt", eval.gt, "Ground-truth OBJ")->required();
  c_eval->add_option("--tau", eval.opts.tau, "F-score distance threshold")->capture_default_str();
  c_eval->add_option("--samples", eval.opts.surface_samples, "Surface samples per mesh")->capture_default_str();
  c_eval->add_option("--volume-samples", eval.opts.volume_samples, "IoU samples")->capture_default_str();
  c_eval->add_flag("!--no-iou", eval.opts.volume, "Skip IoU");
  c_eval->add_flag("--record", eval.record, "Print one line instead of a block");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (g.threads > 0) set_num_threads(g.threads);
  auto* selected = app.get_subcommands().front();
  std::cerr << "# octimls " << OCTIMLS_VERSION << ' ' << selected->get_name() << " seed " << g.seed << " threads "
            << num_threads() << '\n';
  std::istringstream echo(selected->config_to_str(true, false));
  for (std::string line; std::getline(echo, line);)
    if (!line.empty()) std::cerr << "# " << line << '\n';

  try {
    if (*c_sdf) return cmd_sdf(sdf);
    if (*c_sample) return cmd_sample(sample, g);
    if (*c_shape) return cmd_shape(shape);
    if (*c_fit) return cmd_fit(fit_args, g);
    if (*c_recon) return cmd_recon(recon);
    if (*c_mesh) return cmd_mesh(mesh);
    if (*c_eval) return cmd_eval(eval, g);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
