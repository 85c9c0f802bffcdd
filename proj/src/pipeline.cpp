#include "semreg/pipeline.hpp"

#include "semreg/completion.hpp"
#include "semreg/fixtures.hpp"
#include "semreg/image.hpp"
#include "semreg/mesh_io.hpp"
#include "semreg/metrics.hpp"
#include "semreg/parallel.hpp"
#include "semreg/refinement.hpp"
#include "semreg/template_io.hpp"
#include "semreg/texturing.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>

namespace semreg {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

// A JSON object with a dotted name for messages. Every key read is recorded
// so leftovers can be reported as unknown fields.
class Table {
 public:
  Table(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw StageError("config", name_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw StageError("config", field(key) + ": missing required field");
    return convert<T>(key);
  }

  Table sub(const std::string& key) {
    seen_.insert(key);
    return Table(j_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw StageError("config", field(key) + ": unknown field");
    }
  }

  std::string field(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  template <typename T>
  T convert(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw StageError("config", field(key) + ": wrong type");
    }
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void write_json(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

struct Stage {
  std::string name;
  std::function<void()> body;
};

} // namespace

PipelineResult run_pipeline(const fs::path& config, const PipelineOptions& opts) {
  std::ifstream in(config, std::ios::binary);
  if (!in) throw StageError("config", "cannot open " + config.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw StageError("config", config.string() + ": " + e.what());
  }
  const fs::path base = config.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  Table root(doc, "");
  const std::string out_cfg = root.get<std::string>("output_dir", "out");
  const int threads_cfg = root.get<int>("threads", 0);
  const fs::path template_path = resolve(root.require<std::string>("template"));
  const std::optional<fs::path> pose_path =
      root.has("pose") ? std::optional<fs::path>(resolve(root.require<std::string>("pose"))) : std::nullopt;

  int subdivide_passes = 0;
  if (root.has("subdivide")) {
    Table t = root.sub("subdivide");
    subdivide_passes = t.get<int>("passes", 1);
    if (subdivide_passes < 0) throw StageError("config", "subdivide.passes: must be >= 0");
    t.finish();
  }

  if (!root.has("register")) throw StageError("config", "register: missing required table");
  SnsConfig sns_cfg;
  fs::path target_path;
  {
    Table t = root.sub("register");
    target_path = resolve(t.require<std::string>("target"));
    sns_cfg.range = t.get("range", sns_cfg.range);
    sns_cfg.angle_threshold = t.get("angle_threshold", sns_cfg.angle_threshold);
    sns_cfg.area_threshold = t.get("area_threshold", sns_cfg.area_threshold);
    sns_cfg.edge_threshold = t.get("edge_threshold", sns_cfg.edge_threshold);
    sns_cfg.connectivity_threshold = t.get("connectivity_threshold", sns_cfg.connectivity_threshold);
    sns_cfg.sdf_step = t.get("sdf_step", sns_cfg.sdf_step);
    sns_cfg.bisection_steps = t.get("bisection_steps", sns_cfg.bisection_steps);
    sns_cfg.mask_resolution = t.get("mask_resolution", sns_cfg.mask_resolution);
    t.finish();
  }

  CompletionConfig comp_cfg;
  if (root.has("complete")) {
    Table t = root.sub("complete");
    comp_cfg.dilation = t.get("dilation", comp_cfg.dilation);
    comp_cfg.replace_parts = t.get("replace_parts", comp_cfg.replace_parts);
    comp_cfg.blend_band = t.get("blend_band", comp_cfg.blend_band);
    comp_cfg.solver.tolerance = t.get("tolerance", comp_cfg.solver.tolerance);
    comp_cfg.solver.max_iterations = t.get("max_iterations", comp_cfg.solver.max_iterations);
    t.finish();
  }

  struct RefineCfg {
    std::optional<fs::path> displacement;
    double lambda = 0.5;
    int iterations = 2;
    int resolution = 0;
  };
  std::optional<RefineCfg> refine_cfg;
  if (root.has("refine")) {
    Table t = root.sub("refine");
    RefineCfg r;
    if (t.has("displacement")) r.displacement = resolve(t.require<std::string>("displacement"));
    r.lambda = t.get("lambda", r.lambda);
    r.iterations = t.get("iterations", r.iterations);
    r.resolution = t.get("resolution", sns_cfg.mask_resolution);
    t.finish();
    refine_cfg = r;
  }

  struct TextureCfg {
    std::optional<fs::path> image, camera, scan;
    int resolution = 1024;
    int erosion = 2;
  };
  std::optional<TextureCfg> texture_cfg;
  if (root.has("texture")) {
    Table t = root.sub("texture");
    TextureCfg c;
    if (t.has("scan")) {
      c.scan = resolve(t.require<std::string>("scan"));
    } else {
      c.image = resolve(t.require<std::string>("image"));
      c.camera = resolve(t.require<std::string>("camera"));
      c.erosion = t.get("erosion", c.erosion);
    }
    c.resolution = t.get("resolution", c.resolution);
    t.finish();
    texture_cfg = c;
  }

  struct EvalCfg {
    fs::path gt;
    std::string mesh;
    std::vector<std::string> views = {"front", "back"};
    int resolution = 512;
  };
  std::optional<EvalCfg> eval_cfg;
  if (root.has("eval")) {
    Table t = root.sub("eval");
    EvalCfg c;
    c.gt = resolve(t.require<std::string>("gt"));
    c.mesh = t.get<std::string>("mesh", refine_cfg ? "refined" : "complete");
    if (c.mesh != "complete" && c.mesh != "refined") throw StageError("config", "eval.mesh: expected complete or refined");
    if (c.mesh == "refined" && !refine_cfg) throw StageError("config", "eval.mesh: refined requires a refine table");
    c.views = t.get("views", c.views);
    for (const std::string& v : c.views) {
      if (v != "front" && v != "back") throw StageError("config", "eval.views: unknown view '" + v + "'");
    }
    c.resolution = t.get("resolution", c.resolution);
    t.finish();
    eval_cfg = c;
  }
  root.finish();

  PipelineResult result;
  result.output_dir = opts.output_dir.empty() ? resolve(out_cfg) : opts.output_dir;
  const fs::path out = result.output_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw StageError("config", "cannot create output directory " + out.string());

  const int threads = opts.threads > 0 ? opts.threads : threads_cfg;
  std::optional<ScopedThreadCount> thread_guard;
  if (threads > 0) thread_guard.emplace(threads);

  SemanticTemplate tmpl;
  Pose pose;
  SnsResult sns;
  CompletionResult completion;
  Mesh refined;
  ordered_json report;
  ordered_json timings = ordered_json::object();
  report["version"] = kVersion;

  auto artifact = [&](const std::string& name) {
    result.artifacts.push_back(name);
    return out / name;
  };

  std::vector<Stage> stages;
  stages.push_back({"load", [&] {
                      tmpl = load_template(template_path);
                      pose = pose_path ? read_pose(*pose_path) : Pose::identity(tmpl.joint_count());
                      pose.validate(tmpl.joint_count());
                    }});
  if (subdivide_passes > 0) {
    stages.push_back({"subdivide", [&] {
                        for (int i = 0; i < subdivide_passes; ++i) tmpl = subdivide_midpoint(tmpl);
                        report["subdivide"] = {{"passes", subdivide_passes},
                                               {"vertices", tmpl.vertex_count()},
                                               {"faces", tmpl.mesh.face_count()}};
                      }});
  }
  stages.push_back({"register", [&] {
                      if (target_path.extension() == ".sdf") {
                        const GridSdf sdf = read_sdf_grid(target_path);
                        sns = sns_register(tmpl, pose, sdf, sns_cfg);
                      } else {
                        const Bvh bvh(read_mesh(target_path));
                        sns = sns_register(tmpl, pose, bvh, sns_cfg);
                      }
                      write_obj(artifact("partial.obj"), sns.sampled);
                      write_mask_png(artifact("holes.png"), sns.hole_mask);
                      int valid = 0;
                      for (auto v : sns.valid_vertex) valid += v;
                      report["register"] = {{"range", sns.range},
                                            {"valid_vertices", valid},
                                            {"kept_faces", sns.sampled.face_count()},
                                            {"missed_vertices", sns.stats.missed_vertices},
                                            {"culled_posed", sns.stats.culled_posed},
                                            {"culled_canonical", sns.stats.culled_canonical},
                                            {"removed_components", sns.stats.removed_components},
                                            {"removed_component_faces", sns.stats.removed_component_faces},
                                            {"hole_texels", count_holes(sns.hole_mask)}};
                    }});
  stages.push_back({"complete", [&] {
                      completion = complete_mesh(sns, tmpl, pose, comp_cfg);
                      write_obj(artifact("complete.obj"), completion.mesh, &tmpl.atlas);
                      write_uvm(artifact("displacement.uvm"), completion.displacement);
                      int flagged = 0;
                      for (auto v : completion.resample_flagged) flagged += v;
                      report["complete"] = {{"fill_texels", count_holes(completion.fill_region)},
                                            {"solver_iterations", completion.solver_iterations},
                                            {"resample_flagged", flagged}};
                    }});
  if (refine_cfg) {
    stages.push_back({"refine", [&] {
                        UvMap z;
                        if (refine_cfg->displacement) {
                          z = read_uvm(*refine_cfg->displacement);
                        } else {
                          const std::vector<double> zero(tmpl.mesh.positions.size(), 0.0);
                          z = rasterize_attribute_map(tmpl, zero, 1, refine_cfg->resolution);
                        }
                        RefineResult r =
                            refine_apply(completion.mesh, tmpl, z, refine_cfg->lambda, refine_cfg->iterations);
                        refined = std::move(r.mesh);
                        write_obj(artifact("refined.obj"), refined, &tmpl.atlas);
                        report["refine"] = {{"lambda", refine_cfg->lambda}, {"iterations", refine_cfg->iterations}};
                      }});
  }
  if (texture_cfg) {
    stages.push_back({"texture", [&] {
                        const Mesh& mesh = refine_cfg ? refined : completion.mesh;
                        if (texture_cfg->scan) {
                          const Bvh scan(read_mesh(*texture_cfg->scan));
                          ColorTransfer ct = transfer_vertex_colors(mesh, scan, &tmpl.atlas, texture_cfg->resolution);
                          write_map_png(artifact("texture.png"), ct.texture);
                          report["texture"] = {{"mode", "scan"},
                                               {"icp_iterations", ct.icp.iterations},
                                               {"icp_mean_distance", ct.icp.mean_distance}};
                        } else {
                          const Image image = read_png(*texture_cfg->image, 3);
                          const Camera cam = read_camera(*texture_cfg->camera);
                          PartialTexture pt = sample_partial_texture(mesh, tmpl, image, cam, texture_cfg->resolution,
                                                                     texture_cfg->erosion);
                          write_map_png(artifact("texture.png"), pt.texture);
                          HoleMask visible = pt.visible;
                          write_mask_png(artifact("visible.png"), visible);
                          report["texture"] = {{"mode", "image"}, {"visible_texels", count_holes(pt.visible)}};
                        }
                      }});
  }
  if (eval_cfg) {
    stages.push_back({"eval", [&] {
                        const Mesh& pred = eval_cfg->mesh == "refined" ? refined : completion.mesh;
                        const Mesh gt = read_mesh(eval_cfg->gt);
                        const Bvh pred_bvh(pred), gt_bvh(gt);
                        const std::vector<Camera> all = default_views(pred, gt, eval_cfg->resolution);
                        std::vector<Camera> views;
                        for (const std::string& v : eval_cfg->views) views.push_back(all[v == "front" ? 0 : 1]);
                        const QualityStats q = mesh_quality_stats(pred);
                        report["eval"] = {{"mesh", eval_cfg->mesh},
                                          {"p2s_cm", p2s(pred, gt_bvh)},
                                          {"chamfer_cm", chamfer(pred, pred_bvh, gt, gt_bvh)},
                                          {"normal_l2", normal_image_error(pred, gt, views)},
                                          {"g_avg", q.g_avg},
                                          {"pct_angle_below_30", q.pct_angle_below_30}};
                      }});
  }

  ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["config_fnv1a64"] = hex64(fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}));

  auto finish = [&](const std::string& status) {
    write_json(artifact("report.json"), report);
    ordered_json hashes = ordered_json::object();
    for (const std::string& a : result.artifacts) hashes[a] = hex64(fnv1a64_file(out / a));
    manifest["status"] = status;
    manifest["stages"] = result.stages;
    manifest["artifacts"] = hashes;
    write_json(out / "manifest.json", manifest);
    write_json(out / "timings.json", timings);
  };

  for (const Stage& s : stages) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      s.body();
    } catch (const std::exception& e) {
      report["error"] = {{"stage", s.name}, {"cause", e.what()}};
      manifest["failed_stage"] = s.name;
      try {
        finish("failed");
      } catch (const std::exception&) {
      }
      throw StageError(s.name, e.what());
    }
    timings[s.name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.stages.push_back(s.name);
  }
  finish("ok");
  return result;
}

namespace {

Image pattern_image(int w, int h) {
  Image img(w, h, 3);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double x = (c + 0.5) / w, y = (r + 0.5) / h;
      img.at(r, c, 0) = static_cast<float>(x);
      img.at(r, c, 1) = static_cast<float>(y);
      img.at(r, c, 2) = static_cast<float>(0.5 + 0.5 * std::sin(12.0 * x) * std::cos(9.0 * y));
    }
  }
  return img;
}

Camera front_camera(const Mesh& mesh, int size) {
  return Camera::fit_orthographic(mesh.bounds(), Vec3(0, 0, -1), Vec3(0, -1, 0), size, size);
}

} // namespace

fs::path write_fixture_scene(const std::string& kind, const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json cfg;
  cfg["output_dir"] = "out";
  cfg["template"] = "template.json";
  if (kind == "spheres") {
    save_template(dir / "template.json", fixtures::icosphere_template(2, 1.0));
    const Mesh target = fixtures::icosphere(5, 1.2);
    write_obj(dir / "target.obj", target);
    write_png(dir / "image.png", pattern_image(256, 256));
    write_camera(dir / "camera.json", front_camera(target, 256));
    cfg["register"] = {{"target", "target.obj"}, {"range", 0.5}, {"connectivity_threshold", 100},
                       {"mask_resolution", 256}};
    cfg["complete"] = {{"dilation", 2}};
    cfg["refine"] = {{"lambda", 0.5}, {"iterations", 2}, {"resolution", 256}};
    cfg["texture"] = {{"image", "image.png"}, {"camera", "camera.json"}, {"resolution", 256}};
    cfg["eval"] = {{"gt", "target.obj"}, {"mesh", "complete"}, {"resolution", 256}};
  } else if (kind == "hemisphere") {
    save_template(dir / "template.json", fixtures::icosphere_template(4, 1.0));
    write_obj(dir / "target.obj", fixtures::hemisphere(6, 1.2));
    write_obj(dir / "gt.obj", fixtures::icosphere(6, 1.2));
    cfg["register"] = {{"target", "target.obj"}, {"range", 0.5}, {"mask_resolution", 512}};
    cfg["complete"] = {{"dilation", 2}, {"tolerance", 1e-10}};
    cfg["eval"] = {{"gt", "gt.obj"}, {"mesh", "complete"}, {"resolution", 256}};
  } else if (kind == "capsule") {
    save_template(dir / "template.json", fixtures::capsule_template());
    write_pose(dir / "pose.json", fixtures::capsule_demo_pose());
    const Mesh target = fixtures::capsule_target(3);
    write_obj(dir / "target.obj", target);
    write_png(dir / "image.png", pattern_image(256, 256));
    write_camera(dir / "camera.json", front_camera(target, 256));
    cfg["pose"] = "pose.json";
    cfg["subdivide"] = {{"passes", 1}};
    cfg["register"] = {{"target", "target.obj"}, {"connectivity_threshold", 100}, {"mask_resolution", 512}};
    cfg["complete"] = ordered_json::object();
    cfg["refine"] = {{"lambda", 0.5}, {"iterations", 2}, {"resolution", 512}};
    cfg["texture"] = {{"image", "image.png"}, {"camera", "camera.json"}, {"resolution", 512}};
    cfg["eval"] = {{"gt", "target.obj"}};
  } else {
    throw Error("unknown fixture '" + kind + "' (expected spheres, hemisphere or capsule)");
  }
  const fs::path path = dir / "config.json";
  write_json(path, cfg);
  return path;
}

} // namespace semreg
