#include "semreg/completion.hpp"
#include "semreg/image.hpp"
#include "semreg/mesh_io.hpp"
#include "semreg/metrics.hpp"
#include "semreg/parallel.hpp"
#include "semreg/pipeline.hpp"
#include "semreg/refinement.hpp"
#include "semreg/template_io.hpp"
#include "semreg/texturing.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

using namespace semreg;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

Pose pose_or_identity(const std::string& path, const SemanticTemplate& tmpl) {
  Pose p = path.empty() ? Pose::identity(tmpl.joint_count()) : read_pose(path);
  p.validate(tmpl.joint_count());
  return p;
}

// Coverage of the template atlas at the mask's own resolution.
HoleMask read_template_mask(const fs::path& path, const SemanticTemplate& tmpl) {
  const HoleMask raw = read_mask_png(path);
  const UvRaster raster = rasterize_uv(tmpl.atlas, raw.width, raw.height);
  const HoleMask coverage = hole_mask_from_faces(raster, Flags(tmpl.mesh.faces.size(), 1));
  return read_mask_png(path, &coverage);
}

void write_mesh(const fs::path& path, const Mesh& mesh, const UvAtlas* atlas) {
  if (path.extension() == ".ply") {
    write_ply(path, mesh);
  } else {
    write_obj(path, mesh, atlas);
  }
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic template registration, completion, refinement, texturing and evaluation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
  std::function<void()> action;

  // gen-fixture
  {
    auto* sc = app.add_subcommand("gen-fixture", "Write an analytic test scene");
    auto kind = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sc->add_option("kind", *kind, "spheres, hemisphere or capsule")
        ->required()
        ->check(CLI::IsMember({"spheres", "hemisphere", "capsule"}));
    sc->add_option("--out", *out, "Output directory")->required();
    sc->callback([=, &action] {
      action = [=] { print_json({{"config", write_fixture_scene(*kind, *out).string()}}); };
    });
  }

  // subdivide
  {
    auto* sc = app.add_subcommand("subdivide", "Mid-point subdivision of a template");
    auto tmpl = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto passes = std::make_shared<int>(1);
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--passes", *passes)->check(CLI::NonNegativeNumber);
    sc->add_option("--out", *out, "Template manifest (.json) or mesh (.obj)")->required();
    sc->callback([=, &action] {
      action = [=] {
        SemanticTemplate t = load_template(*tmpl);
        for (int i = 0; i < *passes; ++i) t = subdivide_midpoint(t);
        if (fs::path(*out).extension() == ".json") {
          save_template(*out, t);
        } else {
          write_obj(*out, t.mesh, &t.atlas);
        }
        print_json({{"vertices", t.vertex_count()}, {"faces", t.mesh.face_count()}});
      };
    });
  }

  // downsample
  {
    auto* sc = app.add_subcommand("downsample", "Truncate a template (or a deformed instance) to a coarser level");
    auto tmpl = std::make_shared<std::string>();
    auto mesh = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto level = std::make_shared<int>(0);
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--level", *level)->required();
    sc->add_option("--mesh", *mesh, "Deformed instance in template vertex order");
    sc->add_option("--out", *out, "Template manifest (.json) or mesh (.obj)")->required();
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        std::vector<Vec3> pos;
        if (!mesh->empty()) pos = read_mesh(*mesh).positions;
        const SemanticTemplate d = downsample(t, *level, pos);
        if (fs::path(*out).extension() == ".json") {
          save_template(*out, d);
        } else {
          write_obj(*out, d.mesh, &d.atlas);
        }
        print_json({{"vertices", d.vertex_count()}, {"faces", d.mesh.face_count()}});
      };
    });
  }

  // register
  {
    auto* sc = app.add_subcommand("register", "Semantic normal sampling onto a mesh or SDF target");
    auto tmpl = std::make_shared<std::string>();
    auto target = std::make_shared<std::string>();
    auto pose = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto mask = std::make_shared<std::string>();
    auto cfg = std::make_shared<SnsConfig>();
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--target", *target, ".obj/.ply mesh or .sdf grid")->required();
    sc->add_option("--pose", *pose);
    sc->add_option("--range", cfg->range, "Max sampling distance in meters (0 = 5% of target diagonal)");
    sc->add_option("--theta", cfg->angle_threshold, "Normal angle threshold (radians)");
    sc->add_option("--area-ratio", cfg->area_threshold);
    sc->add_option("--edge-ratio", cfg->edge_threshold);
    sc->add_option("--min-component", cfg->connectivity_threshold);
    sc->add_option("--sdf-step", cfg->sdf_step);
    sc->add_option("--mask-res", cfg->mask_resolution);
    sc->add_option("--out", *out, "Partial mesh")->required();
    sc->add_option("--holemask,--mask", *mask, "Hole mask PNG")->required();
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        const Pose p = pose_or_identity(*pose, t);
        SnsResult r;
        if (fs::path(*target).extension() == ".sdf") {
          r = sns_register(t, p, read_sdf_grid(*target), *cfg);
        } else {
          r = sns_register(t, p, Bvh(read_mesh(*target)), *cfg);
        }
        write_obj(*out, r.sampled);
        write_mask_png(*mask, r.hole_mask);
        int valid = 0;
        for (auto v : r.valid_vertex) valid += v;
        print_json({{"valid_vertices", valid},
                    {"kept_faces", r.sampled.face_count()},
                    {"hole_texels", count_holes(r.hole_mask)},
                    {"missed_vertices", r.stats.missed_vertices},
                    {"culled_posed", r.stats.culled_posed},
                    {"culled_canonical", r.stats.culled_canonical},
                    {"removed_components", r.stats.removed_components}});
      };
    });
  }

  // complete
  {
    auto* sc = app.add_subcommand("complete", "UV-domain completion of a partial registration");
    auto tmpl = std::make_shared<std::string>();
    auto partial = std::make_shared<std::string>();
    auto mask = std::make_shared<std::string>();
    auto pose = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto disp = std::make_shared<std::string>();
    auto parts = std::make_shared<std::string>("face,hands,feet");
    auto cfg = std::make_shared<CompletionConfig>();
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--partial", *partial)->required();
    sc->add_option("--holemask,--mask", *mask)->required();
    sc->add_option("--pose", *pose);
    sc->add_option("--dilate,--dilation", cfg->dilation);
    sc->add_option("--replace,--parts", *parts, "Comma-separated labels replaced by the template (empty for none)");
    sc->add_option("--blend-band", cfg->blend_band);
    sc->add_option("--tol", cfg->solver.tolerance);
    sc->add_option("--max-iters", cfg->solver.max_iterations);
    sc->add_option("--out", *out)->required();
    sc->add_option("--displacement", *disp, "Write the final displacement map (.uvm)");
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        const Pose p = pose_or_identity(*pose, t);
        CompletionConfig c = *cfg;
        c.replace_parts = split(*parts, ',');
        const SnsResult sns = sns_result_from_partial(read_mesh(*partial), read_template_mask(*mask, t));
        const CompletionResult r = complete_mesh(sns, t, p, c);
        write_mesh(*out, r.mesh, &t.atlas);
        if (!disp->empty()) write_uvm(*disp, r.displacement);
        print_json({{"fill_texels", count_holes(r.fill_region)}, {"solver_iterations", r.solver_iterations}});
      };
    });
  }

  // refine-apply
  {
    auto* sc = app.add_subcommand("refine-apply", "Smooth, then apply a normal displacement map");
    auto mesh = std::make_shared<std::string>();
    auto tmpl = std::make_shared<std::string>();
    auto disp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto lambda = std::make_shared<double>(0.5);
    auto iters = std::make_shared<int>(2);
    auto res = std::make_shared<int>(1024);
    sc->add_option("--complete,--mesh", *mesh)->required();
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--z,--displacement", *disp, "One-channel .uvm map; zero when omitted");
    sc->add_option("--smooth-lambda,--lambda", *lambda);
    sc->add_option("--smooth-iters,--iterations", *iters);
    sc->add_option("--res", *res, "Zero-map resolution when no displacement is given");
    sc->add_option("--out", *out)->required();
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        UvMap z;
        if (disp->empty()) {
          z = rasterize_attribute_map(t, std::vector<double>(t.mesh.positions.size(), 0.0), 1, *res);
        } else {
          z = read_uvm(*disp);
        }
        Mesh m = read_mesh(*mesh);
        m.faces = m.faces.empty() ? t.mesh.faces : m.faces;
        const RefineResult r = refine_apply(m, t, z, *lambda, *iters);
        write_mesh(*out, r.mesh, &t.atlas);
        int flagged = 0;
        for (auto v : r.resample_flagged) flagged += v;
        print_json({{"resample_flagged", flagged}});
      };
    });
  }

  // project-features
  {
    auto* sc = app.add_subcommand("project-features", "Project image and normal maps into UV space");
    auto mesh = std::make_shared<std::string>();
    auto tmpl = std::make_shared<std::string>();
    auto image = std::make_shared<std::string>();
    auto front = std::make_shared<std::string>();
    auto back = std::make_shared<std::string>();
    auto cam = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto res = std::make_shared<int>(1024);
    auto positions = std::make_shared<std::string>();
    auto* mesh_opt = sc->add_option("--mesh", *mesh, "Posed mesh with template connectivity");
    sc->add_option("--template", *tmpl, "Needed with --mesh");
    auto* pos_opt = sc->add_option("--positions", *positions, "3-channel position map (.uvm)");
    mesh_opt->excludes(pos_opt);
    sc->add_option("--image", *image)->required();
    sc->add_option("--front-normal", *front)->required();
    sc->add_option("--back-normal", *back)->required();
    sc->add_option("--camera", *cam)->required();
    sc->add_option("--res", *res);
    sc->add_option("--out", *out, "10-channel .uvm")->required();
    sc->callback([=, &action] {
      action = [=] {
        UvMap s;
        if (!positions->empty()) {
          s = read_uvm(*positions);
        } else {
          if (mesh->empty() || tmpl->empty()) throw Error("give --positions, or --mesh with --template");
          const SemanticTemplate t = load_template(*tmpl);
          const Mesh m = read_mesh(*mesh);
          if (m.vertex_count() != t.vertex_count()) throw Error("mesh does not have the template vertex count");
          s = rasterize_attribute_map(t, m.positions, *res);
        }
        ImageStack stack{read_png(*image, 3), read_png(*front, 3), read_png(*back, 3)};
        const FeatureMap f = project_image_to_uv(stack, s, read_camera(*cam));
        write_uvm(*out, f.features);
        int oof = 0, behind = 0;
        for (auto v : f.out_of_frame) oof += v;
        for (auto v : f.behind) behind += v;
        print_json({{"covered_texels", f.features.covered_count()}, {"out_of_frame", oof}, {"behind", behind}});
      };
    });
  }

  // texture
  {
    auto* sc = app.add_subcommand("texture", "Visibility-aware partial texture from an image");
    auto mesh = std::make_shared<std::string>();
    auto tmpl = std::make_shared<std::string>();
    auto image = std::make_shared<std::string>();
    auto cam = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto mask = std::make_shared<std::string>();
    auto res = std::make_shared<int>(1024);
    auto erosion = std::make_shared<int>(2);
    sc->add_option("--mesh", *mesh)->required();
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--image", *image)->required();
    sc->add_option("--camera", *cam)->required();
    sc->add_option("--res", *res);
    sc->add_option("--erosion", *erosion);
    sc->add_option("--out", *out)->required();
    sc->add_option("--mask", *mask, "Visible-texel mask PNG");
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        const Mesh m = read_mesh(*mesh);
        const PartialTexture pt = sample_partial_texture(m, t, read_png(*image, 3), read_camera(*cam), *res, *erosion);
        write_map_png(*out, pt.texture);
        if (!mask->empty()) write_mask_png(*mask, pt.visible);
        print_json({{"visible_texels", count_holes(pt.visible)}});
      };
    });
  }

  // transfer-color
  {
    auto* sc = app.add_subcommand("transfer-color", "ICP-align to a colored scan and bake its colors");
    auto mesh = std::make_shared<std::string>();
    auto scan = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto colored = std::make_shared<std::string>();
    auto res = std::make_shared<int>(1024);
    auto cfg = std::make_shared<IcpConfig>();
    sc->add_option("--mesh", *mesh, "OBJ with UVs")->required();
    sc->add_option("--scan", *scan, "Mesh with vertex colors")->required();
    sc->add_option("--res", *res);
    sc->add_option("--max-iters", cfg->max_iters);
    sc->add_option("--tol", cfg->tol);
    sc->add_flag("--with-scale", cfg->with_scale);
    sc->add_option("--out", *out, "Texture PNG")->required();
    sc->add_option("--colored", *colored, "Also write the colored mesh (.ply)");
    sc->callback([=, &action] {
      action = [=] {
        ObjData obj = read_obj(*mesh);
        if (obj.atlas.empty()) throw Error(*mesh + ": mesh has no UVs to bake into");
        const ColorTransfer ct = transfer_vertex_colors(obj.mesh, Bvh(read_mesh(*scan)), &obj.atlas, *res, *cfg);
        write_map_png(*out, ct.texture);
        if (!colored->empty()) {
          obj.mesh.colors = ct.colors;
          write_ply(*colored, obj.mesh);
        }
        print_json({{"icp_iterations", ct.icp.iterations}, {"icp_mean_distance", ct.icp.mean_distance}});
      };
    });
  }

  // animate
  {
    auto* sc = app.add_subcommand("animate", "Pose a template (or a registered instance) with LBS");
    auto tmpl = std::make_shared<std::string>();
    auto mesh = std::make_shared<std::string>();
    auto pose = std::make_shared<std::string>();
    auto from = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sc->add_option("--template", *tmpl)->required();
    sc->add_option("--pose", *pose)->required();
    sc->add_option("--mesh", *mesh, "Instance in template vertex order (rest pose unless --from is given)");
    sc->add_option("--from", *from, "Pose the instance is currently in");
    sc->add_option("--out", *out)->required();
    sc->callback([=, &action] {
      action = [=] {
        const SemanticTemplate t = load_template(*tmpl);
        const Pose to = pose_or_identity(*pose, t);
        Mesh m = t.mesh;
        if (!mesh->empty()) {
          m.positions = read_mesh(*mesh).positions;
          if (m.vertex_count() != t.vertex_count()) throw Error("mesh does not have the template vertex count");
        }
        if (from->empty()) {
          m.positions = lbs_pose(t, m.positions, to);
        } else {
          m.positions = lbs_repose(t, m.positions, pose_or_identity(*from, t), to);
        }
        write_mesh(*out, m, &t.atlas);
        print_json({{"vertices", m.vertex_count()}});
      };
    });
  }

  // eval
  {
    auto* sc = app.add_subcommand("eval", "Reconstruction and mesh quality metrics");
    auto pred = std::make_shared<std::string>();
    auto gt = std::make_shared<std::string>();
    auto views = std::make_shared<std::string>("front,back");
    auto res = std::make_shared<int>(512);
    sc->add_option("--pred", *pred)->required();
    sc->add_option("--gt", *gt)->required();
    sc->add_option("--views", *views, "Comma-separated subset of front,back");
    sc->add_option("--res", *res);
    sc->callback([=, &action] {
      action = [=] {
        const auto t0 = std::chrono::steady_clock::now();
        const Mesh a = read_mesh(*pred), b = read_mesh(*gt);
        const Bvh ba(a), bb(b);
        const std::vector<Camera> all = default_views(a, b, *res);
        std::vector<Camera> cams;
        for (const std::string& v : split(*views, ',')) {
          if (v == "front") {
            cams.push_back(all[0]);
          } else if (v == "back") {
            cams.push_back(all[1]);
          } else {
            throw Error("unknown view '" + v + "'");
          }
        }
        const QualityStats q = mesh_quality_stats(a);
        ordered_json j = {{"p2s_cm", p2s(a, bb)},
                          {"chamfer_cm", chamfer(a, ba, b, bb)},
                          {"normal_l2", normal_image_error(a, b, cams)},
                          {"g_avg", q.g_avg},
                          {"pct_angle_below_30", q.pct_angle_below_30}};
        j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        print_json(j);
      };
    });
  }

  // run
  {
    auto* sc = app.add_subcommand("run", "Run the configured pipeline");
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sc->add_option("config", *config)->required();
    sc->add_option("--out", *out, "Output directory (overrides the config)");
    sc->callback([=, &action, &threads] {
      action = [=, &threads] {
        PipelineOptions opts;
        opts.output_dir = *out;
        opts.threads = threads;
        const PipelineResult r = run_pipeline(*config, opts);
        print_json({{"output_dir", r.output_dir.string()}, {"stages", r.stages}, {"artifacts", r.artifacts}});
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    action();
  } catch (const StageError& e) {
    std::cerr << ordered_json{{"error", e.cause()}, {"stage", e.stage()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
