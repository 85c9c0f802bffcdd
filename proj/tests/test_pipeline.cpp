#include "helpers.hpp"

#include "semreg/pipeline.hpp"

#include <json.hpp>
#include <sys/wait.h>

using namespace semreg;
using namespace testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string("\"") + SEMREG_CLI + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST_CASE("FNV-1a 64 reference vectors") {
  const auto h = [](const std::string& s) {
    return hex64(fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
  };
  CHECK(h("") == "cbf29ce484222325");
  CHECK(h("a") == "af63dc4c8601ec8c");
  CHECK(h("foobar") == "85944171f73967e8");
  const fs::path dir = temp_dir("fnv");
  write_text(dir / "f.txt", "foobar");
  CHECK(hex64(fnv1a64_file(dir / "f.txt")) == "85944171f73967e8");
}

TEST_CASE("sphere scene runs end to end") {
  const fs::path dir = temp_dir("pipe_spheres");
  const fs::path cfg = write_fixture_scene("spheres", dir);
  const PipelineResult r = run_pipeline(cfg, {dir / "a", 1});
  CHECK(r.stages == std::vector<std::string>{"load", "register", "complete", "refine", "texture", "eval"});

  const json report = read_json(dir / "a" / "report.json");
  CHECK(report["eval"]["p2s_cm"].get<double>() < 1e-3);

  const json manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config_fnv1a64"] == hex64(fnv1a64_file(cfg)));
  for (const std::string& name : r.artifacts) {
    REQUIRE(fs::exists(dir / "a" / name));
    if (name != "manifest.json") CHECK(manifest["artifacts"][name] == hex64(fnv1a64_file(dir / "a" / name)));
  }
  for (const char* name : {"partial.obj", "holes.png", "complete.obj", "refined.obj", "texture.png", "report.json"})
    CHECK(std::find(r.artifacts.begin(), r.artifacts.end(), name) != r.artifacts.end());
  CHECK(fs::exists(dir / "a" / "timings.json"));

  // Reruns and other worker counts reproduce every artifact byte for byte.
  const PipelineResult again = run_pipeline(cfg, {dir / "b", 1});
  const PipelineResult wide = run_pipeline(cfg, {dir / "c", 8});
  CHECK(again.artifacts == r.artifacts);
  CHECK(wide.artifacts == r.artifacts);
  for (const std::string& name : r.artifacts) {
    const std::string ref = read_file(dir / "a" / name);
    CHECK(read_file(dir / "b" / name) == ref);
    CHECK(read_file(dir / "c" / name) == ref);
  }
}

TEST_CASE("config errors name the offending field") {
  const fs::path dir = temp_dir("pipe_config");
  write_fixture_scene("spheres", dir);
  json cfg = read_json(dir / "config.json");

  json no_target = cfg;
  no_target["register"].erase("target");
  write_text(dir / "no_target.json", no_target.dump());
  try {
    run_pipeline(dir / "no_target.json");
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
    CHECK(e.cause().find("register.target") != std::string::npos);
  }

  json extra = cfg;
  extra["complete"]["dilatation"] = 3;
  write_text(dir / "extra.json", extra.dump());
  CHECK_THROWS_WITH_AS(run_pipeline(dir / "extra.json"), doctest::Contains("complete.dilatation"), StageError);

  json typed = cfg;
  typed["register"]["range"] = "wide";
  write_text(dir / "typed.json", typed.dump());
  CHECK_THROWS_WITH_AS(run_pipeline(dir / "typed.json"), doctest::Contains("register.range"), StageError);
}

TEST_CASE("a failing stage keeps the earlier outputs") {
  const fs::path dir = temp_dir("pipe_fail");
  write_fixture_scene("spheres", dir);
  json cfg = read_json(dir / "config.json");
  cfg["texture"]["image"] = "missing.png";
  write_text(dir / "broken.json", cfg.dump());
  try {
    run_pipeline(dir / "broken.json", {dir / "out", 0});
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "texture");
  }
  CHECK(fs::exists(dir / "out" / "partial.obj"));
  CHECK(fs::exists(dir / "out" / "complete.obj"));
  CHECK(fs::exists(dir / "out" / "refined.obj"));
  CHECK(!fs::exists(dir / "out" / "texture.png"));
  const json manifest = read_json(dir / "out" / "manifest.json");
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["failed_stage"] == "texture");
  CHECK(read_json(dir / "out" / "report.json").contains("error"));
}

TEST_CASE("command line interface") {
  const fs::path dir = temp_dir("cli");
  const fs::path err = dir / "stderr.txt";
  REQUIRE(run_cli("gen-fixture spheres --out \"" + (dir / "scene").string() + "\"", err) == 0);
  const fs::path scene = dir / "scene";
  REQUIRE(run_cli("run \"" + (scene / "config.json").string() + "\" --out \"" + (dir / "run").string() + "\"", err) == 0);

  // The standalone stages reproduce the pipeline's completed mesh.
  const std::string t = "\"" + (scene / "template.json").string() + "\"";
  const std::string partial = "\"" + (dir / "partial.obj").string() + "\"";
  const std::string holes = "\"" + (dir / "holes.png").string() + "\"";
  REQUIRE(run_cli("register --template " + t + " --target \"" + (scene / "target.obj").string() +
                      "\" --range 0.5 --min-component 100 --mask-res 256 --out " + partial + " --holemask " + holes,
                  err) == 0);
  REQUIRE(run_cli("complete --template " + t + " --partial " + partial + " --holemask " + holes +
                      " --dilate 2 --out \"" + (dir / "complete.obj").string() + "\"",
                  err) == 0);
  CHECK(read_file(dir / "partial.obj") == read_file(dir / "run" / "partial.obj"));
  CHECK(read_file(dir / "holes.png") == read_file(dir / "run" / "holes.png"));
  CHECK(read_file(dir / "complete.obj") == read_file(dir / "run" / "complete.obj"));

  // Failures exit non-zero with an error document on stderr.
  CHECK(run_cli("register --template " + t + " --target \"" + (dir / "nope.obj").string() + "\" --out " + partial, err) !=
        0);
  const json e = json::parse(read_file(err));
  CHECK(e.contains("error"));

  json cfg = read_json(scene / "config.json");
  cfg["register"].erase("target");
  write_text(scene / "bad.json", cfg.dump());
  CHECK(run_cli("run \"" + (scene / "bad.json").string() + "\"", err) == 1);
  const json be = json::parse(read_file(err));
  CHECK(be["stage"] == "config");
  CHECK(be["error"].get<std::string>().find("register.target") != std::string::npos);

  CHECK(run_cli("register --bogus", err) == 2);
  CHECK(json::parse(read_file(err))["kind"] == "usage");
}
