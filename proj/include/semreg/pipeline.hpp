#pragma once

#include "semreg/core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace semreg {

inline constexpr const char* kVersion = "1.0.0";

/// Error raised by run_pipeline; `stage` names the stage that failed
/// ("config" for problems in the configuration document itself).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage '" + stage + "': " + cause), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

struct PipelineOptions {
  std::filesystem::path output_dir;  ///< Overrides the config's output_dir when non-empty.
  int threads = 0;                   ///< Overrides the config's threads when > 0.
};

struct PipelineResult {
  std::filesystem::path output_dir;
  std::vector<std::string> stages;     ///< Stages that ran, in order.
  std::vector<std::string> artifacts;  ///< Deterministic artifacts, in write order.
};

// Config document (JSON). Paths are relative to the config file.
//
//   {
//     "output_dir": "out",                  default "out"
//     "threads": N,                         optional worker cap
//     "template": "template.json",          required
//     "pose": "pose.json",                  optional, identity by default
//     "subdivide": {"passes": 1},           optional
//     "register": {"target": "t.obj" | "t.ply" | "t.sdf", "range", "angle_threshold",
//                  "area_threshold", "edge_threshold", "connectivity_threshold",
//                  "sdf_step", "bisection_steps", "mask_resolution"},
//     "complete": {"dilation", "replace_parts", "blend_band", "tolerance", "max_iterations"},
//     "refine":   {"displacement": "z.uvm", "lambda", "iterations", "resolution"},
//     "texture":  {"image", "camera", "resolution", "erosion"} or {"scan", "resolution"},
//     "eval":     {"gt", "mesh": "complete" | "refined", "views": ["front", "back"], "resolution"}
//   }
//
// Artifacts: partial.obj, holes.png, complete.obj, displacement.uvm,
// refined.obj, texture.png, visible.png, report.json, manifest.json, plus the
// non-deterministic timings.json.
PipelineResult run_pipeline(const std::filesystem::path& config, const PipelineOptions& opts = {});

/// Writes an analytic scene ("spheres", "hemisphere" or "capsule") with its
/// template, target, auxiliary inputs and a ready-to-run config.json.
/// Returns the config path.
std::filesystem::path write_fixture_scene(const std::string& kind, const std::filesystem::path& dir);

} // namespace semreg
