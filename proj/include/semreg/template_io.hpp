#pragma once

#include "semreg/template.hpp"

#include <filesystem>

namespace semreg {

// Template manifest: a JSON document next to its sidecars.
//
//   {
//     "format": "semreg-template", "version": 1,
//     "mesh": "name.obj",                       rest-pose geometry + UVs (finest level)
//     "weights": {"file": "name.weights.f32", "joints": J},   float32 row-major V x J
//     "joints": "name.joints.f64",              float64 J x 3 rest positions
//     "parents": "name.parents.i32",            int32 J, -1 for the root
//     "labels": {"file": "name.labels.u8", "names": [...]},
//     "canonical_pose": "name.canonical.f64",   float64 J x 9 rotations + 3 translation
//     "subdivision_level": L,
//     "base_counts": [{"vertices": V_k, "uvs": U_k, "faces": F_k,
//                      "faces_file": "name.level<k>.i32"}, ...]   int32 F_k x 3 faces then F_k x 3 uv faces
//   }
//
// Sidecar paths are relative to the manifest.

SemanticTemplate load_template(const std::filesystem::path& manifest);

/// Writes the manifest and all sidecars using the manifest stem as the prefix.
void save_template(const std::filesystem::path& manifest, const SemanticTemplate& tmpl);

/// Pose JSON: {"rotations": [[9 row-major values], ...]} or
/// {"axis_angle": [[x, y, z], ...]}, plus optional "translation": [x, y, z].
Pose read_pose(const std::filesystem::path& path);
void write_pose(const std::filesystem::path& path, const Pose& pose);

} // namespace semreg
