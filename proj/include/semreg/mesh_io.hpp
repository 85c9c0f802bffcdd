#pragma once

#include "semreg/mesh.hpp"

#include <filesystem>
#include <string>

namespace semreg {

struct ObjData {
  Mesh mesh;
  UvAtlas atlas;  ///< Empty unless every face carries `v/vt` corners.
};

/// Reads `v` (optionally `v x y z r g b`), `vt` and `f` records. Polygons are
/// fan-triangulated, negative (relative) indices are resolved, normals ignored.
ObjData read_obj(const std::filesystem::path& path);

/// Writes `v`, optional `vt`, and `f v/vt` records. Numbers use the shortest
/// round-trip decimal form so identical meshes give identical bytes.
void write_obj(const std::filesystem::path& path, const Mesh& mesh, const UvAtlas* atlas = nullptr);

/// Reads ASCII or binary little-endian PLY with float/double coordinates,
/// optional uchar or float `red,green,blue`, and a `vertex_indices` face list.
Mesh read_ply(const std::filesystem::path& path);

/// Writes binary little-endian PLY: float32 xyz, uchar rgb when the mesh has
/// colors, and uchar-counted int32 face lists.
void write_ply(const std::filesystem::path& path, const Mesh& mesh);

/// Dispatches on the extension (.obj or .ply).
Mesh read_mesh(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

} // namespace semreg
