#pragma once

#include "semreg/mesh.hpp"

#include <Eigen/Geometry>

#include <span>
#include <string>

namespace semreg {

/// Per-joint local rotations (relative to the parent, rest-pose frame) plus a
/// root translation.
struct Pose {
  std::vector<Mat3> rotations;
  Vec3 translation = Vec3::Zero();

  static Pose identity(int joints);
  static Pose from_axis_angle(std::span<const Vec3> axis_angles, const Vec3& translation = Vec3::Zero());
  int joint_count() const { return static_cast<int>(rotations.size()); }
  /// Throws when the joint count differs or a rotation is not orthonormal within 1e-6.
  void validate(int joints) const;
};

/// Connectivity of one coarser subdivision level. Its vertices and UVs are the
/// first `vertex_count` / `uv_count` entries of the finer arrays.
struct LevelRecord {
  int vertex_count = 0;
  int uv_count = 0;
  std::vector<Face> faces;
  std::vector<Face> uv_faces;
};

/// Dense row-major V x J skinning weights.
struct SkinWeights {
  int joints = 0;
  std::vector<double> values;

  int vertex_count() const { return joints > 0 ? static_cast<int>(values.size()) / joints : 0; }
  std::span<const double> row(int v) const {
    return {values.data() + static_cast<std::size_t>(v) * joints, static_cast<std::size_t>(joints)};
  }
  std::span<double> row(int v) {
    return {values.data() + static_cast<std::size_t>(v) * joints, static_cast<std::size_t>(joints)};
  }
};

/// Canonical label vocabulary. Templates may append their own names.
inline const std::vector<std::string> kDefaultLabelNames = {"body",      "face",       "left-hand",
                                                              "right-hand", "left-foot", "right-foot"};

/// Mesh with semantic identity: UV atlas, skinning, skeleton, part labels and
/// the connectivity of every coarser subdivision level. `mesh.positions` are
/// in the rest pose the skeleton is defined in.
struct SemanticTemplate {
  Mesh mesh;
  UvAtlas atlas;
  SkinWeights weights;
  std::vector<Vec3> joints;
  std::vector<int> parents;  ///< -1 marks the root; parents[j] < j otherwise.
  Pose canonical_pose;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> label_names = kDefaultLabelNames;
  int subdivision_level = 0;
  std::vector<LevelRecord> levels;  ///< One record per coarser level 0 .. subdivision_level-1.

  int vertex_count() const { return mesh.vertex_count(); }
  int joint_count() const { return static_cast<int>(joints.size()); }
  /// Index of a label name, or -1.
  int label_id(const std::string& name) const;
  void validate() const;
};

/// One mid-point pass: each face splits into four, edge midpoints are appended
/// after the existing vertices in sorted (min, max) edge order, and UV
/// midpoints are appended per UV edge so seams split into distinct UVs.
SemanticTemplate subdivide_midpoint(const SemanticTemplate& tmpl);

/// Coarser level by prefix truncation (no interpolation). When `positions` is
/// non-empty it replaces the template positions, e.g. with a deformed instance.
SemanticTemplate downsample(const SemanticTemplate& tmpl, int level, std::span<const Vec3> positions = {});

using Affine = Eigen::Matrix<double, 3, 4>;

/// Forward-kinematic skinning transforms A_j mapping rest-pose points to the posed frame.
std::vector<Affine> skinning_transforms(const SemanticTemplate& tmpl, const Pose& pose);

/// Linear blend skinning of rest-pose vertices.
std::vector<Vec3> lbs_pose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& pose);

struct UnposeResult {
  std::vector<Vec3> positions;
  Flags singular;  ///< Blended transform with |det| <= 1e-9; the input point is passed through.
};

/// Inverse of lbs_pose per vertex.
UnposeResult lbs_unpose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& pose);

/// Maps positions posed by `from` into pose `to` through the rest pose.
std::vector<Vec3> lbs_repose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& from,
                             const Pose& to);

} // namespace semreg
