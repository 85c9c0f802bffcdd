#pragma once

#include "semreg/template.hpp"

namespace semreg::fixtures {

/// Regular icosahedron inscribed in the unit sphere, poles on the z axis,
/// wrapped as a one-joint template whose UV atlas is the classic connected
/// 20-triangle net (22 UVs).
SemanticTemplate icosahedron_template();

/// Icosahedron template refined `levels` times with subdivide_midpoint, each
/// pass followed by projection onto the sphere of the given radius. Vertex
/// prefixes and level records are preserved, so downsample() still applies.
SemanticTemplate icosphere_template(int levels, double radius = 1.0);

/// Geometry of icosphere_template() only.
Mesh icosphere(int levels, double radius = 1.0);

/// Faces of icosphere(levels, radius) whose vertices all satisfy z >= 0,
/// compacted to the referenced vertices (an open dome).
Mesh hemisphere(int levels, double radius = 1.0);

/// Procedural humanoid stand-in: a y-up capsule (height 1.7 m, radius 0.15 m,
/// 602 vertices, 1200 faces) with four chained joints (pelvis, spine, chest,
/// head), smooth height-based skinning, six part labels and a two-chart
/// (front/back) UV atlas. The canonical pose bends the chest slightly.
SemanticTemplate capsule_template();

/// Pose used by the capsule demos: a gentle spine bend and head turn.
Pose capsule_demo_pose();

/// Offsets every vertex along its area-weighted normal.
Mesh inflate(const Mesh& mesh, double offset);

/// Registration target for the capsule template: the template refined
/// `levels` times, posed with capsule_demo_pose() and inflated by `offset`.
Mesh capsule_target(int levels, double offset = 0.02);

/// Asymmetric closed blob (perturbed icosphere): no rotational symmetry, so
/// rigid registration of it is well posed.
Mesh asymmetric_blob(int levels);

/// Axis-aligned unit-square grid of (n+1)^2 vertices in the z = 0 plane,
/// triangulated along a consistent diagonal.
Mesh planar_grid(int n, double size = 1.0);

} // namespace semreg::fixtures
