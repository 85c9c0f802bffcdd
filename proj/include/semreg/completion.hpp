#pragma once

#include "semreg/sns.hpp"

namespace semreg {

struct InpaintOptions {
  double tolerance = 1e-9;  ///< Max |mean of covered 4-neighbours - value| over hole texels.
  int max_iterations = 20000;
};

struct InpaintResult {
  UvMap field;
  Flags unreachable;  ///< Hole texels with no path to a known texel (set to 0).
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Discrete Laplace fill of the hole texels with the known covered texels as
/// Dirichlet data, on the 4-neighbour graph of covered texels. Solved with
/// Jacobi-preconditioned conjugate gradients; known texels are copied bit-exactly.
InpaintResult harmonic_inpaint(const UvMap& field, const HoleMask& hole, const InpaintOptions& opts = {});

struct CompletionConfig {
  InpaintOptions solver;
  int dilation = 2;
  /// Label names whose displacement is zeroed so the template part is used as is.
  /// "hands" and "feet" expand to the left/right labels.
  std::vector<std::string> replace_parts = {"face", "hands", "feet"};
  int blend_band = 4;  ///< Texels over which the replaced region blends back in.

  void validate() const;
};

struct CompletionResult {
  Mesh mesh;                ///< Posed positions, full template connectivity.
  UvMap displacement;       ///< Final d after filling and part replacement.
  HoleMask fill_region;     ///< Dilated region that was inpainted.
  UvMap replace_weight;     ///< Blend weight w in [0,1]; d <- (1 - w) d.
  Flags resample_flagged;
  Flags passthrough;        ///< Vertices that kept their sampled position exactly.
  int solver_iterations = 0;
};

/// Expands part aliases ("hands", "feet") and validates names against the template.
std::vector<int> resolve_part_labels(const SemanticTemplate& tmpl, const std::vector<std::string>& names);

/// UV-domain completion of an SNS result in the pose it was sampled in.
CompletionResult complete_mesh(const SnsResult& sns, const SemanticTemplate& tmpl, const Pose& pose,
                               const CompletionConfig& cfg = {});

/// Mean squared 3-vector error over the annulus H_outer = 1, H_inner = 0.
double masked_uv_error(const UvMap& s_p, const UvMap& s_ref, const HoleMask& h_outer, const HoleMask& h_inner);

} // namespace semreg
