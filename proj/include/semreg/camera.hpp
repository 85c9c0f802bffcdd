#pragma once

#include "semreg/core.hpp"

#include <filesystem>
#include <optional>

namespace semreg {

/// x_c = R x + t. The camera looks along +z_c with y_c pointing down the
/// image. Orthographic: pixel = scale * (x_c, y_c) + principal. Pinhole:
/// pixel = focal * (x_c, y_c) / z_c + principal. Pixel (row r, col c) has its
/// center at (c + 0.5, r + 0.5).
struct Camera {
  enum class Kind { Orthographic, Pinhole };
  Kind kind = Kind::Orthographic;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;  ///< Pixels per meter (orthographic).
  double focal = 1.0;  ///< Pixels (pinhole).
  Vec2 principal = Vec2::Zero();
  int width = 0;
  int height = 0;

  void validate() const;
  Vec3 to_camera(const Vec3& x) const { return rotation * x + translation; }

  struct Projection {
    Vec2 pixel;
    double depth = 0.0;  ///< z_c
    bool in_front = true;
    bool in_frame = false;
  };
  Projection project(const Vec3& x) const;

  /// Unit world-space direction from x toward the camera.
  Vec3 direction_to_camera(const Vec3& x) const;
  Vec3 center() const { return -rotation.transpose() * translation; }
  /// Viewing direction (+z_c) in world space.
  Vec3 forward() const { return rotation.row(2).transpose(); }

  /// Orthographic camera whose image covers `box` with a small margin. The
  /// view looks along `forward` (world) with `down` as the image's y axis.
  static Camera fit_orthographic(const Aabb& box, const Vec3& forward, const Vec3& down, int width, int height,
                                 double margin = 0.05);
};

/// JSON: {"kind": "orthographic"|"pinhole", "rotation": [9 row-major],
/// "translation": [3], "scale": s | "focal": f, "principal": [cx, cy] (optional,
/// defaults to the image center), "width": W, "height": H}.
Camera read_camera(const std::filesystem::path& path);
void write_camera(const std::filesystem::path& path, const Camera& cam);
Camera camera_from_json_text(const std::string& text);
std::string camera_to_json_text(const Camera& cam);

} // namespace semreg
