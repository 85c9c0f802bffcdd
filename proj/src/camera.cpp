#include "semreg/camera.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace semreg {

using nlohmann::json;

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw Error("camera: image size must be positive");
  if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      rotation.determinant() < 0.0) {
    throw Error("camera: rotation is not orthonormal");
  }
  if (kind == Kind::Orthographic && !(scale > 0.0)) throw Error("camera: orthographic scale must be positive");
  if (kind == Kind::Pinhole && !(focal > 0.0)) throw Error("camera: focal length must be positive");
}

Camera::Projection Camera::project(const Vec3& x) const {
  Projection p;
  const Vec3 c = to_camera(x);
  p.depth = c.z();
  if (kind == Kind::Orthographic) {
    p.pixel = scale * Vec2(c.x(), c.y()) + principal;
  } else {
    if (!(c.z() > 1e-12)) {
      p.in_front = false;
      return p;
    }
    p.pixel = focal * Vec2(c.x() / c.z(), c.y() / c.z()) + principal;
  }
  p.in_frame = p.pixel.x() >= 0.0 && p.pixel.y() >= 0.0 && p.pixel.x() <= width && p.pixel.y() <= height;
  return p;
}

Vec3 Camera::direction_to_camera(const Vec3& x) const {
  if (kind == Kind::Orthographic) return -forward();
  return (center() - x).normalized();
}

Camera Camera::fit_orthographic(const Aabb& box, const Vec3& forward, const Vec3& down, int width, int height,
                                double margin) {
  Camera cam;
  cam.kind = Kind::Orthographic;
  const Vec3 z = forward.normalized();
  const Vec3 y = (down - down.dot(z) * z).normalized();
  const Vec3 x = y.cross(z);
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  const Vec3 c = box.center();
  const double radius = std::max(0.5 * box.diagonal(), 1e-9);
  // Place the box center on the optical axis, in front of the camera.
  cam.translation = -(cam.rotation * c) + Vec3(0.0, 0.0, 2.0 * radius);
  cam.width = width;
  cam.height = height;
  cam.scale = 0.5 * std::min(width, height) / (radius * (1.0 + margin));
  cam.principal = Vec2(0.5 * width, 0.5 * height);
  return cam;
}

namespace {

Camera from_json(const json& j) {
  Camera cam;
  const std::string kind = j.value("kind", "orthographic");
  if (kind == "orthographic") {
    cam.kind = Camera::Kind::Orthographic;
  } else if (kind == "pinhole") {
    cam.kind = Camera::Kind::Pinhole;
  } else {
    throw Error("camera: unknown kind '" + kind + "'");
  }
  if (j.contains("rotation")) {
    const auto r = j.at("rotation").get<std::vector<double>>();
    if (r.size() != 9) throw Error("camera: rotation must hold 9 values");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cam.rotation(a, b) = r[3 * a + b];
  }
  if (j.contains("translation")) {
    const auto t = j.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw Error("camera: translation must hold 3 values");
    cam.translation = Vec3(t[0], t[1], t[2]);
  }
  if (!j.contains("width") || !j.contains("height")) throw Error("camera: missing field 'width' or 'height'");
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  if (cam.kind == Camera::Kind::Orthographic) {
    if (!j.contains("scale")) throw Error("camera: missing field 'scale'");
    cam.scale = j.at("scale").get<double>();
  } else {
    if (!j.contains("focal")) throw Error("camera: missing field 'focal'");
    cam.focal = j.at("focal").get<double>();
  }
  cam.principal = Vec2(0.5 * cam.width, 0.5 * cam.height);
  if (j.contains("principal")) {
    const auto c = j.at("principal").get<std::vector<double>>();
    if (c.size() != 2) throw Error("camera: principal must hold 2 values");
    cam.principal = Vec2(c[0], c[1]);
  }
  cam.validate();
  return cam;
}

json to_json(const Camera& cam) {
  json j;
  j["kind"] = cam.kind == Camera::Kind::Orthographic ? "orthographic" : "pinhole";
  std::vector<double> r;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r.push_back(cam.rotation(a, b));
  j["rotation"] = r;
  j["translation"] = {cam.translation.x(), cam.translation.y(), cam.translation.z()};
  if (cam.kind == Camera::Kind::Orthographic) {
    j["scale"] = cam.scale;
  } else {
    j["focal"] = cam.focal;
  }
  j["principal"] = {cam.principal.x(), cam.principal.y()};
  j["width"] = cam.width;
  j["height"] = cam.height;
  return j;
}

} // namespace

Camera camera_from_json_text(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(std::string("camera: ") + e.what());
  }
}

std::string camera_to_json_text(const Camera& cam) { return to_json(cam).dump(2); }

Camera read_camera(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return camera_from_json_text(ss.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_camera(const std::filesystem::path& path, const Camera& cam) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << camera_to_json_text(cam) << '\n';
}

} // namespace semreg
