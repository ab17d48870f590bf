#include "uwnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

namespace uwnav {

double Obstacle::z_min() const {
  switch (shape) {
    case ObstacleShape::Box: return center.z - half_extents.z;
    case ObstacleShape::Cylinder: return center.z - half_height;
    case ObstacleShape::Sphere: return center.z - radius;
  }
  return 0.0;
}

double Obstacle::z_max() const {
  switch (shape) {
    case ObstacleShape::Box: return center.z + half_extents.z;
    case ObstacleShape::Cylinder: return center.z + half_height;
    case ObstacleShape::Sphere: return center.z + radius;
  }
  return 0.0;
}

double Obstacle::footprint_distance(double px, double py) const {
  if (shape == ObstacleShape::Box) {
    const double dx = std::max(std::abs(px - center.x) - half_extents.x, 0.0);
    const double dy = std::max(std::abs(py - center.y) - half_extents.y, 0.0);
    return std::hypot(dx, dy);
  }
  const double d = std::hypot(px - center.x, py - center.y) - radius;
  return std::max(d, 0.0);
}

double Obstacle::surface_distance(const Vec3& p) const {
  switch (shape) {
    case ObstacleShape::Box: {
      const double dx = std::max(std::abs(p.x - center.x) - half_extents.x, 0.0);
      const double dy = std::max(std::abs(p.y - center.y) - half_extents.y, 0.0);
      const double dz = std::max(std::abs(p.z - center.z) - half_extents.z, 0.0);
      return std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    case ObstacleShape::Cylinder: {
      const double dr = footprint_distance(p.x, p.y);
      const double dz = std::max(std::abs(p.z - center.z) - half_height, 0.0);
      return std::hypot(dr, dz);
    }
    case ObstacleShape::Sphere:
      return std::max((p - center).norm() - radius, 0.0);
  }
  return 0.0;
}

namespace {

constexpr double kNone = std::numeric_limits<double>::infinity();

// Entry distance of a ray into an AABB; 0 if the origin is inside.
double ray_aabb_entry(const Vec3& o, const Vec3& d, const Vec3& bmin,
                      const Vec3& bmax) {
  double t0 = -kNone, t1 = kNone;
  const double ov[3] = {o.x, o.y, o.z};
  const double dv[3] = {d.x, d.y, d.z};
  const double mn[3] = {bmin.x, bmin.y, bmin.z};
  const double mx[3] = {bmax.x, bmax.y, bmax.z};
  for (int i = 0; i < 3; ++i) {
    if (dv[i] == 0.0) {
      if (ov[i] < mn[i] || ov[i] > mx[i]) return kNone;
      continue;
    }
    double ta = (mn[i] - ov[i]) / dv[i];
    double tb = (mx[i] - ov[i]) / dv[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 < 0.0) return kNone;
  return std::max(t0, 0.0);
}

// Exit distance of a ray from an AABB containing the origin.
double ray_aabb_exit(const Vec3& o, const Vec3& d, const Vec3& bmin,
                     const Vec3& bmax) {
  double t1 = kNone;
  const double ov[3] = {o.x, o.y, o.z};
  const double dv[3] = {d.x, d.y, d.z};
  const double mn[3] = {bmin.x, bmin.y, bmin.z};
  const double mx[3] = {bmax.x, bmax.y, bmax.z};
  for (int i = 0; i < 3; ++i) {
    if (dv[i] == 0.0) continue;
    double ta = (mn[i] - ov[i]) / dv[i];
    double tb = (mx[i] - ov[i]) / dv[i];
    t1 = std::min(t1, std::max(ta, tb));
  }
  return t1;
}

double ray_sphere_entry(const Vec3& o, const Vec3& d, const Vec3& c,
                        double r) {
  const Vec3 oc = o - c;
  const double b = oc.dot(d);
  const double q = oc.dot(oc) - r * r;
  if (q <= 0.0) return 0.0;  // inside
  const double disc = b * b - q;
  if (disc < 0.0) return kNone;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kNone;
}

double ray_cylinder_entry(const Vec3& o, const Vec3& d, const Obstacle& cyl) {
  // Interval where the ray is inside the infinite 2D circle.
  const double ox = o.x - cyl.center.x, oy = o.y - cyl.center.y;
  const double a = d.x * d.x + d.y * d.y;
  double tc0, tc1;
  if (a < 1e-14) {
    if (ox * ox + oy * oy > cyl.radius * cyl.radius) return kNone;
    tc0 = -kNone;
    tc1 = kNone;
  } else {
    const double b = ox * d.x + oy * d.y;
    const double q = ox * ox + oy * oy - cyl.radius * cyl.radius;
    const double disc = b * b - a * q;
    if (disc < 0.0) return kNone;
    const double s = std::sqrt(disc);
    tc0 = (-b - s) / a;
    tc1 = (-b + s) / a;
  }
  // Interval where z is within the slab.
  const double zmin = cyl.center.z - cyl.half_height;
  const double zmax = cyl.center.z + cyl.half_height;
  double tz0, tz1;
  if (d.z == 0.0) {
    if (o.z < zmin || o.z > zmax) return kNone;
    tz0 = -kNone;
    tz1 = kNone;
  } else {
    tz0 = (zmin - o.z) / d.z;
    tz1 = (zmax - o.z) / d.z;
    if (tz0 > tz1) std::swap(tz0, tz1);
  }
  const double t0 = std::max(tc0, tz0);
  const double t1 = std::min(tc1, tz1);
  if (t0 > t1 || t1 < 0.0) return kNone;
  return std::max(t0, 0.0);
}

double ray_obstacle_entry(const Vec3& o, const Vec3& d, const Obstacle& ob) {
  switch (ob.shape) {
    case ObstacleShape::Box:
      return ray_aabb_entry(o, d, ob.center - ob.half_extents,
                            ob.center + ob.half_extents);
    case ObstacleShape::Cylinder:
      return ray_cylinder_entry(o, d, ob);
    case ObstacleShape::Sphere:
      return ray_sphere_entry(o, d, ob.center, ob.radius);
  }
  return kNone;
}

}  // namespace

std::optional<double> ray_cast(const Scene& scene, const Vec3& origin,
                               const Vec3& direction, double max_range) {
  if (std::abs(direction.norm() - 1.0) > 1e-9)
    throw ContractViolation("ray_cast: direction must be a unit vector");
  if (max_range <= 0.0)
    throw ContractViolation("ray_cast: max_range must be positive");

  double best = ray_aabb_exit(origin, direction, scene.bounds.min,
                              scene.bounds.max);
  if (direction.z < 0.0) {
    const double ts = (scene.surface_depth - origin.z) / direction.z;
    if (ts >= 0.0) best = std::min(best, ts);
  }
  for (const auto& ob : scene.obstacles)
    best = std::min(best, ray_obstacle_entry(origin, direction, ob));

  if (best > max_range || best == kNone) return std::nullopt;
  return best;
}

double horizontal_clearance(const Scene& scene, const Vec3& p,
                            double dv_window) {
  if (!scene.bounds.contains(p))
    throw ContractViolation("horizontal_clearance: point outside bounds");
  double best = kClearanceCap;
  for (const auto& ob : scene.obstacles) {
    if (ob.z_max() < p.z - dv_window || ob.z_min() > p.z + dv_window) continue;
    best = std::min(best, ob.footprint_distance(p.x, p.y));
  }
  return best;
}

VerticalClearance vertical_clearance(const Scene& scene, const Vec3& p,
                                     double dh_window) {
  if (!scene.bounds.contains(p))
    throw ContractViolation("vertical_clearance: point outside bounds");
  VerticalClearance out;
  for (const auto& ob : scene.obstacles) {
    if (ob.footprint_distance(p.x, p.y) > dh_window) continue;
    double gap;
    if (p.z < ob.z_min())
      gap = ob.z_min() - p.z;
    else if (p.z > ob.z_max())
      gap = p.z - ob.z_max();
    else
      gap = 0.0;
    out.d_v = std::min(out.d_v, gap);
  }
  out.d_sur = std::min(p.z - scene.surface_depth, kClearanceCap);
  return out;
}

bool in_collision(const Scene& scene, const Vec3& p, double robot_radius) {
  if (robot_radius <= 0.0)
    throw ContractViolation("in_collision: robot_radius must be positive");
  if (p.z - robot_radius < scene.surface_depth) return true;
  const auto& b = scene.bounds;
  if (p.x - robot_radius < b.min.x || p.x + robot_radius > b.max.x ||
      p.y - robot_radius < b.min.y || p.y + robot_radius > b.max.y ||
      p.z + robot_radius > b.max.z)
    return true;
  for (const auto& ob : scene.obstacles)
    if (ob.surface_distance(p) <= robot_radius) return true;
  return false;
}

namespace {

using nlohmann::json;

constexpr int kSceneSchemaVersion = 1;

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Obstacle sample_obstacle(std::mt19937_64& rng, const Aabb& bounds,
                         double surface_depth, double max_radius) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Obstacle ob;
  const double margin = 0.5;
  auto in_range = [&](double lo, double hi) {
    return lo + u01(rng) * (hi - lo);
  };
  ob.center.x = in_range(bounds.min.x + margin, bounds.max.x - margin);
  ob.center.y = in_range(bounds.min.y + margin, bounds.max.y - margin);
  switch (kind(rng)) {
    case 0: {
      ob.shape = ObstacleShape::Box;
      ob.half_extents = {in_range(0.3, max_radius), in_range(0.3, max_radius),
                         in_range(0.4, 1.5)};
      ob.center.z = in_range(surface_depth + ob.half_extents.z,
                             bounds.max.z - ob.half_extents.z);
      break;
    }
    case 1: {
      ob.shape = ObstacleShape::Cylinder;
      ob.radius = in_range(0.3, max_radius);
      ob.half_height = in_range(0.5, (bounds.max.z - surface_depth) / 2.0);
      ob.center.z = in_range(surface_depth + ob.half_height,
                             bounds.max.z - ob.half_height);
      break;
    }
    default: {
      ob.shape = ObstacleShape::Sphere;
      ob.radius = in_range(0.3, max_radius);
      ob.center.z =
          in_range(surface_depth + ob.radius, bounds.max.z - ob.radius);
      break;
    }
  }
  return ob;
}

double obstacle_gap(const Obstacle& a, const Obstacle& b) {
  // Conservative: distance between footprint circles/rects in xy combined
  // with z-span gap. Good enough to enforce separation during generation.
  const double rxy_a = (a.shape == ObstacleShape::Box)
                           ? std::hypot(a.half_extents.x, a.half_extents.y)
                           : a.radius;
  const double rxy_b = (b.shape == ObstacleShape::Box)
                           ? std::hypot(b.half_extents.x, b.half_extents.y)
                           : b.radius;
  const double dxy =
      std::hypot(a.center.x - b.center.x, a.center.y - b.center.y) - rxy_a -
      rxy_b;
  double dz = 0.0;
  if (a.z_max() < b.z_min()) dz = b.z_min() - a.z_max();
  if (b.z_max() < a.z_min()) dz = a.z_min() - b.z_max();
  return std::max(dxy, dz);
}

}  // namespace

std::string Scene::to_json() const {
  json j;
  j["schema_version"] = kSceneSchemaVersion;
  j["bounds"] = {{"min", vec_to_json(bounds.min)},
                 {"max", vec_to_json(bounds.max)}};
  j["surface_depth"] = surface_depth;
  j["visibility"] = visibility;
  json obs = json::array();
  for (const auto& ob : obstacles) {
    json o;
    switch (ob.shape) {
      case ObstacleShape::Box:
        o["type"] = "box";
        o["center"] = vec_to_json(ob.center);
        o["half_extents"] = vec_to_json(ob.half_extents);
        break;
      case ObstacleShape::Cylinder:
        o["type"] = "cylinder";
        o["center"] = vec_to_json(ob.center);
        o["radius"] = ob.radius;
        o["half_height"] = ob.half_height;
        break;
      case ObstacleShape::Sphere:
        o["type"] = "sphere";
        o["center"] = vec_to_json(ob.center);
        o["radius"] = ob.radius;
        break;
    }
    obs.push_back(std::move(o));
  }
  j["obstacles"] = std::move(obs);
  return j.dump(2);
}

Scene Scene::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("schema_version").get<int>() != kSceneSchemaVersion)
    throw SceneError("scene: unsupported schema version");
  Scene s;
  s.bounds.min = vec_from_json(j.at("bounds").at("min"));
  s.bounds.max = vec_from_json(j.at("bounds").at("max"));
  s.surface_depth = j.at("surface_depth").get<double>();
  s.visibility = j.at("visibility").get<double>();
  if (s.visibility <= 0.0) throw SceneError("scene: visibility must be > 0");
  for (const auto& o : j.at("obstacles")) {
    Obstacle ob;
    const std::string type = o.at("type").get<std::string>();
    ob.center = vec_from_json(o.at("center"));
    if (type == "box") {
      ob.shape = ObstacleShape::Box;
      ob.half_extents = vec_from_json(o.at("half_extents"));
    } else if (type == "cylinder") {
      ob.shape = ObstacleShape::Cylinder;
      ob.radius = o.at("radius").get<double>();
      ob.half_height = o.at("half_height").get<double>();
    } else if (type == "sphere") {
      ob.shape = ObstacleShape::Sphere;
      ob.radius = o.at("radius").get<double>();
    } else {
      throw SceneError("scene: unknown obstacle type " + type);
    }
    s.obstacles.push_back(ob);
  }
  return s;
}

Scene generate_scene(SceneKind kind, uint64_t seed,
                     const CustomSceneSpec* custom) {
  std::mt19937_64 rng(seed);
  Scene s;
  int lo = 0, hi = 0;
  double min_sep = 0.0, max_radius = 1.5;
  switch (kind) {
    case SceneKind::A:
      s.bounds = {{-7.5, -7.5, 0.0}, {7.5, 7.5, 6.0}};
      lo = 3;
      hi = 6;
      break;
    case SceneKind::B:
      s.bounds = {{-20.0, -20.0, 0.0}, {20.0, 20.0, 10.0}};
      lo = 12;
      hi = 25;
      break;
    case SceneKind::Custom: {
      if (!custom) throw SceneError("generate_scene: custom spec required");
      s.bounds = custom->bounds;
      lo = custom->min_obstacles;
      hi = custom->max_obstacles;
      min_sep = custom->min_separation;
      max_radius = custom->max_radius;
      break;
    }
  }
  s.surface_depth = 0.0;
  std::uniform_int_distribution<int> count_dist(lo, hi);
  const int count = count_dist(rng);
  const int max_attempts = 200 * std::max(count, 1);
  int attempts = 0;
  while (static_cast<int>(s.obstacles.size()) < count) {
    if (++attempts > max_attempts)
      throw SceneError("generate_scene: could not place obstacles");
    Obstacle ob = sample_obstacle(rng, s.bounds, s.surface_depth, max_radius);
    bool ok = true;
    if (min_sep > 0.0) {
      for (const auto& other : s.obstacles)
        if (obstacle_gap(ob, other) < min_sep) { ok = false; break; }
    }
    if (ok) s.obstacles.push_back(ob);
  }
  return s;
}

}  // namespace uwnav
