#include "nasnerf/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "nasnerf/error.hpp"
#include "nasnerf/rng.hpp"

namespace nasnerf {

using json = nlohmann::ordered_json;

void SceneDataset::validate() const {
  std::set<std::size_t> seen;
  for (const auto* split : {&train, &eval}) {
    for (std::size_t i : *split) {
      if (i >= frames.size()) throw ConfigError("dataset: split index out of range");
      if (!seen.insert(i).second) throw ConfigError("dataset: train and eval splits overlap");
    }
  }
  for (const Frame& f : frames) {
    if (f.image.width != f.camera.width || f.image.height != f.camera.height || f.image.channels != 3) {
      throw ConfigError("dataset: frame '" + f.file_path + "' does not match its camera");
    }
  }
  if (!(near > 0.0 && near < far)) throw ConfigError("dataset: need 0 < near < far");
}

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::Matrix4d parse_pose(const json& m, const std::string& ctx) {
  if (!m.is_array() || m.size() < 3) throw ConfigError(ctx + ": transform_matrix must be 4x4");
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  for (int r = 0; r < static_cast<int>(std::min<std::size_t>(4, m.size())); ++r) {
    if (!m[r].is_array() || m[r].size() != 4) throw ConfigError(ctx + ": transform_matrix must be 4x4");
    for (int c = 0; c < 4; ++c) pose(r, c) = m[r][c].get<double>();
  }
  if (!pose.allFinite() || std::abs(pose.topLeftCorner<3, 3>().determinant()) < 1e-8) {
    throw ConfigError(ctx + ": pose is not invertible");
  }
  return pose;
}

std::filesystem::path resolve_image(const std::filesystem::path& dir, const std::string& file_path) {
  std::filesystem::path p = dir / file_path;
  if (!p.has_extension() || !std::filesystem::exists(p)) {
    std::filesystem::path png = p;
    png += ".png";
    if (std::filesystem::exists(png)) return png;
  }
  return p;
}

void load_split(const std::filesystem::path& dir, const std::string& split, SceneDataset& ds,
                std::vector<std::size_t>& indices, const std::array<double, 3>& bg, bool& bounds_set) {
  const auto path = dir / ("transforms_" + split + ".json");
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    const double fov = j.at("camera_angle_x").get<double>();
    if (j.contains("near") && j.contains("far")) {
      const double n = j["near"].get<double>(), f = j["far"].get<double>();
      if (bounds_set && (n != ds.near || f != ds.far)) throw ConfigError(path.string() + ": near/far disagree");
      ds.near = n;
      ds.far = f;
      bounds_set = true;
    }
    const auto& frames = j.at("frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::string ctx = path.string() + " frame " + std::to_string(i);
      Frame fr;
      try {
        fr.file_path = frames[i].at("file_path").get<std::string>();
        fr.camera.pose = parse_pose(frames[i].at("transform_matrix"), ctx);
      } catch (const json::exception& e) {
        throw ConfigError(ctx + ": " + e.what());
      }
      const auto img_path = resolve_image(dir, fr.file_path);
      try {
        fr.image = read_png(img_path);
      } catch (const IoError& e) {
        throw IoError(ctx + ": " + e.what());
      }
      if (fr.image.channels == 4) {
        fr.image = composite_alpha(fr.image, {static_cast<float>(bg[0]), static_cast<float>(bg[1]),
                                              static_cast<float>(bg[2])});
      } else if (fr.image.channels != 3) {
        throw IoError(ctx + ": expected an RGB or RGBA image");
      }
      fr.camera.fov_x = fov;
      fr.camera.width = fr.image.width;
      fr.camera.height = fr.image.height;
      try {
        fr.camera.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(ctx + ": " + e.what());
      }
      indices.push_back(ds.frames.size());
      ds.frames.push_back(std::move(fr));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

SceneDataset load_blender(const std::filesystem::path& directory, const std::array<double, 3>& background) {
  SceneDataset ds;
  ds.name = std::filesystem::absolute(directory).lexically_normal().filename().string();
  if (ds.name.empty()) ds.name = std::filesystem::absolute(directory).parent_path().filename().string();
  ds.background = background;
  bool bounds_set = false;
  load_split(directory, "train", ds, ds.train, background, bounds_set);
  load_split(directory, "test", ds, ds.eval, background, bounds_set);
  ds.validate();
  return ds;
}

void save_blender(const SceneDataset& ds, const std::filesystem::path& dir, const std::string& extra_json) {
  ds.validate();
  const json extra = json::parse(extra_json);
  for (const auto& [split, indices] : {std::pair{"train", &ds.train}, std::pair{"test", &ds.eval}}) {
    std::filesystem::create_directories(dir / split);
    json j;
    j["camera_angle_x"] = indices->empty() ? 0.6911112070083618 : ds.frames[(*indices)[0]].camera.fov_x;
    j["near"] = ds.near;
    j["far"] = ds.far;
    j["frames"] = json::array();
    for (std::size_t k = 0; k < indices->size(); ++k) {
      const Frame& f = ds.frames[(*indices)[k]];
      char name[32];
      std::snprintf(name, sizeof(name), "r_%03zu", k);
      const std::string rel = std::string("./") + split + "/" + name;
      write_png(f.image, dir / split / (std::string(name) + ".png"));
      json m = json::array();
      for (int r = 0; r < 4; ++r) m.push_back({f.camera.pose(r, 0), f.camera.pose(r, 1), f.camera.pose(r, 2), f.camera.pose(r, 3)});
      j["frames"].push_back({{"file_path", rel}, {"transform_matrix", m}});
    }
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(dir / (std::string("transforms_") + split + ".json"));
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing transforms file in " + dir.string());
  }
}

SceneDataset downsample(const SceneDataset& ds, int factor) {
  if (factor <= 1) return ds;
  SceneDataset out = ds;
  for (Frame& f : out.frames) {
    f.image = downsample(f.image, factor);
    f.camera.width = f.image.width;
    f.camera.height = f.image.height;
  }
  return out;
}

void ProceduralSceneSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("scene spec: image size must be positive");
  if (train_views < 1 || eval_views < 0) throw ConfigError("scene spec: need >= 1 train view");
  if (!(near > 0.0 && near < ring_radius && ring_radius < far)) {
    throw ConfigError("scene spec: need 0 < near < ring_radius < far");
  }
  if (!(fov_x > 0.0 && fov_x < M_PI)) throw ConfigError("scene spec: fov_x must lie in (0, pi)");
  const double bound = std::min(ring_radius - near, far - ring_radius);
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const Sphere& s = spheres[i];
    const std::string ctx = "scene spec: sphere " + std::to_string(i);
    if (!(s.radius > 0.0)) throw ConfigError(ctx + " radius must be positive");
    if (!(s.density >= 0.0)) throw ConfigError(ctx + " density must be non-negative");
    const double r = std::sqrt(s.center[0] * s.center[0] + s.center[1] * s.center[1] + s.center[2] * s.center[2]);
    if (r + s.radius > bound) throw ConfigError(ctx + " leaves the scene bounds");
    for (double c : s.rgb) {
      if (!(c >= 0.0 && c <= 1.0)) throw ConfigError(ctx + " colour outside [0,1]");
    }
  }
}

ProceduralSceneSpec default_procedural_spec(std::uint64_t seed) {
  ProceduralSceneSpec s;
  s.seed = seed;
  Rng rng(derive_seed(seed, {0}));
  for (int i = 0; i < 3; ++i) {
    Sphere sp;
    // Spread the spheres around the z axis so they do not coincide.
    const double angle = 2.0 * M_PI * (i + rng.uniform(-0.2, 0.2)) / 3.0;
    const double dist = rng.uniform(0.35, 0.7);
    sp.center = {dist * std::cos(angle), dist * std::sin(angle), rng.uniform(-0.3, 0.3)};
    sp.radius = rng.uniform(0.3, 0.5);
    sp.rgb = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    sp.density = rng.uniform(4.0, 12.0);
    s.spheres.push_back(sp);
  }
  return s;
}

ProceduralSceneSpec parse_procedural_spec(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("scene spec: expected a JSON object");
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    ProceduralSceneSpec s = default_procedural_spec(seed);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.train_views = j.value("train_views", s.train_views);
    s.eval_views = j.value("eval_views", s.eval_views);
    s.ring_radius = j.value("ring_radius", s.ring_radius);
    s.elevation = j.value("elevation", s.elevation);
    s.fov_x = j.value("fov_x", s.fov_x);
    s.near = j.value("near", s.near);
    s.far = j.value("far", s.far);
    if (j.contains("background")) s.background = j["background"].get<std::array<double, 3>>();
    if (j.contains("spheres")) {
      s.spheres.clear();
      for (const auto& e : j["spheres"]) {
        Sphere sp;
        sp.center = e.at("center").get<std::array<double, 3>>();
        sp.radius = e.at("radius").get<double>();
        sp.rgb = e.at("rgb").get<std::array<double, 3>>();
        if (e.contains("density") && e["density"].is_string()) {
          if (e["density"].get<std::string>() != "inf") throw ConfigError("scene spec: density must be a number or \"inf\"");
          sp.density = std::numeric_limits<double>::infinity();
        } else {
          sp.density = e.value("density", sp.density);
        }
        s.spheres.push_back(sp);
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene spec: ") + e.what());
  }
}

std::string to_json(const ProceduralSceneSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["width"] = s.width;
  j["height"] = s.height;
  j["train_views"] = s.train_views;
  j["eval_views"] = s.eval_views;
  j["ring_radius"] = s.ring_radius;
  j["elevation"] = s.elevation;
  j["fov_x"] = s.fov_x;
  j["near"] = s.near;
  j["far"] = s.far;
  j["background"] = s.background;
  j["spheres"] = json::array();
  for (const Sphere& sp : s.spheres) {
    json e;
    e["center"] = sp.center;
    e["radius"] = sp.radius;
    e["rgb"] = sp.rgb;
    if (std::isinf(sp.density)) {
      e["density"] = "inf";
    } else {
      e["density"] = sp.density;
    }
    j["spheres"].push_back(e);
  }
  return j.dump(2) + "\n";
}

Camera look_at(const Eigen::Vector3d& eye, double fov_x, int width, int height) {
  const Eigen::Vector3d back = eye.normalized();  // camera +z points away from the target
  Eigen::Vector3d up(0.0, 0.0, 1.0);
  if (std::abs(back.dot(up)) > 0.999) up = Eigen::Vector3d(0.0, 1.0, 0.0);
  const Eigen::Vector3d right = up.cross(back).normalized();
  const Eigen::Vector3d cam_up = back.cross(right);
  Camera c;
  c.pose.setIdentity();
  c.pose.block<3, 1>(0, 0) = right;
  c.pose.block<3, 1>(0, 1) = cam_up;
  c.pose.block<3, 1>(0, 2) = back;
  c.pose.block<3, 1>(0, 3) = eye;
  c.fov_x = fov_x;
  c.width = width;
  c.height = height;
  return c;
}

ProceduralOracle::ProceduralOracle(ProceduralSceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::pair<double, std::array<double, 3>> ProceduralOracle::sample(const Eigen::Vector3d& p) const {
  double sigma = 0.0;
  std::array<double, 3> weighted{};
  for (const Sphere& s : spec_.spheres) {
    const Eigen::Vector3d c(s.center[0], s.center[1], s.center[2]);
    if ((p - c).squaredNorm() >= s.radius * s.radius) continue;
    const double d = std::isinf(s.density) ? kOpaqueDensity : s.density;
    sigma += d;
    for (int k = 0; k < 3; ++k) weighted[k] += d * s.rgb[k];
  }
  std::array<double, 3> rgb{};
  if (sigma > 0.0) {
    for (int k = 0; k < 3; ++k) rgb[k] = weighted[k] / sigma;
  }
  return {sigma, rgb};
}

std::array<double, 3> ProceduralOracle::ray_color(const Ray& ray) const {
  // Breakpoints where the set of enclosing spheres changes.
  std::vector<double> ts{ray.near, ray.far};
  double surface = std::numeric_limits<double>::infinity();
  std::array<double, 3> surface_rgb{};
  for (const Sphere& s : spec_.spheres) {
    const Eigen::Vector3d c(s.center[0], s.center[1], s.center[2]);
    const Eigen::Vector3d oc = ray.origin - c;
    const double b = oc.dot(ray.direction);
    const double disc = b * b - (oc.squaredNorm() - s.radius * s.radius);
    if (disc <= 0.0) continue;
    const double t0 = -b - std::sqrt(disc), t1 = -b + std::sqrt(disc);
    if (std::isinf(s.density)) {
      // First point of the opaque sphere inside [near, far].
      const double hit = std::max(t0, ray.near);
      if (hit < t1 && hit <= ray.far && hit < surface) {
        surface = hit;
        surface_rgb = s.rgb;
      }
      continue;
    }
    for (double t : {t0, t1}) {
      if (t > ray.near && t < ray.far) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  std::array<double, 3> color{};
  double trans = 1.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double a = ts[i];
    const double b = std::min(ts[i + 1], surface);
    if (b <= a) break;
    double sigma = 0.0;
    std::array<double, 3> weighted{};
    const Eigen::Vector3d mid = ray.origin + 0.5 * (a + b) * ray.direction;
    for (const Sphere& s : spec_.spheres) {
      if (std::isinf(s.density)) continue;
      const Eigen::Vector3d c(s.center[0], s.center[1], s.center[2]);
      if ((mid - c).squaredNorm() >= s.radius * s.radius) continue;
      sigma += s.density;
      for (int k = 0; k < 3; ++k) weighted[k] += s.density * s.rgb[k];
    }
    if (sigma > 0.0) {
      const double alpha = 1.0 - std::exp(-sigma * (b - a));
      for (int k = 0; k < 3; ++k) color[k] += trans * alpha * weighted[k] / sigma;
      trans *= 1.0 - alpha;
    }
  }
  if (std::isfinite(surface)) {
    for (int k = 0; k < 3; ++k) color[k] += trans * surface_rgb[k];
    trans = 0.0;
  }
  for (int k = 0; k < 3; ++k) color[k] += trans * spec_.background[k];
  return color;
}

Image ProceduralOracle::render(const Camera& camera) const {
  const auto rays = generate_rays(camera, spec_.near, spec_.far);
  Image img(camera.width, camera.height, 3);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const auto c = ray_color(rays[i]);
    for (int k = 0; k < 3; ++k) img.data[i * 3 + k] = static_cast<float>(c[k]);
  }
  return img;
}

SceneDataset generate_procedural(const ProceduralSceneSpec& spec) {
  ProceduralOracle oracle(spec);
  SceneDataset ds;
  ds.name = "procedural";
  ds.near = spec.near;
  ds.far = spec.far;
  ds.background = spec.background;
  auto add = [&](double azimuth, double elevation, std::vector<std::size_t>& split) {
    const Eigen::Vector3d eye(spec.ring_radius * std::cos(elevation) * std::cos(azimuth),
                              spec.ring_radius * std::cos(elevation) * std::sin(azimuth),
                              spec.ring_radius * std::sin(elevation));
    Frame f;
    f.camera = look_at(eye, spec.fov_x, spec.width, spec.height);
    f.image = oracle.render(f.camera);
    split.push_back(ds.frames.size());
    ds.frames.push_back(std::move(f));
  };
  for (int i = 0; i < spec.train_views; ++i) {
    // Alternate elevations so the training views are not coplanar.
    const double elev = i % 2 == 0 ? spec.elevation : 0.5 * spec.elevation;
    add(2.0 * M_PI * i / spec.train_views, elev, ds.train);
  }
  for (int i = 0; i < spec.eval_views; ++i) {
    add(2.0 * M_PI * (i + 0.5) / std::max(1, spec.eval_views), 0.75 * spec.elevation, ds.eval);
  }
  return ds;
}

}  // namespace nasnerf
