#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nasnerf/image.hpp"
#include "nasnerf/render.hpp"

namespace nasnerf {

struct Frame {
  Image image;  // RGB
  Camera camera;
  std::string file_path;  // as listed in the transforms file, may be empty
};

struct SceneDataset {
  std::string name;
  std::vector<Frame> frames;
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
  double near = 2.0;
  double far = 6.0;
  std::array<double, 3> background{1.0, 1.0, 1.0};

  // Throws ConfigError if an image disagrees with its camera, an index is
  // out of range or the splits overlap.
  void validate() const;
};

// Reads transforms_train.json and transforms_test.json (Blender synthetic
// layout). RGBA frames are composited onto `background`. Optional "near" and
// "far" keys override the 2/6 defaults.
SceneDataset load_blender(const std::filesystem::path& directory,
                          const std::array<double, 3>& background = {1.0, 1.0, 1.0});

// Writes PNG frames under train/ and test/ plus both transforms files.
// `extra` is merged into each transforms file as additional top-level keys.
void save_blender(const SceneDataset& dataset, const std::filesystem::path& directory,
                  const std::string& extra_json = "{}");

// Box-downsamples every frame and scales the intrinsics to match.
SceneDataset downsample(const SceneDataset& dataset, int factor);

// Density is per world unit; an infinite density is an opaque surface.
struct Sphere {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 0.5;
  std::array<double, 3> rgb{0.5, 0.5, 0.5};
  double density = 10.0;
};

struct ProceduralSceneSpec {
  std::vector<Sphere> spheres;
  int width = 64;
  int height = 64;
  int train_views = 20;
  int eval_views = 5;
  double ring_radius = 4.0;
  double elevation = 0.5;  // radians above the xy-plane
  double fov_x = 0.6911112070083618;
  double near = 2.0;
  double far = 6.0;
  std::array<double, 3> background{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  // Spheres must fit inside the ball every camera sees entirely between
  // near and far.
  void validate() const;
};

// Three seeded spheres, 64x64, 20 train + 5 eval views.
ProceduralSceneSpec default_procedural_spec(std::uint64_t seed = 0);

// JSON form; a missing "spheres" key means default_procedural_spec(seed)'s.
ProceduralSceneSpec parse_procedural_spec(const std::string& json_text);
std::string to_json(const ProceduralSceneSpec& spec);

// Camera looking at the origin from `eye`, world +z up.
Camera look_at(const Eigen::Vector3d& eye, double fov_x, int width, int height);

// Exact ray integral through the piecewise-constant sphere field.
class ProceduralOracle {
 public:
  explicit ProceduralOracle(ProceduralSceneSpec spec);

  std::array<double, 3> ray_color(const Ray& ray) const;
  Image render(const Camera& camera) const;
  // Point sample of the field: summed density and density-weighted colour.
  // Opaque spheres report kOpaqueDensity.
  std::pair<double, std::array<double, 3>> sample(const Eigen::Vector3d& point) const;
  const ProceduralSceneSpec& spec() const { return spec_; }

  static constexpr double kOpaqueDensity = 1e6;

 private:
  ProceduralSceneSpec spec_;
};

SceneDataset generate_procedural(const ProceduralSceneSpec& spec);

}  // namespace nasnerf
