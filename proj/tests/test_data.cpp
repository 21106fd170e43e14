#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "nasnerf/data.hpp"
#include "nasnerf/error.hpp"

using namespace nasnerf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nasnerf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes n_train + n_test 2x2 frames with identity poses shifted along z.
void write_fixture(const fs::path& dir, int n_train, int n_test, double fov) {
  for (auto [split, n] : {std::pair<std::string, int>{"train", n_train}, {"test", n_test}}) {
    fs::create_directories(dir / split);
    nlohmann::json j;
    j["camera_angle_x"] = fov;
    j["frames"] = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
      Image img(2, 2, 4, 1.0f);
      img.at(0, 0, 0) = 0.0f;
      img.at(1, 1, 3) = 0.0f;
      const std::string rel = "./" + split + "/r_" + std::to_string(i);
      write_png(img, dir / (rel + ".png"));
      j["frames"].push_back({{"file_path", rel},
                             {"transform_matrix", {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 4.0 + i}, {0, 0, 0, 1}}}});
    }
    std::ofstream(dir / ("transforms_" + split + ".json")) << j.dump(2);
  }
}

}  // namespace

TEST_CASE("load_blender: minimal fixture round-trips") {
  const auto dir = scratch("mini");
  write_fixture(dir, 1, 0, 0.6911);
  const auto ds = load_blender(dir);
  REQUIRE(ds.frames.size() == 1);
  const Frame& f = ds.frames[0];
  CHECK(f.camera.fov_x == 0.6911);
  CHECK(f.camera.width == 2);
  CHECK(f.camera.pose(2, 3) == 4.0);
  CHECK(f.image.channels == 3);
  CHECK(f.image.at(0, 0, 0) == 0.0f);
  // Transparent pixel composited on white.
  CHECK(f.image.at(1, 1, 1) == 1.0f);
  CHECK(ds.near == 2.0);
  CHECK(ds.far == 6.0);
  const auto again = load_blender(dir);
  CHECK(again.frames[0].image.data == f.image.data);
}

TEST_CASE("load_blender: split sizes follow the files") {
  const auto dir = scratch("hundred");
  write_fixture(dir, 60, 40, 0.5);
  const auto ds = load_blender(dir);
  CHECK(ds.train.size() == 60);
  CHECK(ds.eval.size() == 40);
}

TEST_CASE("load_blender: errors carry context") {
  const auto dir = scratch("broken");
  write_fixture(dir, 2, 1, 0.5);
  fs::remove(dir / "train" / "r_1.png");
  try {
    load_blender(dir);
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
  }
  CHECK_THROWS_AS(load_blender(scratch("empty")), IoError);
}

TEST_CASE("procedural: empty scene is pure background") {
  ProceduralSceneSpec spec;
  spec.width = 8;
  spec.height = 8;
  spec.background = {0.2, 0.3, 0.4};
  const ProceduralOracle o(spec);
  const auto img = o.render(look_at({4, 0, 1}, 0.7, 8, 8));
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) CHECK(img.data[p * 3 + c] == doctest::Approx(spec.background[c]));
  }
}

TEST_CASE("procedural: opaque centred sphere fills the centre pixel") {
  ProceduralSceneSpec spec;
  spec.spheres = {{{0, 0, 0}, 0.5, {0.1, 0.6, 0.3}, std::numeric_limits<double>::infinity()}};
  const ProceduralOracle o(spec);
  Ray ray;
  ray.origin = {0, 0, 4};
  ray.direction = {0, 0, -1};
  const auto rgb = o.ray_color(ray);
  for (int c = 0; c < 3; ++c) CHECK(rgb[c] == doctest::Approx(spec.spheres[0].rgb[c]));
  const auto img = o.render(look_at({0, -4, 0}, 0.7, 9, 9));
  CHECK(img.at(4, 4, 1) == doctest::Approx(0.6));
}

TEST_CASE("procedural: spec validation and JSON") {
  auto spec = default_procedural_spec(3);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.spheres.size() == 3);
  auto back = parse_procedural_spec(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  spec.spheres[0].radius = 5.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(parse_procedural_spec("[1,2]"), ConfigError);
  const auto opaque = parse_procedural_spec(R"({"spheres":[{"center":[0,0,0],"radius":0.5,"rgb":[1,0,0],"density":"inf"}]})");
  CHECK(std::isinf(opaque.spheres[0].density));
}

TEST_CASE("generate/save: default spec writes 25 frames, byte-identical per seed") {
  auto spec = default_procedural_spec(7);
  spec.width = 16;
  spec.height = 16;
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  save_blender(generate_procedural(spec), a);
  save_blender(generate_procedural(spec), b);
  int pngs = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() == ".png") {
      ++pngs;
      CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
    }
  }
  CHECK(pngs == 25);
  CHECK(slurp(a / "transforms_train.json") == slurp(b / "transforms_train.json"));
  const auto ds = load_blender(a);
  CHECK(ds.train.size() == 20);
  CHECK(ds.eval.size() == 5);
}

TEST_CASE("downsample halves images and intrinsics") {
  auto spec = default_procedural_spec(1);
  spec.width = 16;
  spec.height = 16;
  spec.train_views = 2;
  spec.eval_views = 1;
  const auto ds = generate_procedural(spec);
  const auto half = downsample(ds, 2);
  CHECK(half.frames[0].image.width == 8);
  CHECK(half.frames[0].camera.width == 8);
  CHECK(half.frames[0].camera.focal() == doctest::Approx(ds.frames[0].camera.focal() / 2));
}
