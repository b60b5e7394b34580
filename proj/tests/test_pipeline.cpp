#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pipeline.hpp"
#include "synth.hpp"

using namespace f3d;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::vector<std::uint8_t> file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Report JSON with every timing field removed, for determinism comparisons.
nlohmann::json strip_timings(nlohmann::json j) {
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto& [k, v] : j.items()) {
      if (k.size() >= 3 && k.rfind("_ms") == k.size() - 3) continue;
      if (k == "timings_ms" || k == "time_pct") continue;
      out[k] = strip_timings(v);
    }
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (auto& v : j) out.push_back(strip_timings(v));
    return out;
  }
  return j;
}

synth::FixtureFacade make_facade(const std::string& id, const std::string& block,
                                 const std::string& neighbor, double yaw, double pitch,
                                 bool occlusion, double width_m = 12.0) {
  synth::WallSpec spec;
  spec.width_m = width_m;
  spec.height_m = 9.0;
  synth::FixtureFacade f;
  f.id = id;
  f.block = block;
  f.neighbor = neighbor;
  f.width_m = width_m;
  f.scene = synth::render_wall_scene(800, 600, yaw, pitch, 1100, spec, occlusion);
  return f;
}

}  // namespace

TEST_CASE("manifest: missing file is a fatal error naming the path") {
  std::string dir = fresh_dir("f3d_manifest_missing");
  std::ofstream m(dir + "/manifest.json");
  m << R"({"facades": [{"id": "f1", "image": "nope.png", "facade_mask": "nope_mask.png",
        "width_m": 10, "block": "b1", "neighbor": "f1"}],
        "blocks": [{"id": "b1"}]})";
  m.close();
  try {
    SceneManifest::load(dir + "/manifest.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ManifestError);
    CHECK(std::string(e.what()).find("nope.png") != std::string::npos);
  }
}

TEST_CASE("manifest: broken cycles and bad widths are fatal") {
  std::string dir = fresh_dir("f3d_manifest_cycle");
  GrayImage dummy(16, 16, 128);
  save_gray_png(dummy, dir + "/img.png");
  save_gray_png(dummy, dir + "/mask.png");

  auto write_manifest = [&](const std::string& body) {
    std::ofstream m(dir + "/manifest.json");
    m << body;
  };

  // f2 links to itself, so the block's facades are not a single cycle.
  write_manifest(R"({"facades": [
    {"id": "f1", "image": "img.png", "facade_mask": "mask.png", "width_m": 10,
     "block": "b1", "neighbor": "f2"},
    {"id": "f2", "image": "img.png", "facade_mask": "mask.png", "width_m": 10,
     "block": "b1", "neighbor": "f2"}],
    "blocks": [{"id": "b1"}]})");
  CHECK_THROWS_AS(SceneManifest::load(dir + "/manifest.json"), Error);

  write_manifest(R"({"facades": [
    {"id": "f1", "image": "img.png", "facade_mask": "mask.png", "width_m": -3,
     "block": "b1", "neighbor": "f1"}],
    "blocks": [{"id": "b1"}]})");
  CHECK_THROWS_AS(SceneManifest::load(dir + "/manifest.json"), Error);

  write_manifest(R"({"facades": [
    {"id": "f1", "image": "img.png", "facade_mask": "mask.png", "width_m": 10,
     "block": "zzz", "neighbor": "f1"}],
    "blocks": [{"id": "b1"}]})");
  CHECK_THROWS_AS(SceneManifest::load(dir + "/manifest.json"), Error);
}

TEST_CASE("fronto-parallel facade takes the identity-rectification path") {
  std::string dir = fresh_dir("f3d_pipe_identity");
  auto f = make_facade("flat", "b1", "flat", 0.0, 0.0, false);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f}, {{0, 0}}, {"b1"});

  RunFlags flags;
  flags.seed = 3;
  RunReport report = run_pipeline(manifest_path, dir + "/out", flags);
  REQUIRE(report.facades.size() == 1);
  REQUIRE(report.facades[0].ok);
  CHECK_FALSE(report.partial);
  CHECK(report.blocks[0].cuboid_count == 1);
  CHECK(report.facades[0].approximate_focal);  // both VPs at infinity

  // The rectified texture is a crop of the source: compare against the
  // rendered image inside the facade quad.
  GrayImage rectified = load_image(dir + "/out/facades/flat.png");
  const auto& wall = f.scene.walls[0];
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (auto& c : wall.corners) {
    x0 = std::min(x0, c.x);
    y0 = std::min(y0, c.y);
    x1 = std::max(x1, c.x);
    y1 = std::max(y1, c.y);
  }
  CHECK(std::fabs(rectified.width - (x1 - x0)) <= 3.0);
  CHECK(std::fabs(rectified.height - (y1 - y0)) <= 3.0);

  double err = 0;
  size_t n = 0;
  for (int y = 4; y < rectified.height - 4; ++y)
    for (int x = 4; x < rectified.width - 4; ++x) {
      int sx = static_cast<int>(x0) + x, sy = static_cast<int>(y0) + y;
      if (sx < 0 || sx >= 800 || sy < 0 || sy >= 600) continue;
      err += std::fabs(static_cast<double>(rectified.at(x, y)) - f.scene.image.at(sx, sy));
      ++n;
    }
  CHECK(err / n < 2.0);

  // The recovered aspect matches the wall.
  CHECK(report.facades[0].aspect ==
        doctest::Approx(wall.true_aspect).epsilon(0.03));
}

TEST_CASE("corner image yields two rectified facades from one input") {
  std::string dir = fresh_dir("f3d_pipe_corner");
  // Yaw near 45 degrees sees both corner walls at comparable angles, like the
  // corner photographs the block manifests come from.
  synth::WallSpec front;
  front.width_m = 12;
  front.height_m = 9;
  synth::WallSpec side;
  side.width_m = 8;
  side.height_m = 9;
  side.window_cols = 4;
  auto scene = synth::render_corner_scene(1000, 700, 42, 16, 1000, front, side, 30.0);
  REQUIRE(scene.walls.size() == 2);

  synth::FixtureFacade fa;
  fa.id = "front";
  fa.block = "b1";
  fa.neighbor = "side";
  fa.same_building = true;
  fa.width_m = 12;
  fa.scene = scene;
  fa.wall_index = 0;
  synth::FixtureFacade fb;
  fb.id = "side";
  fb.block = "b1";
  fb.neighbor = "front";
  fb.same_building = true;
  fb.width_m = 8;
  fb.scene = scene;
  fb.wall_index = 1;

  auto manifest_path = synth::write_fixture(dir + "/fix", {fa, fb}, {{0, 0}}, {"b1"});
  RunFlags flags;
  flags.seed = 11;
  RunReport report = run_pipeline(manifest_path, dir + "/out", flags);
  REQUIRE(report.facades.size() == 2);
  CHECK(report.facades[0].ok);
  CHECK(report.facades[1].ok);
  CHECK(fs::exists(dir + "/out/facades/front.png"));
  CHECK(fs::exists(dir + "/out/facades/side.png"));
  // The receding wall often resolves its vertical pencil as infinite, which
  // forces the fallback focal; aspects stay in the approximate-focal band.
  CHECK(report.facades[0].aspect == doctest::Approx(12.0 / 9.0).epsilon(0.10));
  CHECK(report.facades[1].aspect == doctest::Approx(8.0 / 9.0).epsilon(0.25));
  CHECK(report.blocks[0].cuboid_count == 2);
}

TEST_CASE("seeded runs are bit-identical apart from timings") {
  std::string dir = fresh_dir("f3d_pipe_determinism");
  auto f1 = make_facade("d1", "b1", "d1", 22, 9, true);
  auto f2 = make_facade("d2", "b2", "d2", -18, 12, false, 10.0);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f1, f2}, {{0, 0}, {60, 0}},
                                            {"b1", "b2"});

  RunFlags flags;
  flags.seed = 77;
  flags.metrics = true;
  RunReport a = run_pipeline(manifest_path, dir + "/out_a", flags);
  RunReport b = run_pipeline(manifest_path, dir + "/out_b", flags);
  CHECK_FALSE(a.partial);

  CHECK(strip_timings(nlohmann::json::parse(a.to_json())) ==
        strip_timings(nlohmann::json::parse(b.to_json())));
  for (const std::string rel : {"facades/d1.png", "facades/d2.png", "facades/d1.json",
                                "model/scene.bin", "model/scene.gltf", "model/tex_d1.png"}) {
    CHECK(file_bytes(dir + "/out_a/" + rel) == file_bytes(dir + "/out_b/" + rel));
  }
}

TEST_CASE("a corrupt facade is isolated; everything else is unchanged") {
  std::string dir = fresh_dir("f3d_pipe_isolation");
  auto good = make_facade("good", "b1", "good", 20, 8, false);
  auto bad = make_facade("bad", "b2", "bad", -25, 10, false);
  auto manifest_path =
      synth::write_fixture(dir + "/fix", {good, bad}, {{0, 0}, {80, 0}}, {"b1", "b2"});

  RunFlags flags;
  flags.seed = 5;
  RunReport clean = run_pipeline(manifest_path, dir + "/out_clean", flags);
  REQUIRE_FALSE(clean.partial);

  // Corrupt the second facade's image in place.
  std::ofstream(dir + "/fix/bad_image.png", std::ios::binary) << "not a png";
  RunReport broken = run_pipeline(manifest_path, dir + "/out_broken", flags);
  CHECK(broken.partial);
  REQUIRE(broken.facades.size() == 2);
  CHECK(broken.facades[0].ok);
  CHECK_FALSE(broken.facades[1].ok);
  CHECK(!broken.facades[1].error.empty());

  CHECK(file_bytes(dir + "/out_clean/facades/good.png") ==
        file_bytes(dir + "/out_broken/facades/good.png"));
  CHECK_FALSE(fs::exists(dir + "/out_broken/facades/bad.png"));
}

TEST_CASE("metrics instrumentation reports positive dedup reductions") {
  std::string dir = fresh_dir("f3d_pipe_metrics");
  auto f = make_facade("m1", "b1", "m1", 26, 11, false);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f}, {{0, 0}}, {"b1"});

  RunFlags flags;
  flags.seed = 9;
  flags.metrics = true;
  RunReport report = run_pipeline(manifest_path, dir + "/out", flags);
  REQUIRE(report.vp_reduction.has_value());
  const auto& rr = *report.vp_reduction;
  CHECK(rr.combined.before_count > 0);
  CHECK(rr.combined.after_count < rr.combined.before_count);
  CHECK(rr.combined.space_pct() > 0.0);
  CHECK(rr.collinear.space_pct() >= 0.0);
  CHECK(rr.infinite.space_pct() >= 0.0);
}

TEST_CASE("debug flag writes the per-stage artifacts") {
  std::string dir = fresh_dir("f3d_pipe_debug");
  auto f = make_facade("dbg", "b1", "dbg", 15, 5, true);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f}, {{0, 0}}, {"b1"});
  RunFlags flags;
  flags.seed = 1;
  flags.debug = true;
  run_pipeline(manifest_path, dir + "/out", flags);
  for (const std::string rel :
       {"debug/dbg_matte.png", "debug/dbg_trimap.png", "debug/dbg_edges.png",
        "debug/dbg_segments.json", "debug/dbg_overlay.png", "debug/dbg_rect_occlusion.png"})
    CHECK(fs::exists(dir + "/out/" + rel));
  CHECK(fs::exists(dir + "/out/report.json"));

  // The segments dump is a JSON array of {a, b, support_count}.
  auto segs = nlohmann::json::parse(file_bytes(dir + "/out/debug/dbg_segments.json"));
  REQUIRE(segs.is_array());
  REQUIRE(!segs.empty());
  CHECK(segs[0].contains("a"));
  CHECK(segs[0].contains("b"));
  CHECK(segs[0].contains("support_count"));
}

TEST_CASE("an extra empty block is reported and harmless") {
  std::string dir = fresh_dir("f3d_pipe_emptyblock");
  auto f = make_facade("solo", "b1", "solo", 18, 7, false);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f}, {{0, 0}, {100, 100}},
                                            {"b1", "b_empty"});
  RunFlags flags;
  flags.seed = 2;
  RunReport report = run_pipeline(manifest_path, dir + "/out", flags);
  REQUIRE(report.blocks.size() == 2);
  CHECK(report.blocks[1].id == "b_empty");
  CHECK(report.blocks[1].cuboid_count == 0);
  CHECK_FALSE(report.partial);
}

TEST_CASE("occlusion is inpainted in the rectified frame") {
  std::string dir = fresh_dir("f3d_pipe_occl");
  auto f = make_facade("occ", "b1", "occ", 20, 8, true);
  auto manifest_path = synth::write_fixture(dir + "/fix", {f}, {{0, 0}}, {"b1"});
  RunFlags flags;
  flags.seed = 4;
  RunReport report = run_pipeline(manifest_path, dir + "/out", flags);
  REQUIRE(report.facades[0].ok);
  CHECK(report.facades[0].inpaint.slice_count >= 1);
  CHECK(report.facades[0].inpaint.peak_slice_area <= 600 * 400);

  // The statue (intensity 40) must be gone from the rectified texture: no
  // sizable very-dark region remains where the facade is opaque.
  auto [rectified, alpha] = load_gray_alpha_png(dir + "/out/facades/occ.png");
  size_t dark = 0, opaque = 0;
  for (size_t i = 0; i < rectified.size(); ++i) {
    if (alpha[i] <= 128) continue;
    ++opaque;
    dark += rectified.data[i] < 50 ? 1 : 0;
  }
  REQUIRE(opaque > 0);
  CHECK(static_cast<double>(dark) / opaque < 0.002);
}
