#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "image_io.hpp"
#include "model3d.hpp"

namespace f3d {

namespace {

using nlohmann::json;

struct BinBuilder {
  std::vector<std::uint8_t> bytes;
  json views = json::array();
  json accessors = json::array();

  void pad4() {
    while (bytes.size() % 4 != 0) bytes.push_back(0);
  }

  int add_view(const void* data, size_t len, int target) {
    pad4();
    json view{{"buffer", 0}, {"byteOffset", bytes.size()}, {"byteLength", len}};
    if (target) view["target"] = target;
    size_t off = bytes.size();
    bytes.resize(off + len);
    std::memcpy(bytes.data() + off, data, len);
    views.push_back(view);
    return static_cast<int>(views.size()) - 1;
  }

  int add_float_accessor(const std::vector<float>& vals, int components, bool with_bounds) {
    int view = add_view(vals.data(), vals.size() * sizeof(float), 34962 /*ARRAY_BUFFER*/);
    size_t count = vals.size() / components;
    json acc{{"bufferView", view},
             {"componentType", 5126},
             {"count", count},
             {"type", components == 3 ? "VEC3" : "VEC2"}};
    if (with_bounds) {
      std::vector<float> mn(components, std::numeric_limits<float>::max());
      std::vector<float> mx(components, std::numeric_limits<float>::lowest());
      for (size_t i = 0; i < vals.size(); ++i) {
        int c = static_cast<int>(i % components);
        mn[c] = std::min(mn[c], vals[i]);
        mx[c] = std::max(mx[c], vals[i]);
      }
      acc["min"] = mn;
      acc["max"] = mx;
    }
    accessors.push_back(acc);
    return static_cast<int>(accessors.size()) - 1;
  }

  int add_index_accessor(const std::vector<std::uint32_t>& idx) {
    std::vector<std::uint16_t> narrow(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) narrow[i] = static_cast<std::uint16_t>(idx[i]);
    int view = add_view(narrow.data(), narrow.size() * sizeof(std::uint16_t),
                        34963 /*ELEMENT_ARRAY_BUFFER*/);
    accessors.push_back(json{{"bufferView", view},
                             {"componentType", 5123},
                             {"count", idx.size()},
                             {"type", "SCALAR"}});
    return static_cast<int>(accessors.size()) - 1;
  }
};

double facade_mean_intensity(const FacadeRecord& rec) {
  if (rec.rf.texture.size() == 0) return 128.0;
  double sum = 0;
  for (auto v : rec.rf.texture.data) sum += v;
  return sum / rec.rf.texture.size();
}

Mesh ground_mesh(const Scene& scene) {
  Mesh mesh;
  const double x0 = scene.ground_x0, x1 = scene.ground_x1;
  const double y0 = scene.ground_y0, y1 = scene.ground_y1;
  // Block frame -> glTF: (x, 0, -y); normal up; CCW seen from above.
  const double pts[4][2] = {{x0, y0}, {x0, y1}, {x1, y1}, {x1, y0}};
  for (auto& p : pts) {
    mesh.positions.insert(mesh.positions.end(),
                          {static_cast<float>(p[0]), 0.f, static_cast<float>(-p[1])});
    mesh.normals.insert(mesh.normals.end(), {0.f, 1.f, 0.f});
    mesh.uvs.insert(mesh.uvs.end(), {0.f, 0.f});
  }
  mesh.indices = {0, 1, 2, 0, 2, 3};
  mesh.primitives.push_back({"", 0, 6});
  return mesh;
}

}  // namespace

void export_gltf(const Scene& scene, const std::map<std::string, FacadeRecord>& records,
                 const std::string& out_dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(Err::WriteFailure, "cannot create output directory: " + out_dir);

  json root;
  root["asset"] = {{"version", "2.0"}, {"generator", "facade3d"}};

  BinBuilder bin;
  json meshes = json::array();
  json nodes = json::array();
  json materials = json::array();
  json textures = json::array();
  json images = json::array();
  json samplers = json::array();
  std::vector<int> scene_nodes;

  // Deduplicated materials: textured per facade id, flat gray per level.
  std::map<std::string, int> facade_material;
  std::map<int, int> gray_material;
  std::map<std::string, int> facade_texture;

  auto ensure_sampler = [&]() {
    if (samplers.empty())
      samplers.push_back(json{{"magFilter", 9729},
                              {"minFilter", 9987},
                              {"wrapS", 10497 /*REPEAT*/},
                              {"wrapT", 33071 /*CLAMP_TO_EDGE*/}});
    return 0;
  };

  auto material_for = [&](const std::string& facade_id, const Cuboid* cuboid) -> int {
    if (facade_id.empty()) {
      int level = 90;  // ground / untextured default
      if (cuboid && !cuboid->tiling_facade.empty()) {
        auto it = records.find(cuboid->tiling_facade);
        if (it != records.end())
          level = static_cast<int>(std::lround(facade_mean_intensity(it->second)));
      }
      auto [it, inserted] = gray_material.try_emplace(level, 0);
      if (inserted) {
        double v = level / 255.0;
        materials.push_back(json{{"name", "gray" + std::to_string(level)},
                                 {"pbrMetallicRoughness",
                                  {{"baseColorFactor", {v, v, v, 1.0}},
                                   {"metallicFactor", 0.0},
                                   {"roughnessFactor", 1.0}}},
                                 {"doubleSided", true}});
        it->second = static_cast<int>(materials.size()) - 1;
      }
      return it->second;
    }
    auto [mit, inserted] = facade_material.try_emplace(facade_id, 0);
    if (!inserted) return mit->second;

    auto rit = records.find(facade_id);
    if (rit == records.end()) fail(Err::OpenChain, "texture references unknown facade " + facade_id);
    std::string tex_name = "tex_" + facade_id + ".png";
    auto rgba = apply_transparency(rit->second.rf.texture, rit->second.rf.matte);
    save_rgba_png(rit->second.rf.texture.width, rit->second.rf.texture.height, rgba,
                  (fs::path(out_dir) / tex_name).string());

    images.push_back(json{{"uri", tex_name}, {"mimeType", "image/png"}});
    textures.push_back(json{{"sampler", ensure_sampler()},
                            {"source", static_cast<int>(images.size()) - 1}});
    facade_texture[facade_id] = static_cast<int>(textures.size()) - 1;

    materials.push_back(json{{"name", "facade_" + facade_id},
                             {"pbrMetallicRoughness",
                              {{"baseColorTexture", {{"index", facade_texture[facade_id]}}},
                               {"metallicFactor", 0.0},
                               {"roughnessFactor", 1.0}}},
                             {"alphaMode", "MASK"},
                             {"alphaCutoff", 0.1},
                             {"doubleSided", true}});
    mit->second = static_cast<int>(materials.size()) - 1;
    return mit->second;
  };

  auto add_mesh = [&](const Mesh& mesh, const std::string& mesh_name, const Cuboid* cuboid) {
    int pos = bin.add_float_accessor(mesh.positions, 3, /*with_bounds=*/true);
    int nrm = bin.add_float_accessor(mesh.normals, 3, false);
    int uv = bin.add_float_accessor(mesh.uvs, 2, false);

    json prims = json::array();
    for (const auto& prim : mesh.primitives) {
      std::vector<std::uint32_t> slice(mesh.indices.begin() + prim.first_index,
                                       mesh.indices.begin() + prim.first_index + prim.index_count);
      int idx = bin.add_index_accessor(slice);
      prims.push_back(json{{"attributes", {{"POSITION", pos}, {"NORMAL", nrm}, {"TEXCOORD_0", uv}}},
                           {"indices", idx},
                           {"material", material_for(prim.facade_id, cuboid)},
                           {"mode", 4}});
    }
    meshes.push_back(json{{"name", mesh_name}, {"primitives", prims}});
    nodes.push_back(json{{"mesh", static_cast<int>(meshes.size()) - 1}, {"name", mesh_name}});
    scene_nodes.push_back(static_cast<int>(nodes.size()) - 1);
  };

  for (size_t i = 0; i < scene.cuboids.size(); ++i) {
    const auto& pc = scene.cuboids[i];
    Mesh mesh = build_cuboid_mesh(pc.cuboid, records);
    add_mesh(mesh, pc.block_id + "_cuboid" + std::to_string(i), &pc.cuboid);
  }
  if (scene.has_ground) add_mesh(ground_mesh(scene), "ground", nullptr);

  if (!bin.bytes.empty()) {
    bin.pad4();
    std::string bin_name = name + ".bin";
    std::ofstream bf(fs::path(out_dir) / bin_name, std::ios::binary);
    if (!bf) fail(Err::WriteFailure, "cannot write " + bin_name);
    bf.write(reinterpret_cast<const char*>(bin.bytes.data()),
             static_cast<std::streamsize>(bin.bytes.size()));
    bf.close();
    if (!bf) fail(Err::WriteFailure, "short write on " + bin_name);
    root["buffers"] = json::array({json{{"uri", bin_name}, {"byteLength", bin.bytes.size()}}});
    root["bufferViews"] = bin.views;
    root["accessors"] = bin.accessors;
  }
  if (!meshes.empty()) {
    root["meshes"] = meshes;
    root["nodes"] = nodes;
  }
  if (!materials.empty()) root["materials"] = materials;
  if (!textures.empty()) {
    root["textures"] = textures;
    root["images"] = images;
    root["samplers"] = samplers;
  }
  root["scene"] = 0;
  json scene_obj{{"name", "city"}};
  if (!scene_nodes.empty()) scene_obj["nodes"] = scene_nodes;
  root["scenes"] = json::array({scene_obj});

  std::ofstream gf(fs::path(out_dir) / (name + ".gltf"));
  if (!gf) fail(Err::WriteFailure, "cannot write " + name + ".gltf");
  gf << root.dump(2) << "\n";
  gf.close();
  if (!gf) fail(Err::WriteFailure, "short write on " + name + ".gltf");
}

}  // namespace f3d
