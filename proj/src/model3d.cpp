#include "model3d.hpp"

#include <algorithm>
#include <cmath>

namespace f3d {

BlockWalkResult map_facades_within_block(const std::string& start_id,
                                         const std::map<std::string, FacadeRecord>& records) {
  auto it = records.find(start_id);
  if (it == records.end()) fail(Err::OpenChain, "start facade not found: " + start_id);
  const FacadeRecord* start = &it->second;

  BlockWalkResult out;
  if (start->neighbor == start_id) return out;  // single facade: loop body never runs

  double x = 0.0, y = 0.0;
  int cardinal = start->cardinal;
  const FacadeRecord* pointer = start;
  size_t emitted = 0;

  struct Advance {
    double dx, dy;
  };
  std::vector<Advance> advances;

  do {
    if (emitted >= records.size())
      fail(Err::OpenChain, "walk did not return to start within the record count");
    auto nit = records.find(pointer->neighbor);
    if (nit == records.end())
      fail(Err::OpenChain, "missing neighbor record: " + pointer->neighbor);
    const FacadeRecord* neighbor = &nit->second;

    double height = pointer->height_m;
    double alt = pointer->length_m;
    double dx = 0.0, dy = 0.0;
    if (pointer->same_building_as_neighbor) {
      alt = neighbor->length_m;
      height = std::max(height, neighbor->height_m);  // disagreeing heights: max wins
      cardinal = (cardinal + 1) % 4;
      ++out.cardinal_turns;
    }

    double width, depth;
    switch (cardinal) {
      case 0:
        width = pointer->length_m;
        depth = alt;
        dx = width;
        break;
      case 1:
        depth = pointer->length_m;
        width = alt;
        dy = depth;
        break;
      case 2:
        width = pointer->length_m;
        depth = alt;
        dx = -width;
        break;
      default:
        depth = pointer->length_m;
        width = alt;
        dy = -depth;
        break;
    }
    if (!(width > 0) || !(depth > 0) || !(height > 0))
      fail(Err::NonPositiveDim, "facade " + pointer->id + " produces a non-positive dimension");

    Cuboid c;
    c.x = x;
    c.y = y;
    c.width = width;
    c.depth = depth;
    c.height = height;
    c.textures[static_cast<Face>(cardinal)] = pointer->id;
    c.tiling_facade = pointer->id;
    out.cuboids.push_back(std::move(c));

    advances.push_back({dx, dy});
    x += dx;
    y += dy;
    ++emitted;
    pointer = neighbor;
  } while (pointer != start);

  out.closure_gap_m = std::hypot(x, y);
  double walk_length = 0.0;
  for (const auto& a : advances) walk_length += std::hypot(a.dx, a.dy);
  // Small residuals (bad width estimates) get spread uniformly over the
  // advances so the ring closes; grossly inconsistent chains are only
  // reported, since redistribution would distort every building.
  if (out.closure_gap_m > 0.01 && out.closure_gap_m <= 0.05 * walk_length) {
    const double n = static_cast<double>(advances.size());
    for (size_t k = 1; k < out.cuboids.size(); ++k) {
      out.cuboids[k].x -= x * static_cast<double>(k) / n;
      out.cuboids[k].y -= y * static_cast<double>(k) / n;
    }
    out.adjusted = true;
  }
  return out;
}

namespace {

struct FaceFrame {
  // Corner order TL, TR, BR, BL as seen from outside; v runs top to bottom.
  std::array<std::array<double, 3>, 4> corners;
  std::array<double, 3> normal;
  double world_width;
};

FaceFrame face_frame(const Cuboid& c, Face f) {
  const double x0 = c.x, x1 = c.x + c.width;
  const double y0 = c.y, y1 = c.y + c.depth;
  const double z0 = 0.0, z1 = c.height;
  switch (f) {
    case Face::NegY:
      return {{{{x0, y0, z1}, {x1, y0, z1}, {x1, y0, z0}, {x0, y0, z0}}}, {0, -1, 0}, c.width};
    case Face::PosX:
      return {{{{x1, y0, z1}, {x1, y1, z1}, {x1, y1, z0}, {x1, y0, z0}}}, {1, 0, 0}, c.depth};
    case Face::PosY:
      return {{{{x1, y1, z1}, {x0, y1, z1}, {x0, y1, z0}, {x1, y1, z0}}}, {0, 1, 0}, c.width};
    case Face::NegX:
      return {{{{x0, y1, z1}, {x0, y0, z1}, {x0, y0, z0}, {x0, y1, z0}}}, {-1, 0, 0}, c.depth};
    case Face::Top:
      return {{{{x0, y1, z1}, {x1, y1, z1}, {x1, y0, z1}, {x0, y0, z1}}}, {0, 0, 1}, c.width};
    default:  // Bottom
      return {{{{x0, y0, z0}, {x1, y0, z0}, {x1, y1, z0}, {x0, y1, z0}}}, {0, 0, -1}, c.width};
  }
}

}  // namespace

Mesh build_cuboid_mesh(const Cuboid& c, const std::map<std::string, FacadeRecord>& records) {
  Mesh mesh;

  // Group faces by the facade that textures them (empty id = flat gray).
  std::vector<std::pair<std::string, std::vector<Face>>> groups;
  auto group_of = [&](const std::string& key) -> std::vector<Face>& {
    for (auto& g : groups)
      if (g.first == key) return g.second;
    groups.emplace_back(key, std::vector<Face>{});
    return groups.back().second;
  };
  for (Face f : {Face::NegY, Face::PosX, Face::PosY, Face::NegX, Face::Top, Face::Bottom}) {
    bool vertical = f != Face::Top && f != Face::Bottom;
    auto it = c.textures.find(f);
    if (it != c.textures.end()) group_of(it->second).push_back(f);
    else if (vertical && !c.tiling_facade.empty()) group_of(c.tiling_facade).push_back(f);
    else group_of("").push_back(f);
  }

  for (const auto& [facade_id, faces] : groups) {
    Mesh::Primitive prim;
    prim.facade_id = facade_id;
    prim.first_index = static_cast<std::uint32_t>(mesh.indices.size());
    for (Face f : faces) {
      FaceFrame frame = face_frame(c, f);
      bool assigned = c.textures.count(f) > 0;
      double u_max = 1.0;
      if (!assigned && !facade_id.empty()) {
        auto rit = records.find(facade_id);
        double tex_w = rit != records.end() ? rit->second.rf.world_width : 0.0;
        u_max = tex_w > 0 ? frame.world_width / tex_w : 1.0;  // horizontal repeats
      }
      const double us[4] = {0.0, u_max, u_max, 0.0};
      const double vs[4] = {0.0, 0.0, 1.0, 1.0};
      std::uint32_t base = static_cast<std::uint32_t>(mesh.positions.size() / 3);
      for (int k = 0; k < 4; ++k) {
        // Block frame (x east, y north, z up) to glTF Y-up: (x, z, -y).
        mesh.positions.push_back(static_cast<float>(frame.corners[k][0]));
        mesh.positions.push_back(static_cast<float>(frame.corners[k][2]));
        mesh.positions.push_back(static_cast<float>(-frame.corners[k][1]));
        mesh.normals.push_back(static_cast<float>(frame.normal[0]));
        mesh.normals.push_back(static_cast<float>(frame.normal[2]));
        mesh.normals.push_back(static_cast<float>(-frame.normal[1]));
        mesh.uvs.push_back(static_cast<float>(us[k]));
        mesh.uvs.push_back(static_cast<float>(vs[k]));
      }
      // CCW from outside: TL, BL, BR and TL, BR, TR.
      for (std::uint32_t i : {base, base + 3, base + 2, base, base + 2, base + 1})
        mesh.indices.push_back(i);
    }
    prim.index_count = static_cast<std::uint32_t>(mesh.indices.size()) - prim.first_index;
    mesh.primitives.push_back(std::move(prim));
  }
  return mesh;
}

std::vector<std::uint8_t> apply_transparency(const GrayImage& texture, const AlphaMatte& matte) {
  if (texture.width != matte.width || texture.height != matte.height)
    fail(Err::DimMismatch, "matte dimensions do not match texture");
  std::vector<std::uint8_t> rgba(texture.size() * 4);
  for (size_t i = 0; i < texture.size(); ++i) {
    rgba[4 * i + 0] = texture.data[i];
    rgba[4 * i + 1] = texture.data[i];
    rgba[4 * i + 2] = texture.data[i];
    rgba[4 * i + 3] = round_u8(matte.alpha[i] * 255.0);
  }
  return rgba;
}

Scene assemble_city(const std::vector<BlockLayout>& blocks) {
  Scene scene;
  struct Footprint {
    std::string id;
    double x0, y0, x1, y1;
  };
  std::vector<Footprint> footprints;

  for (const auto& block : blocks) {
    Footprint fp{block.id, 1e300, 1e300, -1e300, -1e300};
    for (const auto& c : block.walk.cuboids) {
      Cuboid placed = c;
      placed.x += block.offset_x;
      placed.y += block.offset_y;
      fp.x0 = std::min(fp.x0, placed.x);
      fp.y0 = std::min(fp.y0, placed.y);
      fp.x1 = std::max(fp.x1, placed.x + placed.width);
      fp.y1 = std::max(fp.y1, placed.y + placed.depth);
      scene.cuboids.push_back({std::move(placed), block.id});
    }
    if (!block.walk.cuboids.empty()) footprints.push_back(fp);
  }

  for (size_t i = 0; i < footprints.size(); ++i)
    for (size_t j = i + 1; j < footprints.size(); ++j) {
      const auto& a = footprints[i];
      const auto& b = footprints[j];
      if (a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1)
        scene.warnings.push_back("overlapping blocks: " + a.id + " and " + b.id);
    }

  if (!scene.cuboids.empty()) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const auto& pc : scene.cuboids) {
      x0 = std::min(x0, pc.cuboid.x);
      y0 = std::min(y0, pc.cuboid.y);
      x1 = std::max(x1, pc.cuboid.x + pc.cuboid.width);
      y1 = std::max(y1, pc.cuboid.y + pc.cuboid.depth);
    }
    double margin = 0.2 * std::max(x1 - x0, y1 - y0) + 5.0;
    scene.has_ground = true;
    scene.ground_x0 = x0 - margin;
    scene.ground_y0 = y0 - margin;
    scene.ground_x1 = x1 + margin;
    scene.ground_y1 = y1 + margin;
  }
  return scene;
}

}  // namespace f3d
