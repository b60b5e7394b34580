#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rectify.hpp"

namespace f3d {

// One facade ready for modeling: rectified texture+matte plus its place in the
// block chain. cardinal only matters for the chain start.
struct FacadeRecord {
  std::string id;
  RectifiedFacade rf;
  double length_m = 0.0;  // facade world width
  double height_m = 0.0;
  std::string neighbor;   // next facade in the chain
  bool same_building_as_neighbor = false;
  int cardinal = 0;       // {0,1,2,3}
};

// Faces of a cuboid in block-plane coordinates (x east, y north, z up).
enum class Face { NegY = 0, PosX = 1, PosY = 2, NegX = 3, Top = 4, Bottom = 5 };

struct Cuboid {
  double x = 0.0, y = 0.0;  // block-local origin (min corner)
  double width = 0.0;       // x extent, m
  double depth = 0.0;       // y extent, m
  double height = 0.0;      // m
  std::map<Face, std::string> textures;  // face -> facade id, up to 4
  std::string tiling_facade;             // facade repeated on uncovered faces
};

struct BlockWalkResult {
  std::vector<Cuboid> cuboids;
  double closure_gap_m = 0.0;  // |final (x,y)| before redistribution
  bool adjusted = false;       // true when the gap was redistributed
  int cardinal_turns = 0;      // total cardinal advances over the walk
};

// The block walk: starting at `start`, follow neighbor links around the block.
// Same-building pairs take the neighbor's length as the orthogonal dimension
// and advance the cardinal; the cardinal selects the (width, depth) assignment
// and the signed position advance. One cuboid per facade. A walk that does not
// return to the start within the record count throws OpenChain. Chains that
// close with a residual gap are closed by spreading the gap uniformly over the
// advances and flagged.
BlockWalkResult map_facades_within_block(const std::string& start_id,
                                         const std::map<std::string, FacadeRecord>& records);

struct Mesh {
  std::vector<float> positions;  // xyz triplets
  std::vector<float> normals;
  std::vector<float> uvs;        // st pairs
  std::vector<std::uint32_t> indices;
  // Ranges of indices per material: textured faces keyed by facade id,
  // untextured ones by "".
  struct Primitive {
    std::string facade_id;  // empty -> flat gray
    std::uint32_t first_index = 0;
    std::uint32_t index_count = 0;
  };
  std::vector<Primitive> primitives;
};

// 24 vertices, 36 indices. The assigned facade maps 1:1 on its face; bare
// vertical faces tile the tiling facade with world-scale horizontal repeats;
// top and bottom stay untextured.
Mesh build_cuboid_mesh(const Cuboid& c, const std::map<std::string, FacadeRecord>& records);

// Gray texture + matte -> interleaved RGBA (alpha = round-half-up of 255*a).
std::vector<std::uint8_t> apply_transparency(const GrayImage& texture, const AlphaMatte& matte);

struct BlockLayout {
  std::string id;
  double offset_x = 0.0, offset_y = 0.0;  // city frame, meters
  BlockWalkResult walk;
};

struct Scene {
  struct PlacedCuboid {
    Cuboid cuboid;      // already translated into the city frame
    std::string block_id;
  };
  std::vector<PlacedCuboid> cuboids;
  bool has_ground = false;
  double ground_x0 = 0, ground_y0 = 0, ground_x1 = 0, ground_y1 = 0;
  std::vector<std::string> warnings;
};

// Translates each block by its offset, adds a ground plane when there is
// content, and reports overlapping block footprints as warnings.
Scene assemble_city(const std::vector<BlockLayout>& blocks);

// Writes <name>.gltf + <name>.bin + one RGBA PNG per referenced facade into
// out_dir. Y-up, meters, alpha-mask transparency.
void export_gltf(const Scene& scene, const std::map<std::string, FacadeRecord>& records,
                 const std::string& out_dir, const std::string& name = "scene");

}  // namespace f3d
