// Conforming triangulations of the unit square: structured builder, ASCII
// import, and the edge/orientation bookkeeping used by trace assembly.
#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "ehdg/types.hpp"

namespace ehdg {

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex indices
  // Unique undirected edges as (lo, hi) vertex pairs; the global edge
  // direction (for trace parameterization) is lo -> hi.
  std::vector<std::array<int, 2>> edges;
  std::vector<bool> boundary;                       // per edge
  std::vector<std::array<int, 3>> element_edges;    // local edge i joins local vertices i, i+1
  std::vector<std::array<int, 3>> element_edge_signs;  // +1 if local traversal matches lo->hi
  int level = -1;                                   // 2^-level grid when built structurally

  int n_elements() const { return static_cast<int>(triangles.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  double signed_area(int t) const;
  double element_diameter(int t) const;
  // Outward unit normal of local edge le of element t.
  Vec2 outward_normal(int t, int le) const;
  double h() const;  // 2^-level, or max element diameter for imported meshes
};

// Affine map from the reference triangle (0,0),(1,0),(0,1) onto an element.
struct PhysicalMap {
  Vec2 origin;  // image of (0,0) = first vertex of the element
  Mat2 jac;     // constant Jacobian, det = 2 * element area
  double det;
  Vec2 apply(const Vec2& ref) const { return origin + jac * ref; }
};

PhysicalMap physical_map(const TriMesh& mesh, int t);

// Uniform triangulation of (0,1)^2 with 2*4^level elements; every grid cell is
// split by its lower-left -> upper-right diagonal.
TriMesh build_unit_square_tri_mesh(int level);

// ASCII format: lines "v <x> <y>" then "t <i> <j> <k>" (0-based, CCW),
// '#' starts a comment. Rejects non-conforming input.
TriMesh import_mesh(std::istream& in);

// Shared validation: positive areas, edge conformity, no hanging nodes.
void validate_mesh(const TriMesh& mesh);

}  // namespace ehdg
