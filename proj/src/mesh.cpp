#include "ehdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>

namespace ehdg {

double TriMesh::signed_area(int t) const {
  const Vec2 &a = vertices[triangles[t][0]], &b = vertices[triangles[t][1]],
             &c = vertices[triangles[t][2]];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double TriMesh::element_diameter(int t) const {
  const Vec2 &a = vertices[triangles[t][0]], &b = vertices[triangles[t][1]],
             &c = vertices[triangles[t][2]];
  return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
}

Vec2 TriMesh::outward_normal(int t, int le) const {
  const Vec2& a = vertices[triangles[t][le]];
  const Vec2& b = vertices[triangles[t][(le + 1) % 3]];
  const Vec2 d = b - a;
  // CCW traversal puts the interior on the left; (dy, -dx) points outward.
  return Vec2(d.y(), -d.x()).normalized();
}

PhysicalMap physical_map(const TriMesh& mesh, int t) {
  const Vec2 &a = mesh.vertices[mesh.triangles[t][0]], &b = mesh.vertices[mesh.triangles[t][1]],
             &c = mesh.vertices[mesh.triangles[t][2]];
  PhysicalMap map;
  map.origin = a;
  map.jac.col(0) = b - a;
  map.jac.col(1) = c - a;
  map.det = map.jac.determinant();
  if (map.det <= 0) throw GeometryError("degenerate or flipped element " + std::to_string(t));
  return map;
}

double TriMesh::h() const {
  if (level >= 0) return std::ldexp(1.0, -level);
  double hmax = 0;
  for (int t = 0; t < n_elements(); ++t) hmax = std::max(hmax, element_diameter(t));
  return hmax;
}

namespace {

void build_edges(TriMesh& mesh) {
  std::map<std::array<int, 2>, int> ids;
  mesh.edges.clear();
  mesh.element_edges.assign(mesh.triangles.size(), {});
  mesh.element_edge_signs.assign(mesh.triangles.size(), {});
  std::vector<int> incidence;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int le = 0; le < 3; ++le) {
      const int a = mesh.triangles[t][le];
      const int b = mesh.triangles[t][(le + 1) % 3];
      const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
      auto [it, inserted] = ids.try_emplace(key, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        mesh.edges.push_back(key);
        incidence.push_back(0);
      }
      mesh.element_edges[t][le] = it->second;
      mesh.element_edge_signs[t][le] = (a == key[0]) ? 1 : -1;
      ++incidence[it->second];
    }
  }
  mesh.boundary.assign(mesh.edges.size(), false);
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    if (incidence[e] == 1)
      mesh.boundary[e] = true;
    else if (incidence[e] != 2)
      throw GeometryError("non-conforming mesh: edge shared by " + std::to_string(incidence[e]) +
                          " triangles");
  }
}

}  // namespace

void validate_mesh(const TriMesh& mesh) {
  for (int t = 0; t < mesh.n_elements(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        throw GeometryError("triangle references vertex " + std::to_string(v) + " out of range");
    if (mesh.signed_area(t) <= 0)
      throw GeometryError("triangle " + std::to_string(t) +
                          " is not counter-clockwise (non-positive area)");
  }
  // Hanging node: a vertex strictly inside a boundary edge (interior edges with
  // a mid-vertex would already fail the incidence count).
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.boundary[e]) continue;
    const Vec2 &a = mesh.vertices[mesh.edges[e][0]], &b = mesh.vertices[mesh.edges[e][1]];
    const double len2 = (b - a).squaredNorm();
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (static_cast<int>(v) == mesh.edges[e][0] || static_cast<int>(v) == mesh.edges[e][1])
        continue;
      const Vec2 p = mesh.vertices[v];
      const double s = (p - a).dot(b - a) / len2;
      if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
      const Vec2 foot = a + s * (b - a);
      if ((p - foot).squaredNorm() < 1e-24 * len2)
        throw GeometryError("hanging node: vertex " + std::to_string(v) +
                            " lies inside boundary edge " + std::to_string(e));
    }
  }
}

TriMesh build_unit_square_tri_mesh(int level) {
  if (level < 0) throw CapacityError("mesh level must be nonnegative");
  if (level > 12) throw CapacityError("mesh level " + std::to_string(level) + " exceeds guard (12)");
  const int n = 1 << level;
  TriMesh mesh;
  mesh.level = level;
  mesh.vertices.reserve(static_cast<size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(double(i) / n, double(j) / n);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.triangles.reserve(2u * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Lower-left -> upper-right diagonal in every cell.
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  build_edges(mesh);
  validate_mesh(mesh);
  return mesh;
}

TriMesh import_mesh(std::istream& in) {
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y;
      if (!(ls >> x >> y)) throw ParseError("line " + std::to_string(lineno) + ": expected 'v <x> <y>'");
      mesh.vertices.emplace_back(x, y);
    } else if (tag == "t") {
      int i, j, k;
      if (!(ls >> i >> j >> k))
        throw ParseError("line " + std::to_string(lineno) + ": expected 't <i> <j> <k>'");
      mesh.triangles.push_back({i, j, k});
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
    std::string extra;
    if (ls >> extra) throw ParseError("line " + std::to_string(lineno) + ": trailing data '" + extra + "'");
  }
  if (mesh.triangles.empty()) throw ParseError("mesh file contains no triangles");
  for (int t = 0; t < mesh.n_elements(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        throw ParseError("triangle " + std::to_string(t) + " references undefined vertex " +
                         std::to_string(v));
  }
  build_edges(mesh);
  validate_mesh(mesh);
  return mesh;
}

}  // namespace ehdg
