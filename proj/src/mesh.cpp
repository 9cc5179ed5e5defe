#include "bloom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"

namespace bloom {
namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

struct RawMesh {
  std::unordered_map<long, Eigen::Vector2d> nodes;
  std::vector<std::array<long, 3>> triangles;
  std::map<int, long> skipped;  // element type -> count
};

// Number of nodes for gmsh element types we may need to skip in v2.2 files.
int nodes_per_element(int type) {
  static const std::map<int, int> table{{1, 2}, {2, 3}, {3, 4}, {4, 4}, {5, 8}, {6, 6}, {7, 5},
                                        {8, 3}, {9, 6}, {10, 9}, {11, 10}, {15, 1}, {16, 8}};
  const auto it = table.find(type);
  return it == table.end() ? -1 : it->second;
}

void expect_section(std::istream& in, const std::string& name) {
  std::string line;
  in >> line;
  if (line != name) throw ConfigError("gmsh: expected " + name + ", found '" + line + "'");
}

void skip_to(std::istream& in, const std::string& end) {
  std::string line;
  while (in >> line)
    if (line == end) return;
  throw ConfigError("gmsh: missing " + end);
}

void read_nodes_v2(std::istream& in, RawMesh& raw) {
  long count;
  if (!(in >> count)) throw ConfigError("gmsh: bad $Nodes header");
  for (long k = 0; k < count; ++k) {
    long id;
    double x, y, z;
    if (!(in >> id >> x >> y >> z)) throw ConfigError("gmsh: truncated $Nodes block");
    raw.nodes[id] = {x, y};
  }
  expect_section(in, "$EndNodes");
}

void read_elements_v2(std::istream& in, RawMesh& raw) {
  long count;
  if (!(in >> count)) throw ConfigError("gmsh: bad $Elements header");
  for (long k = 0; k < count; ++k) {
    long id;
    int type, ntags;
    if (!(in >> id >> type >> ntags)) throw ConfigError("gmsh: truncated $Elements block");
    for (int t = 0; t < ntags; ++t) {
      long tag;
      in >> tag;
    }
    const int nn = nodes_per_element(type);
    if (nn < 0) throw ConfigError("gmsh: unsupported element type " + std::to_string(type));
    std::vector<long> ids(nn);
    for (long& v : ids) in >> v;
    if (!in) throw ConfigError("gmsh: truncated $Elements block");
    if (type == 2)
      raw.triangles.push_back({ids[0], ids[1], ids[2]});
    else
      ++raw.skipped[type];
  }
  expect_section(in, "$EndElements");
}

void read_nodes_v4(std::istream& in, RawMesh& raw) {
  long blocks, count, min_tag, max_tag;
  if (!(in >> blocks >> count >> min_tag >> max_tag)) throw ConfigError("gmsh: bad $Nodes header");
  for (long b = 0; b < blocks; ++b) {
    int dim, entity, parametric;
    long n;
    if (!(in >> dim >> entity >> parametric >> n)) throw ConfigError("gmsh: bad node block header");
    std::vector<long> tags(n);
    for (long& t : tags) in >> t;
    for (long k = 0; k < n; ++k) {
      double x, y, z;
      in >> x >> y >> z;
      if (parametric) {
        double u;
        for (int d = 0; d < dim; ++d) in >> u;
      }
      raw.nodes[tags[k]] = {x, y};
    }
    if (!in) throw ConfigError("gmsh: truncated $Nodes block");
  }
  expect_section(in, "$EndNodes");
}

void read_elements_v4(std::istream& in, RawMesh& raw) {
  long blocks, count, min_tag, max_tag;
  if (!(in >> blocks >> count >> min_tag >> max_tag)) throw ConfigError("gmsh: bad $Elements header");
  for (long b = 0; b < blocks; ++b) {
    int dim, entity, type;
    long n;
    if (!(in >> dim >> entity >> type >> n)) throw ConfigError("gmsh: bad element block header");
    const int nn = nodes_per_element(type);
    if (nn < 0) throw ConfigError("gmsh: unsupported element type " + std::to_string(type));
    for (long k = 0; k < n; ++k) {
      long id;
      std::vector<long> ids(nn);
      in >> id;
      for (long& v : ids) in >> v;
      if (type == 2)
        raw.triangles.push_back({ids[0], ids[1], ids[2]});
      else
        ++raw.skipped[type];
    }
    if (!in) throw ConfigError("gmsh: truncated $Elements block");
  }
  expect_section(in, "$EndElements");
}

}  // namespace

double TriMesh::boundary_length() const {
  double total = 0.0;
  for (const auto& e : boundary_edges) total += (nodes.col(e[1]) - nodes.col(e[0])).norm();
  return total;
}

double TriMesh::max_edge() const {
  double h = 0.0;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) h = std::max(h, (nodes.col(t[(k + 1) % 3]) - nodes.col(t[k])).norm());
  return h;
}

TriMesh make_mesh(const Eigen::Matrix2Xd& nodes, const std::vector<std::array<int, 3>>& triangles) {
  if (triangles.empty()) throw DomainError("mesh has no triangles");
  const int n = static_cast<int>(nodes.cols());
  if (!nodes.allFinite()) throw DomainError("mesh has non-finite coordinates");

  // Compact away unreferenced nodes.
  std::vector<int> remap(n, -1);
  for (const auto& t : triangles)
    for (int v : t) {
      if (v < 0 || v >= n) throw DomainError("triangle references node " + std::to_string(v) + " out of range");
      remap[v] = 0;
    }
  int used = 0;
  for (int& r : remap)
    if (r == 0) r = used++;
  if (used < n) warn("mesh: dropped " + std::to_string(n - used) + " unreferenced node(s)");

  TriMesh mesh;
  mesh.nodes.resize(2, used);
  for (int i = 0; i < n; ++i)
    if (remap[i] >= 0) mesh.nodes.col(remap[i]) = nodes.col(i);

  const int m = static_cast<int>(triangles.size());
  mesh.triangles.reserve(m);
  mesh.areas.resize(m);
  mesh.grad_x.resize(3, m);
  mesh.grad_y.resize(3, m);
  double scale = 0.0;
  for (int i = 0; i < used; ++i) scale = std::max(scale, mesh.nodes.col(i).cwiseAbs().maxCoeff());
  for (int e = 0; e < m; ++e) {
    const std::array<int, 3> t{remap[triangles[e][0]], remap[triangles[e][1]], remap[triangles[e][2]]};
    const Eigen::Vector2d a = mesh.nodes.col(t[0]), b = mesh.nodes.col(t[1]), c = mesh.nodes.col(t[2]);
    const double twice = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    const double longest = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    if (std::abs(twice) <= 1e-12 * longest * longest || longest == 0.0)
      throw DomainError("mesh: degenerate (zero-area) triangle " + std::to_string(e));
    if (twice < 0.0) throw DomainError("mesh: inverted (clockwise) triangle " + std::to_string(e));
    mesh.triangles.push_back(t);
    mesh.areas(e) = 0.5 * twice;
    // grad phi_k = (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / (2A)
    const std::array<Eigen::Vector2d, 3> p{a, b, c};
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d& p1 = p[(k + 1) % 3];
      const Eigen::Vector2d& p2 = p[(k + 2) % 3];
      mesh.grad_x(k, e) = (p1.y() - p2.y()) / twice;
      mesh.grad_y(k, e) = (p2.x() - p1.x()) / twice;
    }
  }

  // Boundary edges occur in exactly one triangle; connectivity via union-find.
  std::map<std::pair<int, int>, int> edge_count;
  std::map<std::pair<int, int>, std::array<int, 2>> oriented;
  std::vector<int> parent(used);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      const int u = t[k], v = t[(k + 1) % 3];
      const auto key = std::minmax(u, v);
      ++edge_count[key];
      oriented[key] = {u, v};
      parent[find_root(parent, u)] = find_root(parent, v);
    }
  for (const auto& [key, count] : edge_count) {
    if (count == 1) mesh.boundary_edges.push_back(oriented[key]);
    if (count > 2) throw DomainError("mesh: edge shared by more than two triangles");
  }
  const int root = find_root(parent, 0);
  for (int i = 1; i < used; ++i)
    if (find_root(parent, i) != root) throw DomainError("mesh is not connected");
  return mesh;
}

TriMesh load_gmsh_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
  expect_section(in, "$MeshFormat");
  std::string version;
  int file_type, data_size;
  if (!(in >> version >> file_type >> data_size)) throw ConfigError("gmsh: bad $MeshFormat");
  if (file_type != 0) throw ConfigError("gmsh: binary files are not supported");
  const bool v2 = version == "2.2" || version == "2.0" || version == "2.1";
  const bool v4 = version == "4.1";
  if (!v2 && !v4) throw ConfigError("gmsh: unsupported format version " + version);
  expect_section(in, "$EndMeshFormat");

  RawMesh raw;
  bool have_nodes = false, have_elements = false;
  std::string section;
  while (in >> section) {
    if (section == "$Nodes") {
      v2 ? read_nodes_v2(in, raw) : read_nodes_v4(in, raw);
      have_nodes = true;
    } else if (section == "$Elements") {
      v2 ? read_elements_v2(in, raw) : read_elements_v4(in, raw);
      have_elements = true;
    } else if (section.rfind("$", 0) == 0 && section.rfind("$End", 0) != 0) {
      skip_to(in, "$End" + section.substr(1));
    } else {
      throw ConfigError("gmsh: unexpected token '" + section + "'");
    }
  }
  if (!have_nodes || !have_elements) throw ConfigError("gmsh: missing $Nodes or $Elements");
  if (raw.triangles.empty()) throw ConfigError("gmsh: file contains no triangles");
  long skipped = 0;
  for (const auto& [type, count] : raw.skipped) skipped += count;
  if (skipped > 0) warn("gmsh: ignored " + std::to_string(skipped) + " non-triangle element(s) in " + path);

  // Dense renumbering in tag order.
  std::vector<long> tags;
  tags.reserve(raw.nodes.size());
  for (const auto& [tag, x] : raw.nodes) tags.push_back(tag);
  std::sort(tags.begin(), tags.end());
  std::unordered_map<long, int> index;
  Eigen::Matrix2Xd nodes(2, static_cast<Eigen::Index>(tags.size()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    index[tags[i]] = static_cast<int>(i);
    nodes.col(static_cast<Eigen::Index>(i)) = raw.nodes[tags[i]];
  }
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(raw.triangles.size());
  for (const auto& t : raw.triangles) {
    std::array<int, 3> local{};
    for (int k = 0; k < 3; ++k) {
      const auto it = index.find(t[k]);
      if (it == index.end()) throw ConfigError("gmsh: element references unknown node " + std::to_string(t[k]));
      local[k] = it->second;
    }
    triangles.push_back(local);
  }
  return make_mesh(nodes, triangles);
}

PointLocation locate(const TriMesh& mesh, const Eigen::Vector2d& x, double tol) {
  PointLocation best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto& t = mesh.triangles[e];
    Eigen::Vector3d w;
    // phi_k(x) = phi_k(node k+1) + grad phi_k . (x - node k+1), phi_k(node k+1) = 0.
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d d = x - mesh.nodes.col(t[(k + 1) % 3]);
      w(k) = mesh.grad_x(k, e) * d.x() + mesh.grad_y(k, e) * d.y();
    }
    const double violation = std::max(0.0, -w.minCoeff());
    if (violation < best_violation) {
      best_violation = violation;
      best.element = e;
      best.weights = w;
      if (violation == 0.0) break;
    }
  }
  if (best_violation > tol) return {};
  return best;
}

Eigen::VectorXd interpolate(const TriMesh& from, const Eigen::VectorXd& values, const TriMesh& to) {
  if (values.size() != from.node_count()) throw DomainError("interpolate: value count does not match mesh");
  Eigen::VectorXd out(to.node_count());
  for (int i = 0; i < to.node_count(); ++i) {
    const PointLocation loc = locate(from, to.nodes.col(i));
    if (loc.element < 0) throw DomainError("interpolate: target node outside source mesh");
    const auto& t = from.triangles[loc.element];
    out(i) = loc.weights(0) * values(t[0]) + loc.weights(1) * values(t[1]) + loc.weights(2) * values(t[2]);
  }
  return out;
}

}  // namespace bloom
