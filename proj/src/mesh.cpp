#include "steklov/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace steklov {

namespace {

constexpr double kHalfSqrt2 = 0.70710678118654752440;

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Boundary edges are the element edges that occur exactly once; they keep
// the orientation of their element so the outward normal points right.
void finalize_boundary(Mesh& mesh) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(mesh.elements.size() * 3);
  for (const auto& e : mesh.elements)
    for (int k = 0; k < 3; ++k) ++count[edge_key(e[k], e[(k + 1) % 3])];

  mesh.boundary_edges.clear();
  for (const auto& e : mesh.elements)
    for (int k = 0; k < 3; ++k) {
      const int a = e[k];
      const int b = e[(k + 1) % 3];
      if (count[edge_key(a, b)] == 1) mesh.boundary_edges.push_back({a, b});
    }

  mesh.boundary_flags.assign(mesh.vertices.size(), false);
  for (const auto& be : mesh.boundary_edges) {
    mesh.boundary_flags[be[0]] = true;
    mesh.boundary_flags[be[1]] = true;
  }
}

}  // namespace

double DomainSpec::area() const {
  switch (kind) {
    case DomainKind::Square:
    case DomainKind::SlitSquare:
      return 2.0;
    case DomainKind::LShape:
      return 3.0;
  }
  return 0.0;
}

double DomainSpec::perimeter() const {
  const double sqrt2 = std::sqrt(2.0);
  switch (kind) {
    case DomainKind::Square:
      return 4.0 * sqrt2;
    case DomainKind::LShape:
      return 8.0;
    case DomainKind::SlitSquare:
      return 5.0 * sqrt2;
  }
  return 0.0;
}

double DomainSpec::half_width() const { return kind == DomainKind::LShape ? 1.0 : kHalfSqrt2; }

std::string DomainSpec::name() const {
  switch (kind) {
    case DomainKind::Square:
      return "square";
    case DomainKind::LShape:
      return "lshape";
    case DomainKind::SlitSquare:
      return "slit";
  }
  return "unknown";
}

DomainSpec DomainSpec::parse(std::string_view name) {
  if (name == "square") return {DomainKind::Square};
  if (name == "lshape" || name == "l-shape" || name == "L") return {DomainKind::LShape};
  if (name == "slit" || name == "slit-square" || name == "slitsquare") return {DomainKind::SlitSquare};
  throw ParameterError("unknown domain '" + std::string(name) + "' (expected square, lshape or slit)");
}

std::vector<int> Mesh::boundary_vertices() const {
  std::vector<int> out;
  for (std::size_t v = 0; v < boundary_flags.size(); ++v)
    if (boundary_flags[v]) out.push_back(static_cast<int>(v));
  return out;
}

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh build_initial_mesh(const DomainSpec& domain, int n_div) {
  if (n_div < 1) throw ParameterError("n_div must be >= 1");
  if (domain.kind != DomainKind::Square && n_div % 2 != 0)
    throw ParameterError("n_div must be even for the " + domain.name() + " domain");

  const int n = n_div;
  const int half = n / 2;
  const double s = domain.half_width();
  auto coord = [&](int i) { return s * (2.0 * i / n - 1.0); };

  auto cell_present = [&](int i, int j) {
    return !(domain.kind == DomainKind::LShape && i >= half && j < half);
  };

  std::vector<int> grid_index((n + 1) * (n + 1), -1);
  auto gid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (cell_present(i, j))
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) grid_index[gid(i + di, j + dj)] = 0;

  Mesh mesh;
  mesh.domain = domain;
  mesh.level = 0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      if (grid_index[gid(i, j)] == 0) {
        grid_index[gid(i, j)] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back({coord(i), coord(j)});
      }
  mesh.slit_tags.assign(mesh.vertices.size(), SlitTag::None);

  // Slit: vertices on y = 0 with x > 0 get a bottom copy used by the cells
  // below the slit; the original becomes the top copy.
  std::vector<int> bottom_copy(n + 1, -1);
  if (domain.kind == DomainKind::SlitSquare) {
    for (int i = half + 1; i <= n; ++i) {
      const int top = grid_index[gid(i, half)];
      mesh.slit_tags[top] = SlitTag::Top;
      bottom_copy[i] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(mesh.vertices[top]);
      mesh.slit_tags.push_back(SlitTag::Bottom);
    }
  }

  auto vertex = [&](int i, int j, bool below_slit) {
    if (below_slit && j == half && bottom_copy[i] >= 0) return bottom_copy[i];
    return grid_index[gid(i, j)];
  };

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!cell_present(i, j)) continue;
      const bool below = domain.kind == DomainKind::SlitSquare && j < half;
      const int v00 = vertex(i, j, below);
      const int v10 = vertex(i + 1, j, below);
      const int v01 = vertex(i, j + 1, below);
      const int v11 = vertex(i + 1, j + 1, below);
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }

  finalize_boundary(mesh);
  return mesh;
}

std::pair<Mesh, Prolongation> refine_uniform(const Mesh& mesh) {
  const int nc = static_cast<int>(mesh.vertices.size());
  Mesh fine;
  fine.domain = mesh.domain;
  fine.level = mesh.level + 1;
  fine.vertices = mesh.vertices;
  fine.slit_tags = mesh.slit_tags;
  if (fine.slit_tags.size() != mesh.vertices.size()) fine.slit_tags.assign(mesh.vertices.size(), SlitTag::None);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nc) + 2 * 3 * mesh.elements.size() / 2 + 16);
  for (int v = 0; v < nc; ++v) triplets.emplace_back(v, v, 1.0);

  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.elements.size() * 2);
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    const int m = static_cast<int>(fine.vertices.size());
    const Point& pa = mesh.vertices[a];
    const Point& pb = mesh.vertices[b];
    const Point pm{0.5 * pa.x + 0.5 * pb.x, 0.5 * pa.y + 0.5 * pb.y};
    fine.vertices.push_back(pm);
    // A midpoint inherits the slit side of its edge when the edge runs along the slit.
    SlitTag tag = SlitTag::None;
    const SlitTag ta = fine.slit_tags[a];
    const SlitTag tb = fine.slit_tags[b];
    if (ta != SlitTag::None && ta == tb)
      tag = ta;
    else if (pm.y == 0.0 && (ta == SlitTag::None) != (tb == SlitTag::None))
      tag = ta != SlitTag::None ? ta : tb;
    fine.slit_tags.push_back(tag);
    triplets.emplace_back(m, a, 0.5);
    triplets.emplace_back(m, b, 0.5);
    midpoint.emplace(key, m);
    return m;
  };

  fine.elements.reserve(mesh.elements.size() * 4);
  for (const auto& e : mesh.elements) {
    const int a = e[0], b = e[1], c = e[2];
    const int mab = mid(a, b);
    const int mbc = mid(b, c);
    const int mca = mid(c, a);
    fine.elements.push_back({a, mab, mca});
    fine.elements.push_back({mab, b, mbc});
    fine.elements.push_back({mca, mbc, c});
    fine.elements.push_back({mab, mbc, mca});
  }
  finalize_boundary(fine);

  Prolongation p(static_cast<int>(fine.vertices.size()), nc);
  p.setFromTriplets(triplets.begin(), triplets.end());
  return {std::move(fine), std::move(p)};
}

double mesh_diameter(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& e : mesh.elements)
    for (int k = 0; k < 3; ++k) h = std::max(h, distance(mesh.vertices[e[k]], mesh.vertices[e[(k + 1) % 3]]));
  return h;
}

MeshDiagnostics validate(const Mesh& mesh) {
  MeshDiagnostics d;
  const int nv = static_cast<int>(mesh.vertices.size());

  for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
    const auto& e = mesh.elements[k];
    if (std::any_of(e.begin(), e.end(), [&](int v) { return v < 0 || v >= nv; })) {
      d.violations.push_back("element " + std::to_string(k) + " references a missing vertex");
      return d;
    }
    const double a = signed_area(mesh.vertices[e[0]], mesh.vertices[e[1]], mesh.vertices[e[2]]);
    if (a <= 0.0) {
      ++d.orientation_violations;
      d.violations.push_back("element " + std::to_string(k) + " has non-positive signed area");
    }
    d.area += std::abs(a);
  }

  std::unordered_map<std::uint64_t, int> count;
  for (const auto& e : mesh.elements)
    for (int k = 0; k < 3; ++k) ++count[edge_key(e[k], e[(k + 1) % 3])];
  int n_boundary_from_elements = 0;
  for (const auto& [key, c] : count) {
    if (c > 2) ++d.nonconforming_edges;
    if (c == 1) ++n_boundary_from_elements;
  }
  if (d.nonconforming_edges > 0)
    d.violations.push_back(std::to_string(d.nonconforming_edges) + " edges shared by more than two elements");

  bool boundary_consistent = n_boundary_from_elements == static_cast<int>(mesh.boundary_edges.size());
  for (const auto& be : mesh.boundary_edges) {
    auto it = count.find(edge_key(be[0], be[1]));
    if (it == count.end() || it->second != 1) boundary_consistent = false;
    d.perimeter += distance(mesh.vertices[be[0]], mesh.vertices[be[1]]);
  }
  if (!boundary_consistent) d.violations.push_back("boundary edge list does not match single-element edges");

  std::vector<bool> on_edge(nv, false);
  for (const auto& be : mesh.boundary_edges) on_edge[be[0]] = on_edge[be[1]] = true;
  if (mesh.boundary_flags != on_edge) d.violations.push_back("boundary flags disagree with boundary edges");

  d.area_error = std::abs(d.area - mesh.domain.area()) / mesh.domain.area();
  if (d.area_error > 1e-12) d.violations.push_back("element areas do not sum to the domain area");
  if (std::abs(d.perimeter - mesh.domain.perimeter()) > 1e-12 * mesh.domain.perimeter())
    d.violations.push_back("boundary length does not match the domain perimeter");

  d.euler_characteristic = nv - static_cast<int>(count.size()) + static_cast<int>(mesh.elements.size());

  // Boundary loops via union-find over boundary edges.
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& be : mesh.boundary_edges) parent[find(be[0])] = find(be[1]);
  for (int v = 0; v < nv; ++v)
    if (on_edge[v] && find(v) == v) ++d.boundary_components;

  if (mesh.domain.kind == DomainKind::SlitSquare) {
    if (d.boundary_components != 1) d.violations.push_back("slit domain must have a single boundary loop");
  } else if (d.euler_characteristic != 1) {
    d.violations.push_back("Euler characteristic V - E + F != 1");
  }
  return d;
}

Prolongation MeshHierarchy::composed(std::size_t from, std::size_t to) const {
  if (from > to || to >= levels.size()) throw ParameterError("invalid level range for composed prolongation");
  const int nf = static_cast<int>(levels[from].num_vertices());
  Prolongation p(nf, nf);
  p.setIdentity();
  for (std::size_t l = from; l < to; ++l) {
    Prolongation next = prolongations[l] * p;
    p = std::move(next);
  }
  return p;
}

MeshHierarchy build_hierarchy(const DomainSpec& domain, int n_div_coarse, int n_levels) {
  if (n_levels < 1) throw ParameterError("a hierarchy needs at least one level");
  MeshHierarchy h;
  h.levels.push_back(build_initial_mesh(domain, n_div_coarse));
  for (int l = 1; l < n_levels; ++l) {
    auto [fine, p] = refine_uniform(h.levels.back());
    h.levels.push_back(std::move(fine));
    h.prolongations.push_back(std::move(p));
  }
  return h;
}

}  // namespace steklov
