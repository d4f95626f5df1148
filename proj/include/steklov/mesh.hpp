#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steklov/types.hpp"

namespace steklov {

enum class DomainKind { Square, LShape, SlitSquare };

/// One of the three experiment domains.
///
/// Square     = (-s, s)^2 with s = sqrt(2)/2
/// LShape     = (-1, 1)^2 \ ([0, 1) x (-1, 0])
/// SlitSquare = Square \ {0 <= x <= s, y = 0}
struct DomainSpec {
  DomainKind kind = DomainKind::Square;

  double area() const;
  /// Boundary length; both faces of the slit are counted.
  double perimeter() const;
  /// Half-width of the bounding square.
  double half_width() const;

  std::string name() const;
  static DomainSpec parse(std::string_view name);

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class SlitTag : std::uint8_t { None, Top, Bottom };

/// Conforming triangulation. Elements are counterclockwise; boundary edges
/// are oriented so that the domain lies to their left.
struct Mesh {
  DomainSpec domain;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<bool> boundary_flags;
  std::vector<SlitTag> slit_tags;
  int level = 0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_elements() const { return elements.size(); }
  /// Indices of all boundary vertices in increasing order.
  std::vector<int> boundary_vertices() const;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Fine-by-coarse interpolation matrix between nested P1 spaces.
using Prolongation = RealSparseMatrix;

struct MeshHierarchy {
  std::vector<Mesh> levels;
  std::vector<Prolongation> prolongations;  // prolongations[l]: level l -> l+1
  int xi = 2;

  std::size_t size() const { return levels.size(); }
  /// Composed prolongation from level `from` to level `to` (from <= to).
  Prolongation composed(std::size_t from, std::size_t to) const;
};

struct MeshDiagnostics {
  std::vector<std::string> violations;
  int orientation_violations = 0;
  int nonconforming_edges = 0;
  double area = 0.0;
  double area_error = 0.0;       // relative to the domain area
  double perimeter = 0.0;        // sum of boundary edge lengths
  int euler_characteristic = 0;  // V - E + F
  int boundary_components = 0;

  bool ok() const { return violations.empty(); }
};

/// Structured n_div x n_div grid over the bounding square, every cell split
/// along its bottom-left -> top-right diagonal.
Mesh build_initial_mesh(const DomainSpec& domain, int n_div);

/// Red refinement; returns the fine mesh and the prolongation coarse -> fine.
std::pair<Mesh, Prolongation> refine_uniform(const Mesh& mesh);

double mesh_diameter(const Mesh& mesh);

MeshDiagnostics validate(const Mesh& mesh);

MeshHierarchy build_hierarchy(const DomainSpec& domain, int n_div_coarse, int n_levels);

double signed_area(const Point& a, const Point& b, const Point& c);

nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& j);

}  // namespace steklov
