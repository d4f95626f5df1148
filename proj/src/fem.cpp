#include "steklov/fem.hpp"

#include <cmath>

namespace steklov {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using ComplexTriplets = std::vector<Eigen::Triplet<Complex>>;

double checked_area(const Point& a, const Point& b, const Point& c) {
  const double area = signed_area(a, b, c);
  if (!(area > 0.0)) throw GeometryError("degenerate or inverted element (area <= 0)");
  return area;
}

template <class Fn>
RealSparseMatrix assemble_elementwise(const Mesh& mesh, Fn&& element_matrix) {
  Triplets t;
  t.reserve(mesh.elements.size() * 9);
  for (const auto& e : mesh.elements) {
    const Eigen::Matrix3d k = element_matrix(mesh.vertices[e[0]], mesh.vertices[e[1]], mesh.vertices[e[2]]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.emplace_back(e[i], e[j], k(i, j));
  }
  const int n = static_cast<int>(mesh.vertices.size());
  RealSparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

Complex ProblemParams::n_at(const Point& p) const {
  if (const auto* c = std::get_if<Complex>(&n)) return *c;
  return std::get<IndexField>(n)(p);
}

bool ProblemParams::is_real() const {
  const auto* c = std::get_if<Complex>(&n);
  return c != nullptr && c->imag() == 0.0;
}

ProblemParams ProblemParams::conjugated() const {
  ProblemParams out;
  out.k = k;
  if (const auto* c = std::get_if<Complex>(&n)) {
    out.n = std::conj(*c);
  } else {
    auto field = std::get<IndexField>(n);
    out.n = IndexField([field](const Point& p) { return std::conj(field(p)); });
  }
  return out;
}

std::vector<std::string> ProblemParams::check(std::span<const Point> samples) const {
  std::vector<std::string> warnings;
  if (!(k > 0.0)) warnings.push_back("wavenumber k should be positive");
  for (const auto& p : samples) {
    const Complex v = n_at(p);
    if (!(v.real() > 0.0)) {
      warnings.push_back("Re n(x) is not positive at some sample point");
      break;
    }
    if (k * v.imag() < 0.0) {
      warnings.push_back("absorption part n2 = k Im n(x) is negative at some sample point");
      break;
    }
  }
  return warnings;
}

Eigen::Matrix3d element_stiffness(const Point& a, const Point& b, const Point& c) {
  const double area = checked_area(a, b, c);
  const std::array<Point, 3> p{a, b, c};
  Eigen::Vector3d gx, gy;
  for (int i = 0; i < 3; ++i) {
    const Point& p1 = p[(i + 1) % 3];
    const Point& p2 = p[(i + 2) % 3];
    gx(i) = p1.y - p2.y;
    gy(i) = p2.x - p1.x;
  }
  return (gx * gx.transpose() + gy * gy.transpose()) / (4.0 * area);
}

Eigen::Matrix3d element_mass(const Point& a, const Point& b, const Point& c) {
  const double area = checked_area(a, b, c);
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / 12.0);
}

Point centroid(const Mesh& mesh, std::size_t element) {
  const auto& e = mesh.elements[element];
  const Point& a = mesh.vertices[e[0]];
  const Point& b = mesh.vertices[e[1]];
  const Point& c = mesh.vertices[e[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

RealSparseMatrix assemble_stiffness(const Mesh& mesh) { return assemble_elementwise(mesh, element_stiffness); }

RealSparseMatrix assemble_mass(const Mesh& mesh) { return assemble_elementwise(mesh, element_mass); }

ComplexSparseMatrix assemble_weighted_mass(const Mesh& mesh, std::span<const Complex> weight) {
  if (weight.size() != mesh.elements.size()) throw ParameterError("one weight per element is required");
  ComplexTriplets t;
  t.reserve(mesh.elements.size() * 9);
  for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
    const Complex w = weight[k];
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw ParameterError("non-finite element weight");
    const auto& e = mesh.elements[k];
    const Eigen::Matrix3d m = element_mass(mesh.vertices[e[0]], mesh.vertices[e[1]], mesh.vertices[e[2]]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.emplace_back(e[i], e[j], w * m(i, j));
  }
  const int n = static_cast<int>(mesh.vertices.size());
  ComplexSparseMatrix out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

RealSparseMatrix assemble_boundary_mass(const Mesh& mesh) {
  Triplets t;
  t.reserve(mesh.boundary_edges.size() * 4);
  for (const auto& be : mesh.boundary_edges) {
    const Point& a = mesh.vertices[be[0]];
    const Point& b = mesh.vertices[be[1]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    t.emplace_back(be[0], be[0], len / 3.0);
    t.emplace_back(be[1], be[1], len / 3.0);
    t.emplace_back(be[0], be[1], len / 6.0);
    t.emplace_back(be[1], be[0], len / 6.0);
  }
  const int n = static_cast<int>(mesh.vertices.size());
  RealSparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<Complex> element_weights(const Mesh& mesh, const ProblemParams& params, double shift) {
  std::vector<Complex> w(mesh.elements.size());
  const double k2 = params.k * params.k;
  for (std::size_t e = 0; e < w.size(); ++e) w[e] = k2 * params.n_at(centroid(mesh, e)) + shift;
  return w;
}

ComplexSparseMatrix to_complex(const RealSparseMatrix& m) { return m.cast<Complex>(); }

ComplexSparseMatrix assemble_A(const Mesh& mesh, const ProblemParams& params) {
  const auto w = element_weights(mesh, params);
  return to_complex(assemble_stiffness(mesh)) - assemble_weighted_mass(mesh, w);
}

RealSparseMatrix assemble_Atilde(const Mesh& mesh) {
  return assemble_stiffness(mesh) + assemble_mass(mesh);
}

ComplexSparseMatrix assemble_shifted_mass(const Mesh& mesh, const ProblemParams& params) {
  const auto w = element_weights(mesh, params, 1.0);
  return assemble_weighted_mass(mesh, w);
}

double boundary_norm(const RealSparseMatrix& b, const CVector& x) {
  if (b.rows() != x.size() || b.cols() != x.size()) throw ParameterError("boundary_norm: dimension mismatch");
  const double v = x.dot(b * x).real();  // Eigen's dot conjugates the first argument
  if (v < -1e-14 * std::max(1.0, x.squaredNorm()))
    throw Error("boundary_norm: negative boundary energy; B is not positive semidefinite");
  return std::sqrt(std::max(0.0, v));
}

}  // namespace steklov
