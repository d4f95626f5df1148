#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "steklov/mesh.hpp"
#include "steklov/types.hpp"

namespace steklov {

/// Wavenumber and refraction index of  Δu + k² n(x) u = 0.
///
/// The index is either a complex constant or a callback sampled once per
/// element at its centroid.
struct ProblemParams {
  using IndexField = std::function<Complex(const Point&)>;

  double k = 1.0;
  std::variant<Complex, IndexField> n = Complex(4.0, 0.0);

  Complex n_at(const Point& p) const;
  bool has_constant_index() const { return std::holds_alternative<Complex>(n); }
  /// Constant index with zero imaginary part.
  bool is_real() const;
  /// Parameters of the adjoint problem (n replaced by conj(n)).
  ProblemParams conjugated() const;

  /// Checks Re n >= δ > 0 and n₂ = k·Im n >= 0 at the given sample points.
  /// Returns human-readable warnings; never throws.
  std::vector<std::string> check(std::span<const Point> samples) const;
};

Eigen::Matrix3d element_stiffness(const Point& a, const Point& b, const Point& c);
Eigen::Matrix3d element_mass(const Point& a, const Point& b, const Point& c);

Point centroid(const Mesh& mesh, std::size_t element);

/// S_ij = ∫ ∇φ_j · ∇φ_i
RealSparseMatrix assemble_stiffness(const Mesh& mesh);
/// M_ij = ∫ φ_j φ_i
RealSparseMatrix assemble_mass(const Mesh& mesh);
/// Element mass matrices scaled by one complex weight per element.
ComplexSparseMatrix assemble_weighted_mass(const Mesh& mesh, std::span<const Complex> weight);
/// B_ij = ∫_∂Ω φ_j φ_i, both slit faces included.
RealSparseMatrix assemble_boundary_mass(const Mesh& mesh);

/// Per-element weight k² n(centroid) + shift.
std::vector<Complex> element_weights(const Mesh& mesh, const ProblemParams& params, double shift = 0.0);

/// A = S - M_{k²n}; complex symmetric.
ComplexSparseMatrix assemble_A(const Mesh& mesh, const ProblemParams& params);
/// Ã = S + M; real SPD.
RealSparseMatrix assemble_Atilde(const Mesh& mesh);
/// M_{k²n+1}, the right-hand-side mass of the shifted formulation.
ComplexSparseMatrix assemble_shifted_mass(const Mesh& mesh, const ProblemParams& params);

/// sqrt(xᴴ B x).
double boundary_norm(const RealSparseMatrix& b, const CVector& x);

ComplexSparseMatrix to_complex(const RealSparseMatrix& m);

/// Matrix Market coordinate format ("real general" / "complex general").
void write_matrix_market(std::ostream& os, const RealSparseMatrix& m);
void write_matrix_market(std::ostream& os, const ComplexSparseMatrix& m);

}  // namespace steklov
