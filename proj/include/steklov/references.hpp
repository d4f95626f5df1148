#pragma once

#include <string>
#include <vector>

#include "steklov/mesh.hpp"
#include "steklov/types.hpp"

namespace steklov {

/// Published eigenvalue for one (domain, n) combination.
struct ReferenceValue {
  int index = 0;      // position j of λ_j in the published listing
  Complex value = 0.0;
  std::string cell;   // row and column of the published listing, e.g. "h=2/1024 multigrid, lambda_1"
};

struct ReferenceTable {
  DomainKind domain = DomainKind::Square;
  Complex n = 0.0;
  double k = 1.0;           // wavenumber assumed for the published values
  std::string h_label;      // finest published mesh size
  std::vector<ReferenceValue> values;        // finest multigrid row
  std::vector<ReferenceValue> intermediate;  // next-coarser direct row
  /// Groups of indices tracked together as one cluster (near-multiple eigenvalues share a group).
  std::vector<std::vector<int>> clusters;

  const ReferenceValue& at(int index) const;
};

/// Finest-mesh values for a domain and a constant index n in {4, 4+4i}.
/// Throws ParameterError for any other combination.
ReferenceTable emit_reference_table(DomainKind domain, Complex n);

std::vector<ReferenceTable> all_reference_tables();

}  // namespace steklov
