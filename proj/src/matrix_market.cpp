#include <iomanip>
#include <ostream>

#include "steklov/fem.hpp"

namespace steklov {

namespace {

template <class Matrix, class Writer>
void write_coordinate(std::ostream& os, const Matrix& m, const char* field, Writer&& write_value) {
  os << "%%MatrixMarket matrix coordinate " << field << " general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (typename Matrix::InnerIterator it(m, r); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ';
      write_value(it.value());
      os << '\n';
    }
}

}  // namespace

void write_matrix_market(std::ostream& os, const RealSparseMatrix& m) {
  write_coordinate(os, m, "real", [&](double v) { os << v; });
}

void write_matrix_market(std::ostream& os, const ComplexSparseMatrix& m) {
  write_coordinate(os, m, "complex", [&](const Complex& v) { os << v.real() << ' ' << v.imag(); });
}

}  // namespace steklov
