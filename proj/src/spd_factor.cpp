#include <Eigen/SparseCholesky>

#include "steklov/linalg.hpp"

namespace steklov {

struct SpdFactor::Impl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

SpdFactor::SpdFactor(const RealSparseMatrix& a) {
  if (a.rows() != a.cols()) throw ParameterError("spd_factorize: matrix must be square");
  const Eigen::SparseMatrix<double> colmajor = a;
  const Eigen::SparseMatrix<double> transposed = colmajor.transpose();
  const double scale = colmajor.norm();
  if ((colmajor - transposed).norm() > 1e-12 * scale)
    throw ParameterError("spd_factorize: matrix is not symmetric");
  auto impl = std::make_shared<Impl>();
  impl->llt.compute(colmajor);
  if (impl->llt.info() != Eigen::Success)
    throw DefinitenessError("spd_factorize: matrix is not symmetric positive definite");
  impl_ = std::move(impl);
  dim_ = a.rows();
}

SpdFactor spd_factorize(const RealSparseMatrix& a) { return SpdFactor(a); }

RVector SpdFactor::solve(const RVector& b) const {
  if (!impl_ || b.size() != dim_) throw ParameterError("SpdFactor::solve: dimension mismatch");
  return impl_->llt.solve(b);
}

CVector SpdFactor::solve(const CVector& b) const {
  if (!impl_ || b.size() != dim_) throw ParameterError("SpdFactor::solve: dimension mismatch");
  const RVector re = impl_->llt.solve(RVector(b.real()));
  const RVector im = impl_->llt.solve(RVector(b.imag()));
  CVector x(dim_);
  x.real() = re;
  x.imag() = im;
  return x;
}

CMatrix SpdFactor::solve(const CMatrix& b) const {
  if (!impl_ || b.rows() != dim_) throw ParameterError("SpdFactor::solve: dimension mismatch");
  const RMatrix re = impl_->llt.solve(RMatrix(b.real()));
  const RMatrix im = impl_->llt.solve(RMatrix(b.imag()));
  CMatrix x(b.rows(), b.cols());
  x.real() = re;
  x.imag() = im;
  return x;
}

}  // namespace steklov
