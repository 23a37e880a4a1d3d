#pragma once

#include <memory>
#include <sstream>

#include <Eigen/SparseLU>

#include "tpf/types.hpp"

namespace tpf {

/// Reusable LU factorization of a square sparse matrix.
///
/// Wraps the three phases of a sparse direct solve: a fill-reducing column
/// ordering with symbolic analysis, the numeric factorization, and any number
/// of subsequent solves against the stored factors. The first two run once, in
/// the constructor; solve() only performs triangular substitutions.
template <typename Scalar>
class SparseFactorization {
 public:
  using Matrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit SparseFactorization(const Matrix& m) : lu_(std::make_unique<Solver>()), rows_(m.rows()) {
    if (m.rows() != m.cols()) {
      throw InputError("factorize: matrix is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected square");
    }
    Matrix compressed = m;
    compressed.makeCompressed();
    lu_->analyzePattern(compressed);
    lu_->factorize(compressed);
    if (lu_->info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "factorize: pivot failure in " << m.rows() << "x" << m.cols()
          << " matrix: " << lu_->lastErrorMessage();
      throw SingularMatrixError(msg.str());
    }
  }

  SparseFactorization(SparseFactorization&&) noexcept = default;
  SparseFactorization& operator=(SparseFactorization&&) noexcept = default;

  [[nodiscard]] Index rows() const { return rows_; }

  [[nodiscard]] Vector solve(const Vector& b) const {
    Vector x = lu_->solve(b);
    return x;
  }

  [[nodiscard]] DenseMatrix solve(const DenseMatrix& b) const {
    DenseMatrix x = lu_->solve(b);
    return x;
  }

 private:
  using Solver = Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>;
  // SparseLU holds internal references and is neither copyable nor movable.
  std::unique_ptr<Solver> lu_;
  Index rows_ = 0;
};

template <typename Scalar>
SparseFactorization<Scalar> factorize(const Eigen::SparseMatrix<Scalar>& m) {
  return SparseFactorization<Scalar>(m);
}

}  // namespace tpf
