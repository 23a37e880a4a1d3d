#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace tpf {

using Complex = std::complex<double>;
using Index = Eigen::Index;

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// Column-major compressed storage throughout.
using SpCMatrix = Eigen::SparseMatrix<Complex>;
using SpRMatrix = Eigen::SparseMatrix<double>;
using CTriplet = Eigen::Triplet<Complex>;
using RTriplet = Eigen::Triplet<double>;

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, arguments).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A linear system that could not be factorized.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

}  // namespace tpf
