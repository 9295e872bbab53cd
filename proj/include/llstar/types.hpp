#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace llstar {

using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Row-compressed sparse matrix with sorted column indices.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

} // namespace llstar
