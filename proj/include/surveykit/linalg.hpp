// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <string>

#include "surveykit/error.hpp"

namespace surveykit {

struct SymmetricEigen {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors; // column i pairs with values[i]
};

// Dense symmetric eigendecomposition (LAPACK dsyevd), eigenvalues sorted
// descending. Each eigenvector is flipped so its first coefficient of
// magnitude > 1e-12 is positive, giving a reproducible representation when
// eigenvalues tie.
inline SymmetricEigen sym_eigen_descending(Eigen::MatrixXd matrix) {
  const auto n = static_cast<lapack_int>(matrix.rows());
  require(matrix.rows() == matrix.cols(), ErrorCode::dimension_mismatch,
          "eigendecomposition needs a square matrix");
  Eigen::VectorXd ascending(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, matrix.data(), n,
                                         ascending.data());
  require(info == 0, ErrorCode::non_convergence,
          "dsyevd failed with info=" + std::to_string(info));

  SymmetricEigen out;
  out.values = ascending.reverse();
  out.vectors.resize(n, n);
  for (lapack_int i = 0; i < n; ++i) {
    Eigen::VectorXd column = matrix.col(n - 1 - i);
    for (lapack_int j = 0; j < n; ++j) {
      if (std::abs(column[j]) > 1e-12) {
        if (column[j] < 0.0) column = -column;
        break;
      }
    }
    out.vectors.col(i) = column;
  }
  return out;
}

}  // namespace surveykit
