#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qgt/mesh2d.hpp"

namespace qgt {

struct SymEigsOptions {
  double tol = 1e-10;      // on ||Ax - lambda Mx|| / ||x||_M, relative to 1+lambda
  int max_iter = 500;
  unsigned seed = 42;      // deterministic start block
  int dense_cutoff = 1200; // use a dense solve below this size
};

struct SymEigsResult {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXd vectors; // M-orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
};

/// Smallest `n_want` eigenpairs of the symmetric pencil (A, M), A >= 0,
/// M > 0, by shift-invert subspace iteration at shift -1 (the operator
/// (A+M)^{-1} M) with Rayleigh-Ritz extraction. Throws on
/// non-convergence.
SymEigsResult smallest_eigenpairs(const SparseMat& A, const SparseMat& M, int n_want,
                                  const SymEigsOptions& opts = {});

/// All eigenpairs with lambda <= lambda_max; grows the block until the
/// spectrum above lambda_max is reached.
SymEigsResult eigenpairs_below(const SparseMat& A, const SparseMat& M, double lambda_max,
                               const SymEigsOptions& opts = {});

} // namespace qgt
