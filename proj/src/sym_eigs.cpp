#include "qgt/sym_eigs.hpp"

#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace qgt {

namespace {

SymEigsResult dense_smallest(const SparseMat& A, const SparseMat& M, int n_want,
                             const SymEigsOptions& opts) {
  Eigen::MatrixXd Ad(A), Md(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(Ad, Md);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("smallest_eigenpairs: dense solver failed");
  const int n = std::min<int>(n_want, static_cast<int>(solver.eigenvalues().size()));
  SymEigsResult out;
  out.values = solver.eigenvalues().head(n);
  out.vectors = solver.eigenvectors().leftCols(n);
  out.residuals = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    out.residuals(i) = (A * out.vectors.col(i) - out.values(i) * (M * out.vectors.col(i))).norm();
  (void)opts;
  return out;
}

// M-orthonormalize the columns of X in place (classical Gram-Schmidt with
// reorthogonalization). Returns false if rank collapsed.
bool m_orthonormalize(const SparseMat& M, Eigen::MatrixXd& X) {
  for (int j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd v = X.col(j);
    Eigen::VectorXd mv = M * v;
    for (int pass = 0; pass < 2 && j > 0; ++pass) {
      const Eigen::VectorXd coeffs = X.leftCols(j).transpose() * mv;
      v -= X.leftCols(j) * coeffs;
      mv = M * v;
    }
    const double nrm = std::sqrt(v.dot(mv));
    if (!(nrm > 1e-300)) return false;
    X.col(j) = v / nrm;
  }
  return true;
}

} // namespace

SymEigsResult smallest_eigenpairs(const SparseMat& A, const SparseMat& M, int n_want,
                                  const SymEigsOptions& opts) {
  const Eigen::Index n = A.rows();
  if (n_want < 1) throw std::invalid_argument("smallest_eigenpairs: n_want must be >= 1");
  n_want = std::min<int>(n_want, static_cast<int>(n));
  if (n <= opts.dense_cutoff) return dense_smallest(A, M, n_want, opts);

  const int block = std::min<int>(static_cast<int>(n), n_want + std::max(8, n_want / 2));
  SparseMat K = A + M;
  Eigen::SimplicialLDLT<SparseMat> chol;
  chol.compute(K);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("smallest_eigenpairs: factorization of A + M failed");

  std::mt19937 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < block; ++j) X(i, j) = uni(rng);
  if (!m_orthonormalize(M, X))
    throw std::runtime_error("smallest_eigenpairs: start block rank-deficient");

  SymEigsResult out;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Eigen::MatrixXd Y(n, block);
    for (int j = 0; j < block; ++j) Y.col(j) = chol.solve(M * X.col(j));
    if (!m_orthonormalize(M, Y))
      throw std::runtime_error("smallest_eigenpairs: subspace rank collapsed");
    // Rayleigh-Ritz in the M-orthonormal basis Y.
    Eigen::MatrixXd At = Y.transpose() * (A * Y).eval();
    At = 0.5 * (At + At.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(At);
    X = Y * ritz.eigenvectors();

    Eigen::VectorXd vals = ritz.eigenvalues();
    Eigen::VectorXd res(n_want);
    bool done = true;
    for (int j = 0; j < n_want; ++j) {
      res(j) = (A * X.col(j) - vals(j) * (M * X.col(j))).norm();
      if (res(j) > opts.tol * (1.0 + std::abs(vals(j)))) done = false;
    }
    if (done) {
      out.values = vals.head(n_want);
      out.vectors = X.leftCols(n_want);
      out.residuals = res;
      out.iterations = iter;
      return out;
    }
  }
  throw std::runtime_error("smallest_eigenpairs: no convergence within iteration limit");
}

SymEigsResult eigenpairs_below(const SparseMat& A, const SparseMat& M, double lambda_max,
                               const SymEigsOptions& opts) {
  int n_want = 8;
  const int n = static_cast<int>(A.rows());
  while (true) {
    SymEigsResult r = smallest_eigenpairs(A, M, std::min(n_want, n), opts);
    if (r.values.size() == n || r.values(r.values.size() - 1) > lambda_max) {
      Eigen::Index count = 0;
      while (count < r.values.size() && r.values(count) <= lambda_max) ++count;
      SymEigsResult out;
      out.values = r.values.head(count);
      out.vectors = r.vectors.leftCols(count);
      out.residuals = r.residuals.head(count);
      out.iterations = r.iterations;
      return out;
    }
    n_want *= 2;
  }
}

} // namespace qgt
