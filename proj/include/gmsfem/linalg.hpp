#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmsfem {

using DenseVector = std::vector<double>;

/// Row-major dense matrix.
struct DenseMatrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  DenseVector column(int j) const {
    DenseVector c(rows);
    for (int i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }
};

/// Symmetric sparse matrix in compressed row storage (both triangles kept).
class SparseMatrix {
 public:
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  struct Triplet {
    int row, col;
    double value;
  };

  /// Sum duplicate entries and compress. Entries are assumed structurally
  /// symmetric (the assemblers guarantee it).
  static SparseMatrix from_triplets(int n, std::vector<Triplet>& entries);

  int nnz() const { return static_cast<int>(val.size()); }

  void multiply(const double* x, double* y) const;
  DenseVector multiply(const DenseVector& x) const;

  DenseVector diagonal() const;
  DenseMatrix to_dense() const;
};

/// Thrown when an iterative or direct solve cannot reach its contract.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual = 0.0, int pivot_index = -1)
      : std::runtime_error(what), residual_(residual), pivot_index_(pivot_index) {}
  double residual() const { return residual_; }
  int pivot_index() const { return pivot_index_; }

 private:
  double residual_;
  int pivot_index_;
};

struct SolveInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool dense_fallback = false;
};

/// Solve Ax = b for symmetric positive definite A by Jacobi-preconditioned
/// conjugate gradients; falls back to dense Cholesky for n <= 2000 if CG
/// stalls. Throws SolverError on CG breakdown (indefinite input) or
/// non-convergence.
DenseVector solve_spd(const SparseMatrix& A, const DenseVector& b, double tol = 1e-10,
                      int max_iter = 20000, SolveInfo* info = nullptr);

// --- dense symmetric kernels ---

/// In-place lower Cholesky A = L L^T on the lower triangle. Returns the
/// index of the first non-positive pivot, or -1 on success.
int cholesky_factor(DenseMatrix& A);

/// Solve L L^T x = b with the factor from cholesky_factor.
void cholesky_solve(const DenseMatrix& L, DenseVector& x);

/// Diagonally pivoted Cholesky of a symmetric positive semidefinite (Gram)
/// matrix, after symmetric scaling to unit diagonal. Columns whose pivot
/// falls below drop_tol of the remaining diagonal maximum are dropped;
/// pivoting keeps the factor entries bounded, so heavy rank deficiency is
/// handled stably. Solves of consistent systems zero the dropped
/// coefficients.
struct PivotedCholesky {
  DenseMatrix L;                   // permuted factor, lower triangle
  std::vector<int> perm;           // perm[slot] = original column index
  std::vector<std::uint8_t> kept;  // per original column
  DenseVector scale;
  int rank = 0;
  int dropped() const { return L.rows - rank; }
};

PivotedCholesky pivoted_cholesky(DenseMatrix G, double drop_tol = 1e-12);
DenseVector pivoted_solve(const PivotedCholesky& F, const DenseVector& b);

/// All eigenpairs of the generalized symmetric-definite problem
/// A psi = lambda S psi, ascending.
struct EigenPairs {
  DenseVector values;    // ascending
  DenseMatrix vectors;   // column k pairs with values[k]; S-orthonormal
  double max_rel_residual = 0.0;  // max_k ||A psi - lambda S psi||_2 / ||A||_F
};

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations; eigenvalues ascending, orthonormal eigenvector columns.
void jacobi_eigen_sym(DenseMatrix A, DenseVector& values, DenseMatrix& vectors);

/// A symmetric PSD, S symmetric PD: Cholesky S = L L^T, Jacobi on
/// L^-1 A L^-T, back-transform. Throws std::invalid_argument if S is not
/// positive definite or either input is non-symmetric beyond 1e-12.
EigenPairs generalized_eig(const DenseMatrix& A, const DenseMatrix& S);

// --- small vector helpers ---

double dot(const DenseVector& a, const DenseVector& b);
double norm2(const DenseVector& a);
double norm_inf(const DenseVector& a);
void axpy(double alpha, const DenseVector& x, DenseVector& y);  // y += alpha x

}  // namespace gmsfem
