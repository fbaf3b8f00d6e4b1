#include "gmsfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmsfem {

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<Triplet>& entries) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.n = n;
  m.row_ptr.assign(n + 1, 0);
  m.col.reserve(entries.size());
  m.val.reserve(entries.size());

  size_t k = 0;
  for (int r = 0; r < n; ++r) {
    while (k < entries.size() && entries[k].row == r) {
      const int c = entries[k].col;
      double v = 0.0;
      while (k < entries.size() && entries[k].row == r && entries[k].col == c)
        v += entries[k++].value;
      m.col.push_back(c);
      m.val.push_back(v);
    }
    m.row_ptr[r + 1] = static_cast<int>(m.col.size());
  }
  return m;
}

void SparseMatrix::multiply(const double* x, double* y) const {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 4096)
#endif
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

DenseVector SparseMatrix::multiply(const DenseVector& x) const {
  DenseVector y(n);
  multiply(x.data(), y.data());
  return y;
}

DenseVector SparseMatrix::diagonal() const {
  DenseVector d(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (col[k] == i) d[i] = val[k];
  return d;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d(i, col[k]) += val[k];
  return d;
}

double dot(const DenseVector& a, const DenseVector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const DenseVector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const DenseVector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, const DenseVector& x, DenseVector& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

int cholesky_factor(DenseMatrix& A) {
  const int n = A.rows;
  for (int j = 0; j < n; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (d <= 0.0) return j;
    const double ljj = std::sqrt(d);
    A(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = A(i, j);
      const double* ri = &A.a[static_cast<size_t>(i) * n];
      const double* rj = &A.a[static_cast<size_t>(j) * n];
      for (int k = 0; k < j; ++k) s -= ri[k] * rj[k];
      A(i, j) = s / ljj;
    }
  }
  return -1;
}

void cholesky_solve(const DenseMatrix& L, DenseVector& x) {
  const int n = L.rows;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= L(i, k) * x[k];
    x[i] = s / L(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
    x[i] = s / L(i, i);
  }
}

PivotedCholesky pivoted_cholesky(DenseMatrix G, double drop_tol) {
  const int n = G.rows;
  PivotedCholesky F;
  F.perm.resize(n);
  F.kept.assign(n, 0);
  F.scale.assign(n, 1.0);
  for (int j = 0; j < n; ++j) F.perm[j] = j;

  DenseVector d(n, 0.0);  // running Schur-complement diagonal
  for (int j = 0; j < n; ++j) {
    const double d0 = G(j, j);
    if (d0 > 0.0 && std::isfinite(d0)) {
      F.scale[j] = std::sqrt(d0);
      d[j] = 1.0;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) /= F.scale[i] * F.scale[j];

  int rank = 0;
  for (int k = 0; k < n; ++k) {
    // largest remaining diagonal as pivot (first index on ties)
    int m = k;
    for (int i = k + 1; i < n; ++i)
      if (d[i] > d[m]) m = i;
    if (d[m] <= drop_tol) break;  // every remaining column is dropped

    if (m != k) {
      for (int j = 0; j < n; ++j) std::swap(G(k, j), G(m, j));
      for (int i = 0; i < n; ++i) std::swap(G(i, k), G(i, m));
      std::swap(d[k], d[m]);
      std::swap(F.perm[k], F.perm[m]);
    }

    const double piv = std::sqrt(d[k]);
    G(k, k) = piv;
    const double* rk = &G.a[static_cast<size_t>(k) * n];
    for (int i = k + 1; i < n; ++i) {
      double* ri = &G.a[static_cast<size_t>(i) * n];
      double s = ri[k];
      for (int j = 0; j < k; ++j) s -= ri[j] * rk[j];
      ri[k] = s / piv;
      d[i] = std::max(0.0, d[i] - ri[k] * ri[k]);
    }
    ++rank;
  }

  F.rank = rank;
  for (int k = 0; k < rank; ++k) F.kept[F.perm[k]] = 1;
  F.L = std::move(G);
  return F;
}

DenseVector pivoted_solve(const PivotedCholesky& F, const DenseVector& b) {
  const int n = F.L.rows, r = F.rank;
  DenseVector w(r);
  for (int k = 0; k < r; ++k) w[k] = b[F.perm[k]] / F.scale[F.perm[k]];
  for (int k = 0; k < r; ++k) {
    double s = w[k];
    for (int j = 0; j < k; ++j) s -= F.L(k, j) * w[j];
    w[k] = s / F.L(k, k);
  }
  for (int k = r - 1; k >= 0; --k) {
    double s = w[k];
    for (int j = k + 1; j < r; ++j) s -= F.L(j, k) * w[j];
    w[k] = s / F.L(k, k);
  }
  DenseVector x(n, 0.0);
  for (int k = 0; k < r; ++k) x[F.perm[k]] = w[k] / F.scale[F.perm[k]];
  return x;
}

namespace {

DenseVector dense_spd_solve(const SparseMatrix& A, const DenseVector& b) {
  DenseMatrix D = A.to_dense();
  const int bad = cholesky_factor(D);
  if (bad >= 0)
    throw SolverError("solve_spd: dense Cholesky fallback hit non-positive pivot", 0.0, bad);
  DenseVector x = b;
  cholesky_solve(D, x);
  return x;
}

}  // namespace

DenseVector solve_spd(const SparseMatrix& A, const DenseVector& b, double tol, int max_iter,
                      SolveInfo* info) {
  const int n = A.n;
  const double nb = norm2(b);
  if (nb == 0.0) {
    if (info) *info = {0, 0.0, false};
    return DenseVector(n, 0.0);
  }

  DenseVector diag = A.diagonal();
  for (int i = 0; i < n; ++i)
    if (diag[i] <= 0.0) throw SolverError("solve_spd: non-positive diagonal entry", 0.0, i);

  DenseVector x(n, 0.0), r = b, z(n), p(n), q(n);
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rho = dot(r, z);
  double res = norm2(r);

  int it = 0;
  bool breakdown = false;
  while (res > tol * nb && it < max_iter) {
    A.multiply(p.data(), q.data());
    const double pq = dot(p, q);
    if (pq <= 0.0) {
      breakdown = true;
      break;
    }
    const double alpha = rho / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rho_next = dot(r, z);
    const double beta = rho_next / rho;
    rho = rho_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res = norm2(r);
    ++it;
  }

  if (breakdown)
    throw SolverError("solve_spd: conjugate gradient breakdown (matrix not positive definite)",
                      res / nb);

  if (res > tol * nb) {
    if (n <= 2000) {
      DenseVector xd = dense_spd_solve(A, b);
      if (info) *info = {it, res / nb, true};
      return xd;
    }
    throw SolverError("solve_spd: conjugate gradient did not converge", res / nb);
  }

  if (info) *info = {it, res / nb, false};
  return x;
}

void jacobi_eigen_sym(DenseMatrix A, DenseVector& values, DenseMatrix& vectors) {
  const int n = A.rows;
  vectors = DenseMatrix(n, n);
  for (int i = 0; i < n; ++i) vectors(i, i) = 1.0;
  values.assign(n, 0.0);
  if (n == 0) return;

  double fro = 0.0;
  for (double v : A.a) fro += v * v;
  fro = std::sqrt(fro);
  const double stop = 1e-14 * std::max(fro, 1e-300);

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
    if (std::sqrt(off) <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) values[i] = A(i, i);

  // sort ascending, carrying eigenvector columns along
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  DenseVector sorted_vals(n);
  DenseMatrix sorted_vecs(n, n);
  for (int j = 0; j < n; ++j) {
    sorted_vals[j] = values[order[j]];
    for (int i = 0; i < n; ++i) sorted_vecs(i, j) = vectors(i, order[j]);
  }
  values = std::move(sorted_vals);
  vectors = std::move(sorted_vecs);
}

namespace {

void check_symmetric(const DenseMatrix& M, const char* name) {
  double max_abs = 0.0;
  for (double v : M.a) max_abs = std::max(max_abs, std::abs(v));
  const double tol = 1e-12 * (1.0 + max_abs);
  for (int i = 0; i < M.rows; ++i)
    for (int j = i + 1; j < M.cols; ++j)
      if (std::abs(M(i, j) - M(j, i)) > tol)
        throw std::invalid_argument(std::string("generalized_eig: ") + name +
                                    " is not symmetric");
}

void symmetrize(DenseMatrix& M) {
  for (int i = 0; i < M.rows; ++i)
    for (int j = i + 1; j < M.cols; ++j) {
      const double v = 0.5 * (M(i, j) + M(j, i));
      M(i, j) = v;
      M(j, i) = v;
    }
}

// forward substitution of L against every column of B, in place
void forward_solve_columns(const DenseMatrix& L, DenseMatrix& B) {
  const int n = L.rows, m = B.cols;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) {
      const double lik = L(i, k);
      if (lik == 0.0) continue;
      for (int j = 0; j < m; ++j) B(i, j) -= lik * B(k, j);
    }
    const double d = L(i, i);
    for (int j = 0; j < m; ++j) B(i, j) /= d;
  }
}

}  // namespace

EigenPairs generalized_eig(const DenseMatrix& A_in, const DenseMatrix& S_in) {
  if (A_in.rows != A_in.cols || S_in.rows != S_in.cols || A_in.rows != S_in.rows)
    throw std::invalid_argument("generalized_eig: dimension mismatch");
  check_symmetric(A_in, "A");
  check_symmetric(S_in, "S");

  const int n = A_in.rows;
  DenseMatrix A = A_in, S = S_in;
  symmetrize(A);
  symmetrize(S);

  DenseMatrix L = S;
  if (cholesky_factor(L) >= 0)
    throw std::invalid_argument("generalized_eig: S is not positive definite");

  // C = L^-1 A L^-T
  DenseMatrix C = A;
  forward_solve_columns(L, C);  // C <- L^-1 A
  // transpose, then another forward solve gives (L^-1 (L^-1 A)^T) = C^T
  DenseMatrix Ct(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Ct(i, j) = C(j, i);
  forward_solve_columns(L, Ct);
  symmetrize(Ct);

  EigenPairs out;
  DenseMatrix Q;
  jacobi_eigen_sym(Ct, out.values, Q);

  // back-transform: psi = L^-T q, column by column
  out.vectors = DenseMatrix(n, n);
  for (int j = 0; j < n; ++j) {
    DenseVector v = Q.column(j);
    for (int i = n - 1; i >= 0; --i) {
      double s = v[i];
      for (int k = i + 1; k < n; ++k) s -= L(k, i) * v[k];
      v[i] = s / L(i, i);
    }
    // deterministic sign: largest-magnitude entry positive
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    const double sign = (n > 0 && v[imax] < 0.0) ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors(i, j) = sign * v[i];
  }

  // residual diagnostic ||A psi - lambda S psi|| / ||A||_F
  double a_fro = 0.0;
  for (double v : A.a) a_fro += v * v;
  a_fro = std::sqrt(a_fro);
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double av = 0.0, sv = 0.0;
      for (int k = 0; k < n; ++k) {
        av += A(i, k) * out.vectors(k, j);
        sv += S(i, k) * out.vectors(k, j);
      }
      const double r = av - out.values[j] * sv;
      r2 += r * r;
    }
    worst = std::max(worst, std::sqrt(r2));
  }
  out.max_rel_residual = a_fro > 0.0 ? worst / a_fro : worst;
  return out;
}

}  // namespace gmsfem
