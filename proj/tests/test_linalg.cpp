#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gmsfem/linalg.hpp"

using namespace gmsfem;

namespace {

std::uint64_t rng_state = 0x12345678u;
double urand() {
  rng_state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = rng_state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) / static_cast<double>(1ull << 53);
}

SparseMatrix sparse_from_dense(const DenseMatrix& D) {
  std::vector<SparseMatrix::Triplet> t;
  for (int i = 0; i < D.rows; ++i)
    for (int j = 0; j < D.cols; ++j)
      if (D(i, j) != 0.0) t.push_back({i, j, D(i, j)});
  return SparseMatrix::from_triplets(D.rows, t);
}

DenseMatrix random_spd(int n, double shift) {
  DenseMatrix G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = 2.0 * urand() - 1.0;
  DenseMatrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += G(k, i) * G(k, j);
      A(i, j) = s + (i == j ? shift : 0.0);
    }
  return A;
}

}  // namespace

TEST_CASE("solve_spd basics") {
  // identity
  DenseMatrix I(3, 3);
  for (int i = 0; i < 3; ++i) I(i, i) = 1.0;
  auto x = solve_spd(sparse_from_dense(I), {1.0, -2.0, 3.0});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(-2.0));
  CHECK(x[2] == doctest::Approx(3.0));

  // 2x2 by hand elimination
  DenseMatrix A(2, 2);
  A(0, 0) = 2;
  A(0, 1) = 1;
  A(1, 0) = 1;
  A(1, 1) = 2;
  x = solve_spd(sparse_from_dense(A), {1.0, 1.0});
  CHECK(x[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("solve_spd rejects indefinite input") {
  DenseMatrix A(2, 2);
  A(0, 0) = 1;
  A(0, 1) = 0;
  A(1, 0) = 0;
  A(1, 1) = -1;
  CHECK_THROWS_AS(solve_spd(sparse_from_dense(A), {1.0, 1.0}), SolverError);
}

TEST_CASE("solve_spd multiply-back on random SPD systems") {
  rng_state = 7;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(urand() * 198);
    const DenseMatrix D = random_spd(n, 0.5 * n);
    const SparseMatrix A = sparse_from_dense(D);
    DenseVector b(n);
    for (double& v : b) v = 2.0 * urand() - 1.0;
    const DenseVector x = solve_spd(A, b, 1e-10);
    const DenseVector Ax = A.multiply(x);
    double r = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
      r += (b[i] - Ax[i]) * (b[i] - Ax[i]);
      nb += b[i] * b[i];
    }
    CHECK(std::sqrt(r) <= 2e-10 * std::sqrt(nb));
  }
}

TEST_CASE("generalized_eig scalar and diagonal cases") {
  DenseMatrix A(1, 1), S(1, 1);
  A(0, 0) = 2;
  S(0, 0) = 1;
  auto e = generalized_eig(A, S);
  CHECK(e.values[0] == doctest::Approx(2.0));
  CHECK(e.vectors(0, 0) == doctest::Approx(1.0));

  DenseMatrix A2(2, 2), S2(2, 2);
  A2(0, 0) = 3;
  A2(1, 1) = 1;
  S2(0, 0) = 1;
  S2(1, 1) = 1;
  e = generalized_eig(A2, S2);
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(3.0));
  // eigenvector pairing: lambda=1 pairs with the second axis
  CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("generalized_eig residual oracle on a random 30x30 pair") {
  rng_state = 99;
  const int n = 30;
  const DenseMatrix A = random_spd(n, 0.0);
  const DenseMatrix S = random_spd(n, n);
  const auto e = generalized_eig(A, S);

  double a_fro = 0;
  for (double v : A.a) a_fro += v * v;
  a_fro = std::sqrt(a_fro);

  for (int k = 0; k < n; ++k) {
    if (k > 0) CHECK(e.values[k] >= e.values[k - 1]);
    double r2 = 0;
    for (int i = 0; i < n; ++i) {
      double av = 0, sv = 0;
      for (int j = 0; j < n; ++j) {
        av += A(i, j) * e.vectors(j, k);
        sv += S(i, j) * e.vectors(j, k);
      }
      const double r = av - e.values[k] * sv;
      r2 += r * r;
    }
    CHECK(std::sqrt(r2) <= 1e-8 * a_fro);
  }

  // S-orthonormality
  for (int k = 0; k < n; ++k)
    for (int l = 0; l <= k; ++l) {
      double s = 0;
      for (int i = 0; i < n; ++i) {
        double si = 0;
        for (int j = 0; j < n; ++j) si += S(i, j) * e.vectors(j, l);
        s += e.vectors(i, k) * si;
      }
      CHECK(std::abs(s - (k == l ? 1.0 : 0.0)) <= 1e-10);
    }
}

TEST_CASE("generalized_eig input validation") {
  DenseMatrix A(2, 2), S(2, 2), S3(3, 3);
  A(0, 0) = 1;
  A(1, 1) = 1;
  S(0, 0) = 1;
  S(1, 1) = -1;  // not PD
  CHECK_THROWS_AS(generalized_eig(A, S), std::invalid_argument);
  CHECK_THROWS_AS(generalized_eig(A, S3), std::invalid_argument);

  DenseMatrix B = A;
  B(0, 1) = 1e-3;  // visibly nonsymmetric
  DenseMatrix Sp(2, 2);
  Sp(0, 0) = 1;
  Sp(1, 1) = 1;
  CHECK_THROWS_AS(generalized_eig(B, Sp), std::invalid_argument);
}

TEST_CASE("pivoted cholesky handles rank deficiency") {
  // rank-2 Gram of three vectors with v2 = v0 + v1
  DenseMatrix V(4, 3);
  rng_state = 13;
  for (int i = 0; i < 4; ++i) {
    V(i, 0) = urand();
    V(i, 1) = urand();
    V(i, 2) = V(i, 0) + V(i, 1);
  }
  DenseMatrix G(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double s = 0;
      for (int i = 0; i < 4; ++i) s += V(i, a) * V(i, b);
      G(a, b) = s;
    }
  const auto F = pivoted_cholesky(G, 1e-12);
  CHECK(F.rank == 2);
  CHECK(F.dropped() == 1);

  // consistent system: b = G * (1, 2, 3)^T; the solve must reproduce b
  DenseVector c{1, 2, 3}, b(3, 0.0);
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) b[a] += G(a, d) * c[d];
  const DenseVector x = pivoted_solve(F, b);
  for (int a = 0; a < 3; ++a) {
    double gx = 0;
    for (int d = 0; d < 3; ++d) gx += G(a, d) * x[d];
    CHECK(gx == doctest::Approx(b[a]).epsilon(1e-10));
  }
}

TEST_CASE("pivoted cholesky equals direct solve for full rank") {
  rng_state = 21;
  const DenseMatrix A = random_spd(12, 6.0);
  DenseVector b(12);
  for (double& v : b) v = urand();

  const auto F = pivoted_cholesky(A, 1e-12);
  CHECK(F.rank == 12);
  const DenseVector x = pivoted_solve(F, b);

  DenseMatrix L = A;
  REQUIRE(cholesky_factor(L) < 0);
  DenseVector y = b;
  cholesky_solve(L, y);
  for (int i = 0; i < 12; ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-9));
}

TEST_CASE("jacobi eigensolver on a symmetric matrix") {
  rng_state = 5;
  const int n = 20;
  DenseMatrix A = random_spd(n, 1.0);
  DenseVector vals;
  DenseMatrix vecs;
  jacobi_eigen_sym(A, vals, vecs);
  for (int k = 1; k < n; ++k) CHECK(vals[k] >= vals[k - 1]);
  for (int k = 0; k < n; ++k) {
    double r2 = 0;
    for (int i = 0; i < n; ++i) {
      double av = 0;
      for (int j = 0; j < n; ++j) av += A(i, j) * vecs(j, k);
      const double r = av - vals[k] * vecs(i, k);
      r2 += r * r;
    }
    CHECK(std::sqrt(r2) <= 1e-10 * std::max(1.0, std::abs(vals[n - 1])));
  }
}
