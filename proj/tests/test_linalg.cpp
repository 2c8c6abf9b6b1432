#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "taskgemm/linalg.hpp"
#include "taskgemm/oracle.hpp"
#include "taskgemm/rng.hpp"

using namespace taskgemm;
using linalg::Complex;
using linalg::ComplexMatrix;

namespace {

ComplexMatrix random_hermitian(std::size_t n, rng::RandomStream& stream) {
  ComplexMatrix g = oracle::random_matrix(n, n, stream);
  ComplexMatrix h(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      h(i, j) = 0.5 * (g(i, j) + std::conj(g(j, i)));
    }
  }
  return h;
}

// det(H - lambda*I) through complex Gaussian elimination with partial
// pivoting. Real for Hermitian H (up to roundoff), so the real part is the
// characteristic polynomial.
double char_poly(const ComplexMatrix& h, double lambda) {
  const std::size_t n = h.rows();
  ComplexMatrix w = h;
  for (std::size_t i = 0; i < n; ++i) w(i, i) -= Complex{lambda, 0.0};
  Complex det{1.0, 0.0};
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(w(row, col)) > std::abs(w(pivot, col))) pivot = row;
    }
    if (std::abs(w(pivot, col)) == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(w(pivot, j), w(col, j));
      det = -det;
    }
    det *= w(col, col);
    for (std::size_t row = col + 1; row < n; ++row) {
      const Complex factor = w(row, col) / w(col, col);
      for (std::size_t j = col; j < n; ++j) w(row, j) -= factor * w(col, j);
    }
  }
  return det.real();
}

// Roots of the characteristic polynomial by grid scan plus bisection.
std::vector<double> bisection_eigenvalues(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) radius += std::abs(h(i, j));
    }
    lo = std::min(lo, h(i, i).real() - radius);
    hi = std::max(hi, h(i, i).real() + radius);
  }
  lo -= 1e-6;
  hi += 1e-6;

  const std::size_t grid = 20000;
  std::vector<double> roots;
  double prev_x = lo;
  double prev_f = char_poly(h, lo);
  for (std::size_t g = 1; g <= grid; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid);
    const double f = char_poly(h, x);
    if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0)) {
      double a = prev_x, b = x, fa = prev_f;
      for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = char_poly(h, mid);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = f;
  }
  return roots;
}

}  // namespace

TEST_CASE("gemm identity and scalar edge cases") {
  auto stream = rng::derive_stream({42, 0});
  const ComplexMatrix b = oracle::random_matrix(3, 2, stream);

  const ComplexMatrix from_identity = linalg::gemm(
      Complex{1.0, 0.0}, ComplexMatrix::identity(3), b, Complex{0.0, 0.0},
      ComplexMatrix::zeros(3, 2));
  CHECK(from_identity.bitwise_equal(b));

  const ComplexMatrix a = oracle::random_matrix(3, 3, stream);
  const ComplexMatrix c = oracle::random_matrix(3, 2, stream);
  const ComplexMatrix untouched = linalg::gemm(Complex{0.0, 0.0}, a, b, Complex{1.0, 0.0}, c);
  CHECK(untouched.bitwise_equal(c));
}

TEST_CASE("gemm matches the triple-loop oracle") {
  auto stream = rng::derive_stream({42, 1});
  const ComplexMatrix a = oracle::random_matrix(2, 3, stream);
  const ComplexMatrix b = oracle::random_matrix(3, 2, stream);
  const ComplexMatrix c = ComplexMatrix::zeros(2, 2);
  const ComplexMatrix got = linalg::gemm(Complex{1.0, 0.0}, a, b, Complex{0.0, 0.0}, c);
  const ComplexMatrix want = oracle::naive_gemm(Complex{1.0, 0.0}, a, b, Complex{0.0, 0.0}, c);
  CHECK(oracle::max_relative_error(got, want) <= 1e-13);
}

TEST_CASE("gemm names the offending dimension pair") {
  const ComplexMatrix a(2, 3);
  const ComplexMatrix b(4, 2);
  const ComplexMatrix c(2, 2);
  CHECK_THROWS_WITH_AS(linalg::gemm({1, 0}, a, b, {0, 0}, c),
                       doctest::Contains("A.cols (3) != B.rows (4)"), std::invalid_argument);
  const ComplexMatrix b2(3, 2);
  const ComplexMatrix c_bad_rows(5, 2);
  CHECK_THROWS_WITH_AS(linalg::gemm({1, 0}, a, b2, {0, 0}, c_bad_rows),
                       doctest::Contains("C.rows (5) != A.rows (2)"), std::invalid_argument);
  const ComplexMatrix c_bad_cols(2, 7);
  CHECK_THROWS_WITH_AS(linalg::gemm({1, 0}, a, b2, {0, 0}, c_bad_cols),
                       doctest::Contains("C.cols (7) != B.cols (2)"), std::invalid_argument);
}

TEST_CASE("gemm_tiled is bitwise-identical to gemm for every tile size") {
  auto stream = rng::derive_stream({42, 2});
  const ComplexMatrix a = oracle::random_matrix(50, 70, stream);
  const ComplexMatrix b = oracle::random_matrix(70, 30, stream);
  const ComplexMatrix c = oracle::random_matrix(50, 30, stream);
  const Complex alpha{0.7, -0.3};
  const Complex beta{-1.1, 0.2};

  const ComplexMatrix untiled = linalg::gemm(alpha, a, b, beta, c);
  const ComplexMatrix t1 = linalg::gemm_tiled(alpha, a, b, beta, c, 1);
  const ComplexMatrix t64 = linalg::gemm_tiled(alpha, a, b, beta, c, 64);
  CHECK(t1.bitwise_equal(t64));
  CHECK(t1.bitwise_equal(untiled));
  // tile >= max(m, n, k): a single tile covering the whole output.
  CHECK(linalg::gemm_tiled(alpha, a, b, beta, c, 70).bitwise_equal(untiled));
}

TEST_CASE("gemm_tiled tile sweep against the oracle") {
  auto stream = rng::derive_stream({42, 3});
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + stream.uniform_index(40);
    const std::size_t n = 1 + stream.uniform_index(40);
    const std::size_t k = 1 + stream.uniform_index(40);
    const ComplexMatrix a = oracle::random_matrix(m, k, stream);
    const ComplexMatrix b = oracle::random_matrix(k, n, stream);
    const ComplexMatrix c = oracle::random_matrix(m, n, stream);
    const Complex alpha{1.5, 0.25};
    const Complex beta{0.5, -0.75};
    const ComplexMatrix want = oracle::naive_gemm(alpha, a, b, beta, c);
    for (std::size_t tile : {1, 2, 3, 8, 17}) {
      const ComplexMatrix got = linalg::gemm_tiled(alpha, a, b, beta, c, tile);
      CHECK(oracle::max_relative_error(got, want) <= 1e-13);
    }
  }
}

TEST_CASE("gemm associativity up to roundoff") {
  auto stream = rng::derive_stream({42, 4});
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + stream.uniform_index(32);
    const std::size_t k = 1 + stream.uniform_index(32);
    const std::size_t n = 1 + stream.uniform_index(32);
    const std::size_t p = 1 + stream.uniform_index(32);
    const ComplexMatrix a = oracle::random_matrix(m, k, stream);
    const ComplexMatrix b = oracle::random_matrix(k, n, stream);
    const ComplexMatrix c = oracle::random_matrix(n, p, stream);
    const Complex one{1.0, 0.0};
    const Complex zero{0.0, 0.0};
    const ComplexMatrix ab = linalg::gemm(one, a, b, zero, ComplexMatrix::zeros(m, n));
    const ComplexMatrix bc = linalg::gemm(one, b, c, zero, ComplexMatrix::zeros(k, p));
    const ComplexMatrix left = linalg::gemm(one, ab, c, zero, ComplexMatrix::zeros(m, p));
    const ComplexMatrix right = linalg::gemm(one, a, bc, zero, ComplexMatrix::zeros(m, p));
    CHECK(oracle::max_relative_error(left, right) <= 1e-12);
  }
}

TEST_CASE("gemm yields finite outputs on finite inputs") {
  auto stream = rng::derive_stream({42, 5});
  const ComplexMatrix a = oracle::random_matrix(9, 11, stream);
  const ComplexMatrix b = oracle::random_matrix(11, 6, stream);
  const ComplexMatrix c = oracle::random_matrix(9, 6, stream);
  const ComplexMatrix out = linalg::gemm({2.5, -1.0}, a, b, {0.25, 3.0}, c);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    CHECK(std::isfinite(out.data()[idx].real()));
    CHECK(std::isfinite(out.data()[idx].imag()));
  }
}

TEST_CASE("hermitian_eigenvalues on analytic matrices") {
  ComplexMatrix diag(3, 3);
  diag(0, 0) = Complex{3.0, 0.0};
  diag(1, 1) = Complex{1.0, 0.0};
  diag(2, 2) = Complex{2.0, 0.0};
  const auto eig = linalg::hermitian_eigenvalues(diag);
  REQUIRE(eig.size() == 3);
  CHECK(eig[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eig[2] == doctest::Approx(3.0).epsilon(1e-12));

  ComplexMatrix pauli_x(2, 2);
  pauli_x(0, 1) = Complex{1.0, 0.0};
  pauli_x(1, 0) = Complex{1.0, 0.0};
  const auto xe = linalg::hermitian_eigenvalues(pauli_x);
  REQUIRE(xe.size() == 2);
  CHECK(xe[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(xe[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hermitian_eigenvalues matches characteristic-polynomial bisection") {
  auto stream = rng::derive_stream({42, 6});
  for (int trial = 0; trial < 4; ++trial) {
    const ComplexMatrix h = random_hermitian(5, stream);
    const auto got = linalg::hermitian_eigenvalues(h);
    const auto want = bisection_eigenvalues(h);
    REQUIRE(want.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(std::abs(got[i] - want[i]) <= 1e-10);
    }
  }
}

TEST_CASE("hermitian_eigenvalues trace and norm identities") {
  auto stream = rng::derive_stream({42, 7});
  for (std::size_t n : {2, 6, 12}) {
    const ComplexMatrix h = random_hermitian(n, stream);
    const auto eig = linalg::hermitian_eigenvalues(h);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += h(i, i).real();
    double sum = 0.0, sum_sq = 0.0;
    for (double lambda : eig) {
      sum += lambda;
      sum_sq += lambda * lambda;
    }
    const double fro = linalg::frobenius_norm(h);
    CHECK(std::abs(sum - trace) <= 1e-11 * std::max(1.0, std::abs(trace)));
    CHECK(std::abs(sum_sq - fro * fro) <= 1e-10 * std::max(1.0, fro * fro));
  }
}

TEST_CASE("hermitian_eigenvalues precondition errors") {
  CHECK_THROWS_AS(linalg::hermitian_eigenvalues(ComplexMatrix(2, 3)), std::invalid_argument);
  ComplexMatrix not_hermitian(2, 2);
  not_hermitian(0, 1) = Complex{1.0, 0.0};
  not_hermitian(1, 0) = Complex{0.5, 0.0};
  CHECK_THROWS_WITH_AS(linalg::hermitian_eigenvalues(not_hermitian),
                       doctest::Contains("not Hermitian"), std::invalid_argument);
}

TEST_CASE("frobenius_norm") {
  CHECK(linalg::frobenius_norm(ComplexMatrix::zeros(4, 4)) == 0.0);
  CHECK(linalg::frobenius_norm(ComplexMatrix::identity(4)) == doctest::Approx(2.0));

  auto stream = rng::derive_stream({42, 8});
  const ComplexMatrix a = oracle::random_matrix(3, 3, stream);
  double sum = 0.0;
  for (std::size_t idx = 0; idx < a.size(); ++idx) sum += std::norm(a.data()[idx]);
  CHECK(linalg::frobenius_norm(a) == doctest::Approx(std::sqrt(sum)).epsilon(1e-14));
}

TEST_CASE("gemm_flops convention") {
  CHECK(linalg::gemm_flops(1, 1, 1) == 8);
  CHECK(linalg::gemm_flops(1024, 1024, 2048) == 17179869184ULL);
  CHECK(linalg::gemm_flops(2, 3, 4) == 192);
}

TEST_CASE("perturbation hook corrupts exactly the guarded path") {
  auto stream = rng::derive_stream({42, 9});
  const ComplexMatrix a = oracle::random_matrix(4, 4, stream);
  const ComplexMatrix b = oracle::random_matrix(4, 4, stream);
  const ComplexMatrix c = ComplexMatrix::zeros(4, 4);
  const ComplexMatrix clean = linalg::gemm({1, 0}, a, b, {0, 0}, c);
  linalg::testhooks::perturb_gemm = true;
  const ComplexMatrix dirty = linalg::gemm({1, 0}, a, b, {0, 0}, c);
  linalg::testhooks::perturb_gemm = false;
  CHECK_FALSE(clean.bitwise_equal(dirty));
  CHECK(linalg::gemm({1, 0}, a, b, {0, 0}, c).bitwise_equal(clean));
}
