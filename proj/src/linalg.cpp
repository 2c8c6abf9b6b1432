#include "taskgemm/linalg.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace taskgemm::linalg {

namespace testhooks {
std::atomic<bool> perturb_gemm{false};
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Complex{0.0, 0.0}) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("ComplexMatrix: rows and cols must be >= 1, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("ComplexMatrix: rows and cols must be >= 1");
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("ComplexMatrix: data length " + std::to_string(data_.size()) +
                                " != rows*cols " + std::to_string(rows * cols));
  }
}

ComplexMatrix ComplexMatrix::zeros(std::size_t rows, std::size_t cols) {
  return ComplexMatrix(rows, cols);
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Complex{1.0, 0.0};
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) {
      out(j, i) = std::conj((*this)(i, j));
    }
  }
  return out;
}

bool ComplexMatrix::bitwise_equal(const ComplexMatrix& other) const {
  if (!same_shape(other)) return false;
  return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(Complex)) == 0;
}

namespace {

void check_gemm_dims(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("gemm: A.cols (" + std::to_string(a.cols()) + ") != B.rows (" +
                                std::to_string(b.rows()) + ")");
  }
  if (c.rows() != a.rows()) {
    throw std::invalid_argument("gemm: C.rows (" + std::to_string(c.rows()) + ") != A.rows (" +
                                std::to_string(a.rows()) + ")");
  }
  if (c.cols() != b.cols()) {
    throw std::invalid_argument("gemm: C.cols (" + std::to_string(c.cols()) + ") != B.cols (" +
                                std::to_string(b.cols()) + ")");
  }
}

// Computes out(i, j) = alpha * sum_k A(i,k)B(k,j) + beta * C(i,j) for the
// block [i0,i1) x [j0,j1). Single compiled instance shared by the plain and
// tiled entry points: both produce the same floating-point operation
// sequence per element, which is what makes tile size a bitwise no-op.
[[gnu::noinline]] void gemm_block(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b,
                                  Complex beta, const ComplexMatrix& c, ComplexMatrix& out,
                                  std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
  const std::size_t kdim = a.cols();
  const double ar_ = alpha.real(), ai_ = alpha.imag();
  const double br_ = beta.real(), bi_ = beta.imag();
  const bool perturb = testhooks::perturb_gemm.load(std::memory_order_relaxed);
  for (std::size_t j = j0; j < j1; ++j) {
    for (std::size_t i = i0; i < i1; ++i) {
      double sr = 0.0, si = 0.0;
      for (std::size_t k = 0; k < kdim; ++k) {
        const Complex& av = a(i, k);
        const Complex& bv = b(k, j);
        double tr = av.real() * bv.real() - av.imag() * bv.imag();
        double ti = av.real() * bv.imag() + av.imag() * bv.real();
        if (perturb && i == 0 && j == 0 && k == 0) tr = -tr;
        sr += tr;
        si += ti;
      }
      const Complex& cv = c(i, j);
      out(i, j) = Complex{ar_ * sr - ai_ * si + br_ * cv.real() - bi_ * cv.imag(),
                          ar_ * si + ai_ * sr + br_ * cv.imag() + bi_ * cv.real()};
    }
  }
}

}  // namespace

ComplexMatrix gemm(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b, Complex beta,
                   const ComplexMatrix& c) {
  check_gemm_dims(a, b, c);
  ComplexMatrix out(c.rows(), c.cols());
  gemm_block(alpha, a, b, beta, c, out, 0, a.rows(), 0, b.cols());
  return out;
}

ComplexMatrix gemm_tiled(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b,
                         Complex beta, const ComplexMatrix& c, std::size_t tile) {
  check_gemm_dims(a, b, c);
  if (tile < 1) throw std::invalid_argument("gemm_tiled: tile must be >= 1");
  const std::size_t m = a.rows(), n = b.cols();
  ComplexMatrix out(m, n);
  for (std::size_t j0 = 0; j0 < n; j0 += tile) {
    const std::size_t j1 = std::min(j0 + tile, n);
    for (std::size_t i0 = 0; i0 < m; i0 += tile) {
      const std::size_t i1 = std::min(i0 + tile, m);
      gemm_block(alpha, a, b, beta, c, out, i0, i1, j0, j1);
    }
  }
  return out;
}

double frobenius_norm(const ComplexMatrix& a) {
  double sum = 0.0;
  const Complex* p = a.data();
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    sum += p[idx].real() * p[idx].real() + p[idx].imag() * p[idx].imag();
  }
  return std::sqrt(sum);
}

std::uint64_t gemm_flops(std::size_t m, std::size_t n, std::size_t k) {
  if (m < 1 || n < 1 || k < 1) throw std::invalid_argument("gemm_flops: dims must be >= 1");
  return 8ULL * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n) *
         static_cast<std::uint64_t>(k);
}

namespace {

double off_diagonal_norm(const ComplexMatrix& h) {
  double sum = 0.0;
  for (std::size_t j = 0; j < h.cols(); ++j) {
    for (std::size_t i = 0; i < h.rows(); ++i) {
      if (i == j) continue;
      sum += std::norm(h(i, j));
    }
  }
  return std::sqrt(sum);
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  if (n != h.cols()) {
    throw std::invalid_argument("hermitian_eigenvalues: matrix must be square, got " +
                                std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
  }
  const double h_norm = frobenius_norm(h);
  double dev = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      dev += std::norm(h(i, j) - std::conj(h(j, i)));
    }
  }
  dev = std::sqrt(dev);
  if (dev > 1e-10 * h_norm) {
    throw std::invalid_argument("hermitian_eigenvalues: matrix is not Hermitian within "
                                "1e-10 relative tolerance (deviation " +
                                std::to_string(dev) + ")");
  }

  // Work on the Hermitian part so roundoff asymmetry cannot accumulate.
  ComplexMatrix w(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      w(i, j) = 0.5 * (h(i, j) + std::conj(h(j, i)));
    }
  }

  constexpr int kMaxSweeps = 30;
  const double target = 1e-12 * h_norm;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(w) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex beta = w(p, q);
        const double beta_abs = std::abs(beta);
        if (beta_abs == 0.0) continue;
        const Complex phase = beta / beta_abs;
        const double app = w(p, p).real();
        const double aqq = w(q, q).real();
        // Real symmetric 2x2 rotation after factoring out the phase of w(p,q).
        const double tau = (aqq - app) / (2.0 * beta_abs);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        // Columns p and q: G has g_pp = cs*phase, g_qp = -sn, g_pq = sn*phase, g_qq = cs.
        for (std::size_t i = 0; i < n; ++i) {
          const Complex wip = w(i, p);
          const Complex wiq = w(i, q);
          w(i, p) = cs * phase * wip - sn * wiq;
          w(i, q) = sn * phase * wip + cs * wiq;
        }
        // Rows p and q by Hermitian symmetry.
        for (std::size_t jj = 0; jj < n; ++jj) {
          w(p, jj) = std::conj(w(jj, p));
          w(q, jj) = std::conj(w(jj, q));
        }
        const double new_pp = app * cs * cs - 2.0 * beta_abs * cs * sn + aqq * sn * sn;
        const double new_qq = app * sn * sn + 2.0 * beta_abs * cs * sn + aqq * cs * cs;
        w(p, p) = Complex{new_pp, 0.0};
        w(q, q) = Complex{new_qq, 0.0};
        w(p, q) = Complex{0.0, 0.0};
        w(q, p) = Complex{0.0, 0.0};
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = w(i, i).real();
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace taskgemm::linalg
