#ifndef TASKGEMM_LINALG_HPP
#define TASKGEMM_LINALG_HPP

#include <atomic>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace taskgemm::linalg {

using Complex = std::complex<double>;

/// Dense complex matrix, column-major: element (i, j) lives at data[i + j*rows].
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data);

  static ComplexMatrix zeros(std::size_t rows, std::size_t cols);
  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  Complex& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

  Complex* data() { return data_.data(); }
  const Complex* data() const { return data_.data(); }

  /// Conjugate transpose (new matrix).
  ComplexMatrix adjoint() const;

  bool same_shape(const ComplexMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  /// Bitwise equality of shape and every element.
  bool bitwise_equal(const ComplexMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

/// C' = alpha*A*B + beta*C.
///
/// The inner sum over k is accumulated in ascending-k order with one
/// accumulator per output element, so the result is a deterministic function
/// of the inputs alone — independent of tiling and of which executor runs it.
ComplexMatrix gemm(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b,
                   Complex beta, const ComplexMatrix& c);

/// Same contract as gemm; the output is computed tile-by-tile over a 2D grid
/// of `tile`-sized blocks of C. Bitwise-identical to gemm for every tile size.
ComplexMatrix gemm_tiled(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b,
                         Complex beta, const ComplexMatrix& c, std::size_t tile);

/// Eigenvalues (ascending) of the Hermitian part of H, by cyclic Jacobi
/// rotations on the 2x2 Hermitian subproblems. Converges when the
/// off-diagonal Frobenius norm falls below 1e-12 * ||H||_F, capped at 30
/// sweeps. H must be square and Hermitian within 1e-10 * ||H||_F.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h);

/// sqrt(sum |a_ij|^2).
double frobenius_norm(const ComplexMatrix& a);

/// Real flops of one complex GEMM: 8*m*n*k (complex multiply-add = 8 real ops).
std::uint64_t gemm_flops(std::size_t m, std::size_t n, std::size_t k);

namespace testhooks {
/// When set, gemm flips the sign of the first accumulation term of element
/// (0,0). Exists only so verification suites can prove they catch a broken
/// kernel; never set outside tests.
extern std::atomic<bool> perturb_gemm;
}  // namespace testhooks

}  // namespace taskgemm::linalg

#endif
