#include "taskgemm/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace taskgemm::oracle {

using linalg::Complex;
using linalg::ComplexMatrix;

ComplexMatrix naive_gemm(Complex alpha, const ComplexMatrix& a, const ComplexMatrix& b,
                         Complex beta, const ComplexMatrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw std::invalid_argument("naive_gemm: dimension mismatch");
  }
  ComplexMatrix out(c.rows(), c.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Complex sum{0.0, 0.0};
      for (std::size_t k = 0; k < a.cols(); ++k) {
        sum += a(i, k) * b(k, j);
      }
      out(i, j) = alpha * sum + beta * c(i, j);
    }
  }
  return out;
}

ComplexMatrix reduced_density_direct(const spinmc::SpinChainState& state) {
  const auto dims = spinmc::dims_for_spins(state.spins);
  ComplexMatrix rho(dims.d_a, dims.d_a);
  for (std::size_t a1 = 0; a1 < dims.d_a; ++a1) {
    for (std::size_t a2 = 0; a2 < dims.d_a; ++a2) {
      Complex sum{0.0, 0.0};
      for (std::size_t b = 0; b < dims.d_b; ++b) {
        sum += state.amplitudes[a1 + b * dims.d_a] * std::conj(state.amplitudes[a2 + b * dims.d_a]);
      }
      rho(a1, a2) = sum;
    }
  }
  return rho;
}

std::vector<double> dense_hermitian_eigenvalues(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) {
    throw std::invalid_argument("dense_hermitian_eigenvalues: matrix must be square");
  }
  const auto n = static_cast<Eigen::Index>(h.rows());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i, j) = h(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("dense_hermitian_eigenvalues: eigensolver failed");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  return out;
}

double von_neumann_entropy_direct(const spinmc::SpinChainState& state) {
  double entropy = 0.0;
  for (double lambda : dense_hermitian_eigenvalues(reduced_density_direct(state))) {
    if (lambda > 0.0) entropy -= lambda * std::log(lambda);
  }
  return entropy;
}

double max_relative_error(const ComplexMatrix& got, const ComplexMatrix& want) {
  if (!got.same_shape(want)) {
    throw std::invalid_argument("max_relative_error: shape mismatch");
  }
  double max_abs_err = 0.0;
  double max_abs_want = 0.0;
  for (std::size_t idx = 0; idx < want.size(); ++idx) {
    max_abs_err = std::max(max_abs_err, std::abs(got.data()[idx] - want.data()[idx]));
    max_abs_want = std::max(max_abs_want, std::abs(want.data()[idx]));
  }
  if (max_abs_want == 0.0) return max_abs_err == 0.0 ? 0.0 : HUGE_VAL;
  return max_abs_err / max_abs_want;
}

ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, rng::RandomStream& stream) {
  ComplexMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      auto [re, im] = stream.standard_normal_pair();
      m(i, j) = Complex{re, im};
    }
  }
  return m;
}

}  // namespace taskgemm::oracle
