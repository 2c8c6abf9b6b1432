#ifndef TASKGEMM_ORACLE_HPP
#define TASKGEMM_ORACLE_HPP

#include <vector>

#include "taskgemm/linalg.hpp"
#include "taskgemm/rng.hpp"
#include "taskgemm/spinmc.hpp"

// Independent reference implementations used only by tests and the `verify`
// command. Nothing here shares code with the implementation paths it checks.
namespace taskgemm::oracle {

/// Plain triple-loop C' = alpha*A*B + beta*C.
linalg::ComplexMatrix naive_gemm(linalg::Complex alpha, const linalg::ComplexMatrix& a,
                                 const linalg::ComplexMatrix& b, linalg::Complex beta,
                                 const linalg::ComplexMatrix& c);

/// Reduced density matrix of subsystem A by direct index summation:
/// rho[a1, a2] = sum_b psi[a1 + b*d_a] * conj(psi[a2 + b*d_a]).
linalg::ComplexMatrix reduced_density_direct(const spinmc::SpinChainState& state);

/// Ascending eigenvalues through Eigen's SelfAdjointEigenSolver.
std::vector<double> dense_hermitian_eigenvalues(const linalg::ComplexMatrix& h);

/// Von Neumann entropy from the two routines above (no GEMM, no Jacobi).
double von_neumann_entropy_direct(const spinmc::SpinChainState& state);

/// max_ij |got_ij - want_ij| / max_ij |want_ij| (0 for identical zero inputs).
double max_relative_error(const linalg::ComplexMatrix& got, const linalg::ComplexMatrix& want);

/// Matrix with i.i.d. standard complex Gaussian entries.
linalg::ComplexMatrix random_matrix(std::size_t rows, std::size_t cols,
                                    rng::RandomStream& stream);

}  // namespace taskgemm::oracle

#endif
