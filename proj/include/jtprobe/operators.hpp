#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "jtprobe/hilbert.hpp"

namespace jt {

/// Annihilation operator on an n-level truncation: entries sqrt(k) at
/// (k-1, k). [a, a^dag] = 1 holds on the subspace excluding the top level.
Eigen::MatrixXcd destroy(int n);

enum class PauliAxis { X, Y, Z };

/// Standard 2x2 Pauli matrix; |up> = index 0 with sigma_z|up> = +|up>.
Eigen::MatrixXcd pauli(PauliAxis axis);

/// Kronecker product in the fixed order spin (x) mode-x (x) mode-y.
/// Pass identity factors by giving a matrix of the right size (see
/// identity_factor) or use the convenience overload with empty matrices.
Operator embed(const Eigen::MatrixXcd& spin_part, const Eigen::MatrixXcd& x_part,
               const Eigen::MatrixXcd& y_part, const HilbertSpace& space);

/// Same Kronecker embedding but produced directly in sparse form; used by
/// the time stepper where dense storage would be wasteful.
Eigen::SparseMatrix<Complex> embed_sparse(const Eigen::MatrixXcd& spin_part,
                                          const Eigen::MatrixXcd& x_part,
                                          const Eigen::MatrixXcd& y_part,
                                          const HilbertSpace& space);

/// <psi|A|psi> or Tr(rho A).
Complex expectation(const QuantumState& state, const Operator& op);

/// Expectation of a Hermitian observable; the imaginary part must be
/// below tol (absolute, relative to scale) and is dropped.
double real_expectation(const QuantumState& state, const Operator& op,
                        double tol = 1e-8);

}  // namespace jt
