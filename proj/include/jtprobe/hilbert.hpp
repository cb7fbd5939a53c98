#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jt {

using Complex = std::complex<double>;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidCutoff : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coupling at or above the point where a closed-form expression stops
/// being real. Carries the offending value.
struct SupercriticalError : std::domain_error {
    double lambda_value;
    SupercriticalError(const std::string& what, double lam)
        : std::domain_error(what), lambda_value(lam) {}
};

struct CriticalityError : std::domain_error {
    double lambda_value;
    double lambda_c;
    CriticalityError(const std::string& what, double lam, double lam_c)
        : std::domain_error(what), lambda_value(lam), lambda_c(lam_c) {}
};

/// Truncated spin (x) boson (x) boson space. Basis ordering is fixed
/// globally: index = spin * n_x*n_y + j_x * n_y + j_y, with spin index 0
/// being |up> (sigma_z |up> = +|up>). Every module depends on this order.
struct HilbertSpace {
    int n_x = 0;  ///< Fock levels kept in mode x (0 .. n_x-1)
    int n_y = 0;

    HilbertSpace() = default;
    HilbertSpace(int nx, int ny) : n_x(nx), n_y(ny) {
        if (nx < 2 || ny < 2)
            throw InvalidCutoff("HilbertSpace: Fock cutoffs must be >= 2, got n_x=" +
                                std::to_string(nx) + " n_y=" + std::to_string(ny));
    }

    int boson_dim() const noexcept { return n_x * n_y; }
    int dim() const noexcept { return 2 * n_x * n_y; }
    int index(int spin, int jx, int jy) const noexcept {
        return (spin * n_x + jx) * n_y + jy;
    }
    bool operator==(const HilbertSpace&) const = default;
};

/// Dense operator on the composite space.
struct Operator {
    HilbertSpace space;
    Eigen::MatrixXcd matrix;

    Operator() = default;
    Operator(HilbertSpace sp, Eigen::MatrixXcd m) : space(sp), matrix(std::move(m)) {
        if (matrix.rows() != space.dim() || matrix.cols() != space.dim())
            throw ShapeError("Operator: matrix does not match space dimension");
    }

    Operator adjoint() const { return Operator(space, matrix.adjoint()); }

    double hermiticity_error() const {
        return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    }
    bool is_hermitian(double tol = 1e-12) const { return hermiticity_error() < tol; }
};

inline void require_same_space(const Operator& a, const Operator& b, const char* op) {
    if (!(a.space == b.space))
        throw ShapeError(std::string("Operator ") + op + ": space mismatch");
}

inline Operator operator+(const Operator& a, const Operator& b) {
    require_same_space(a, b, "+");
    return Operator(a.space, a.matrix + b.matrix);
}
inline Operator operator-(const Operator& a, const Operator& b) {
    require_same_space(a, b, "-");
    return Operator(a.space, a.matrix - b.matrix);
}
inline Operator operator*(const Operator& a, const Operator& b) {
    require_same_space(a, b, "*");
    return Operator(a.space, a.matrix * b.matrix);
}
inline Operator operator*(Complex c, const Operator& a) {
    return Operator(a.space, c * a.matrix);
}
inline Operator operator*(double c, const Operator& a) {
    return Operator(a.space, c * a.matrix);
}

inline Operator commutator(const Operator& a, const Operator& b) {
    require_same_space(a, b, "commutator");
    return Operator(a.space, a.matrix * b.matrix - b.matrix * a.matrix);
}

enum class StateKind { PureVector, DensityMatrix };

/// Pure state vector or density matrix with norm/trace bookkeeping.
struct QuantumState {
    HilbertSpace space;
    StateKind kind = StateKind::PureVector;
    Eigen::VectorXcd vec;  // valid when kind == PureVector
    Eigen::MatrixXcd mat;  // valid when kind == DensityMatrix

    static QuantumState pure(HilbertSpace sp, Eigen::VectorXcd psi);
    static QuantumState density(HilbertSpace sp, Eigen::MatrixXcd rho);

    /// |up> (x) |0_x> (x) |0_y>
    static QuantumState vacuum(HilbertSpace sp);
    static QuantumState fock(HilbertSpace sp, int spin, int jx, int jy);
    /// Product state from factor amplitudes, normalized.
    static QuantumState product(HilbertSpace sp, const Eigen::Vector2cd& spin,
                                const Eigen::VectorXcd& x, const Eigen::VectorXcd& y);

    QuantumState to_density() const;

    /// <psi|psi> for pure states, Tr(rho) for density matrices.
    double norm_or_trace() const;
};

}  // namespace jt
