#include "jtprobe/hilbert.hpp"

namespace jt {

QuantumState QuantumState::pure(HilbertSpace sp, Eigen::VectorXcd psi) {
    if (psi.size() != sp.dim())
        throw ShapeError("QuantumState::pure: vector does not match space");
    double n = psi.norm();
    if (!(n > 0.0))
        throw NumericalError("QuantumState::pure: zero-norm vector");
    QuantumState s;
    s.space = sp;
    s.kind = StateKind::PureVector;
    s.vec = psi / n;
    return s;
}

QuantumState QuantumState::density(HilbertSpace sp, Eigen::MatrixXcd rho) {
    if (rho.rows() != sp.dim() || rho.cols() != sp.dim())
        throw ShapeError("QuantumState::density: matrix does not match space");
    double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10)
        throw NumericalError("QuantumState::density: not Hermitian within 1e-10");
    Complex tr = rho.trace();
    if (std::abs(tr.imag()) > 1e-10 || !(tr.real() > 0.0))
        throw NumericalError("QuantumState::density: invalid trace");
    QuantumState s;
    s.space = sp;
    s.kind = StateKind::DensityMatrix;
    s.mat = rho / tr.real();
    return s;
}

QuantumState QuantumState::vacuum(HilbertSpace sp) { return fock(sp, 0, 0, 0); }

QuantumState QuantumState::fock(HilbertSpace sp, int spin, int jx, int jy) {
    if (spin < 0 || spin > 1 || jx < 0 || jx >= sp.n_x || jy < 0 || jy >= sp.n_y)
        throw ShapeError("QuantumState::fock: index out of range");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(sp.dim());
    psi(sp.index(spin, jx, jy)) = 1.0;
    return pure(sp, std::move(psi));
}

QuantumState QuantumState::product(HilbertSpace sp, const Eigen::Vector2cd& spin,
                                   const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    if (x.size() > sp.n_x || y.size() > sp.n_y)
        throw ShapeError("QuantumState::product: factor exceeds cutoff");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(sp.dim());
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < x.size(); ++jx)
            for (int jy = 0; jy < y.size(); ++jy)
                psi(sp.index(s, jx, jy)) = spin(s) * x(jx) * y(jy);
    return pure(sp, std::move(psi));
}

QuantumState QuantumState::to_density() const {
    if (kind == StateKind::DensityMatrix) return *this;
    return density(space, vec * vec.adjoint());
}

double QuantumState::norm_or_trace() const {
    if (kind == StateKind::PureVector) return vec.norm();
    return mat.trace().real();
}

}  // namespace jt
