#include "jtprobe/operators.hpp"

#include <cmath>

namespace jt {

Eigen::MatrixXcd destroy(int n) {
    if (n < 2) throw InvalidCutoff("destroy: cutoff must be >= 2");
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

Eigen::MatrixXcd pauli(PauliAxis axis) {
    Eigen::MatrixXcd s(2, 2);
    const Complex i(0.0, 1.0);
    switch (axis) {
        case PauliAxis::X: s << 0, 1, 1, 0; break;
        case PauliAxis::Y: s << 0, -i, i, 0; break;
        case PauliAxis::Z: s << 1, 0, 0, -1; break;
    }
    return s;
}

namespace {

void check_factors(const Eigen::MatrixXcd& spin_part, const Eigen::MatrixXcd& x_part,
                   const Eigen::MatrixXcd& y_part, const HilbertSpace& space) {
    if (spin_part.rows() != 2 || spin_part.cols() != 2)
        throw ShapeError("embed: spin factor must be 2x2");
    if (x_part.rows() != space.n_x || x_part.cols() != space.n_x)
        throw ShapeError("embed: x factor does not match cutoff n_x");
    if (y_part.rows() != space.n_y || y_part.cols() != space.n_y)
        throw ShapeError("embed: y factor does not match cutoff n_y");
}

}  // namespace

Operator embed(const Eigen::MatrixXcd& spin_part, const Eigen::MatrixXcd& x_part,
               const Eigen::MatrixXcd& y_part, const HilbertSpace& space) {
    check_factors(spin_part, x_part, y_part, space);
    const int d = space.dim();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            if (spin_part(s, t) == Complex(0, 0)) continue;
            for (int jx = 0; jx < space.n_x; ++jx)
                for (int kx = 0; kx < space.n_x; ++kx) {
                    Complex c = spin_part(s, t) * x_part(jx, kx);
                    if (c == Complex(0, 0)) continue;
                    out.block(space.index(s, jx, 0), space.index(t, kx, 0), space.n_y,
                              space.n_y) += c * y_part;
                }
        }
    return Operator(space, std::move(out));
}

Eigen::SparseMatrix<Complex> embed_sparse(const Eigen::MatrixXcd& spin_part,
                                          const Eigen::MatrixXcd& x_part,
                                          const Eigen::MatrixXcd& y_part,
                                          const HilbertSpace& space) {
    check_factors(spin_part, x_part, y_part, space);
    std::vector<Eigen::Triplet<Complex>> trips;
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            if (spin_part(s, t) == Complex(0, 0)) continue;
            for (int jx = 0; jx < space.n_x; ++jx)
                for (int kx = 0; kx < space.n_x; ++kx) {
                    Complex cx = spin_part(s, t) * x_part(jx, kx);
                    if (cx == Complex(0, 0)) continue;
                    for (int jy = 0; jy < space.n_y; ++jy)
                        for (int ky = 0; ky < space.n_y; ++ky) {
                            Complex c = cx * y_part(jy, ky);
                            if (c == Complex(0, 0)) continue;
                            trips.emplace_back(space.index(s, jx, jy),
                                               space.index(t, kx, ky), c);
                        }
                }
        }
    Eigen::SparseMatrix<Complex> out(space.dim(), space.dim());
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

Complex expectation(const QuantumState& state, const Operator& op) {
    if (!(state.space == op.space))
        throw ShapeError("expectation: state and operator spaces differ");
    if (state.kind == StateKind::PureVector)
        return state.vec.dot(op.matrix * state.vec);  // <psi|A|psi>
    return (op.matrix * state.mat).trace();
}

double real_expectation(const QuantumState& state, const Operator& op, double tol) {
    Complex v = expectation(state, op);
    double scale = std::max(1.0, std::abs(v.real()));
    if (std::abs(v.imag()) > tol * scale)
        throw NumericalError("real_expectation: imaginary part " +
                             std::to_string(v.imag()) + " exceeds tolerance");
    return v.real();
}

}  // namespace jt
