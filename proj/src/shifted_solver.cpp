#include "superwave/shifted_solver.hpp"

#include <cmath>
#include <limits>

#include "superwave/errors.hpp"

namespace superwave {

ShiftedSolver::ShiftedSolver(const Eigen::MatrixXcd& a) : decomposition_(a) {
    if (a.rows() != a.cols()) throw ValidationError("ShiftedSolver needs a square matrix");
    h_ = decomposition_.matrixH();
}

Eigen::VectorXcd ShiftedSolver::to_reduced(const Eigen::VectorXcd& b) const {
    return decomposition_.matrixQ().adjoint() * b;
}

Eigen::VectorXcd ShiftedSolver::from_reduced(const Eigen::VectorXcd& y) const {
    return decomposition_.matrixQ() * y;
}

Eigen::VectorXcd ShiftedSolver::solve_reduced(cplx shift, const Eigen::VectorXcd& y) const {
    const Eigen::Index n = h_.rows();
    if (y.size() != n) throw ValidationError("right-hand side has the wrong length");
    RowMajor u = h_;
    u.diagonal().array() += shift;
    Eigen::VectorXcd x = y;

    const double scale = u.cwiseAbs().maxCoeff();
    const double tiny = std::numeric_limits<double>::epsilon() * (scale > 0.0 ? scale : 1.0);

    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const Eigen::Index len = n - k;
        if (std::abs(u(k + 1, k)) > std::abs(u(k, k))) {
            u.row(k).tail(len).swap(u.row(k + 1).tail(len));
            std::swap(x(k), x(k + 1));
        }
        if (std::abs(u(k, k)) <= tiny) throw SingularMatrixError("zero pivot in shifted Hessenberg solve");
        const cplx l = u(k + 1, k) / u(k, k);
        if (l != cplx{}) {
            u.row(k + 1).tail(len) -= l * u.row(k).tail(len);
            x(k + 1) -= l * x(k);
        }
    }
    if (n > 0 && std::abs(u(n - 1, n - 1)) <= tiny)
        throw SingularMatrixError("zero pivot in shifted Hessenberg solve");

    for (Eigen::Index i = n - 1; i >= 0; --i) {
        cplx acc = x(i);
        const Eigen::Index len = n - i - 1;
        if (len > 0) acc -= u.row(i).tail(len).transpose().cwiseProduct(x.tail(len)).sum();
        x(i) = acc / u(i, i);
    }
    return x;
}

}  // namespace superwave
