#pragma once

#include <Eigen/Dense>

#include "superwave/lattice.hpp"

namespace superwave {

// Solves (A + s I) x = b for many scalar shifts s with one O(n^3) reduction.
// A = Q H Q^* with H upper Hessenberg; each shifted solve is then an O(n^2)
// Hessenberg elimination with adjacent-row pivoting.
class ShiftedSolver {
public:
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    explicit ShiftedSolver(const Eigen::MatrixXcd& a);

    int size() const { return static_cast<int>(h_.rows()); }

    // Q^* b and Q y; callers that solve the same right-hand side for many
    // shifts transform once and stay in the Hessenberg basis.
    Eigen::VectorXcd to_reduced(const Eigen::VectorXcd& b) const;
    Eigen::VectorXcd from_reduced(const Eigen::VectorXcd& y) const;

    // (H + s I)^{-1} y. Throws SingularMatrixError on a zero pivot.
    Eigen::VectorXcd solve_reduced(cplx shift, const Eigen::VectorXcd& y) const;

    Eigen::VectorXcd solve(cplx shift, const Eigen::VectorXcd& b) const {
        return from_reduced(solve_reduced(shift, to_reduced(b)));
    }

    const RowMajor& hessenberg() const { return h_; }

private:
    RowMajor h_;
    Eigen::HessenbergDecomposition<Eigen::MatrixXcd> decomposition_;
};

}  // namespace superwave
