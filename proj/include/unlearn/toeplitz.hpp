#pragma once

#include <Eigen/Dense>

namespace unlearn {

// Symmetric tridiagonal Toeplitz T(d; a, 1, a): ones on the diagonal, a on
// both off-diagonals, a in [0, 0.5]. Closed-form eigensystem in the sine
// basis: Q_{ij} = sqrt(2/(d+1)) sin(ij pi/(d+1)) (symmetric, orthogonal,
// shared by every a), eigenvalues 1 + 2a cos(i pi/(d+1)), i = 1..d.

struct SymTriToeplitz {
    int d = 0;
    double a = 0.0;

    SymTriToeplitz(int d_, double a_);

    Eigen::VectorXd eigenvalues() const;
    Eigen::MatrixXd dense() const;

    // y = T x via the banded structure (no basis round-trip).
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
};

// The shared sine eigenbasis for dimension d.
Eigen::MatrixXd sine_basis(int d);

// cos(i pi / (d+1)), i = 1..d -- the eigenvalue cosines.
Eigen::VectorXd toeplitz_cosines(int d);

// (Q, lambda) for T(d; a, 1, a).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> toeplitz_eigensystem(int d, double a);

// Q diag(lambda^power) Q x; power may be negative, in which case all
// eigenvalues must stay above 1e-10 (throws numeric_error naming the
// offending eigenvalue otherwise). power == 0 returns x unchanged.
Eigen::VectorXd toeplitz_apply(int d, double a, int power, const Eigen::VectorXd& x);

}  // namespace unlearn
