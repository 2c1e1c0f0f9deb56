#include "unlearn/toeplitz.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "unlearn/errors.hpp"

namespace unlearn {

SymTriToeplitz::SymTriToeplitz(int d_, double a_) : d(d_), a(a_) {
    if (d < 1) throw std::invalid_argument("SymTriToeplitz: d must be >= 1");
    if (!(a >= 0.0 && a <= 0.5)) throw std::invalid_argument("SymTriToeplitz: a must lie in [0, 0.5]");
}

Eigen::VectorXd SymTriToeplitz::eigenvalues() const {
    Eigen::VectorXd lam(d);
    for (int i = 1; i <= d; ++i) {
        lam(i - 1) = 1.0 + 2.0 * a * std::cos(i * std::numbers::pi / (d + 1));
    }
    return lam;
}

Eigen::MatrixXd SymTriToeplitz::dense() const {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        T(i, i) = 1.0;
        if (i + 1 < d) {
            T(i, i + 1) = a;
            T(i + 1, i) = a;
        }
    }
    return T;
}

Eigen::VectorXd SymTriToeplitz::multiply(const Eigen::VectorXd& x) const {
    if (x.size() != d) throw std::invalid_argument("SymTriToeplitz::multiply: size mismatch");
    Eigen::VectorXd y(d);
    for (int i = 0; i < d; ++i) {
        double v = x(i);
        if (i > 0) v += a * x(i - 1);
        if (i + 1 < d) v += a * x(i + 1);
        y(i) = v;
    }
    return y;
}

Eigen::MatrixXd sine_basis(int d) {
    if (d < 1) throw std::invalid_argument("sine_basis: d must be >= 1");
    Eigen::MatrixXd Q(d, d);
    const double norm = std::sqrt(2.0 / (d + 1));
    for (int i = 1; i <= d; ++i) {
        for (int j = 1; j <= d; ++j) {
            Q(i - 1, j - 1) = norm * std::sin(static_cast<double>(i) * j * std::numbers::pi / (d + 1));
        }
    }
    return Q;
}

Eigen::VectorXd toeplitz_cosines(int d) {
    Eigen::VectorXd c(d);
    for (int i = 1; i <= d; ++i) c(i - 1) = std::cos(i * std::numbers::pi / (d + 1));
    return c;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> toeplitz_eigensystem(int d, double a) {
    SymTriToeplitz T(d, a);
    return {sine_basis(d), T.eigenvalues()};
}

Eigen::VectorXd toeplitz_apply(int d, double a, int power, const Eigen::VectorXd& x) {
    SymTriToeplitz T(d, a);
    if (x.size() != d) throw std::invalid_argument("toeplitz_apply: size mismatch");
    if (power == 0) return x;
    const Eigen::VectorXd lam = T.eigenvalues();
    if (power < 0) {
        for (int i = 0; i < d; ++i) {
            if (lam(i) < 1e-10) {
                throw numeric_error("toeplitz_apply: eigenvalue " + std::to_string(i + 1) + " = " +
                                    std::to_string(lam(i)) + " too small to invert");
            }
        }
    }
    const Eigen::MatrixXd Q = sine_basis(d);
    Eigen::VectorXd u = Q * x;
    for (int i = 0; i < d; ++i) u(i) *= std::pow(lam(i), power);
    return Q * u;
}

}  // namespace unlearn
