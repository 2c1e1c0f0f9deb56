#include "unlearn/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "unlearn/errors.hpp"
#include "unlearn/parallel.hpp"
#include "unlearn/toeplitz.hpp"

namespace unlearn {

namespace {

constexpr double kExpCap = 700.0;  // exp() overflow guard; bounds get clamped anyway

double cap_exp(double e) { return std::exp(std::min(e, kExpCap)); }

void check_conditioning(const Eigen::VectorXd& lm, const char* which) {
    for (int i = 0; i < lm.size(); ++i) {
        if (lm(i) < 1e-10) {
            throw numeric_error(std::string("quadratic_boundary: ") + which + " eigenvalue " +
                                std::to_string(i + 1) + " = " + std::to_string(lm(i)) + " not invertible");
        }
    }
}

}  // namespace

MixtureSpec::MixtureSpec(int d_, Eigen::VectorXd mu_) : d(d_), mu(std::move(mu_)) {
    if (d < 1) throw std::invalid_argument("MixtureSpec: d must be >= 1");
    if (mu.size() != d) throw std::invalid_argument("MixtureSpec: mu size mismatch");
    if (!mu.allFinite()) throw std::invalid_argument("MixtureSpec: mu must be finite");
}

MixtureSampler::MixtureSampler(MixtureSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {}

void MixtureSampler::draw(Eigen::MatrixXd& X, Eigen::VectorXi& y, int row, int count) {
    for (int i = 0; i < count; ++i) {
        const int label = rng_.uniform() < 0.5 ? -1 : 1;
        y(row + i) = label;
        for (int j = 0; j < spec_.d; ++j) {
            X(row + i, j) = label * spec_.mu(j) + rng_.normal();
        }
    }
}

std::pair<Eigen::MatrixXd, Eigen::VectorXi> sample_mixture(const MixtureSpec& spec, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_mixture: n must be >= 0");
    Eigen::MatrixXd X(n, spec.d);
    Eigen::VectorXi y(n);
    MixtureSampler sampler(spec, seed);
    sampler.draw(X, y, 0, n);
    return {std::move(X), std::move(y)};
}

double clean_bayes_accuracy(const Eigen::VectorXd& mu) {
    return 0.5 * std::erfc(-mu.norm() / std::numbers::sqrt2);
}

double QuadraticBoundary::score(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd u = Q * x;
    return u.cwiseProduct(lam.cwiseProduct(u)).sum() + b_hat.dot(u) + c;
}

QuadraticBoundary quadratic_boundary(const Eigen::VectorXd& mu, double a_minus, double a_plus) {
    const int d = static_cast<int>(mu.size());
    if (d < 1) throw std::invalid_argument("quadratic_boundary: empty mu");
    if (!(a_minus >= 0.0 && a_minus <= 0.5) || !(a_plus >= 0.0 && a_plus <= 0.5))
        throw std::invalid_argument("quadratic_boundary: a parameters must lie in [0, 0.5]");
    QuadraticBoundary qb;
    qb.d = d;
    qb.a_minus = a_minus;
    qb.a_plus = a_plus;
    qb.mu = mu;
    qb.Q = sine_basis(d);
    qb.mu_hat = qb.Q * mu;
    const Eigen::VectorXd cosines = toeplitz_cosines(d);
    Eigen::VectorXd lm = Eigen::VectorXd::Ones(d) + 2.0 * a_minus * cosines;
    Eigen::VectorXd lp = Eigen::VectorXd::Ones(d) + 2.0 * a_plus * cosines;
    check_conditioning(lm, "A_{-1}");
    check_conditioning(lp, "A_{+1}");
    qb.lam.resize(d);
    qb.b_hat.resize(d);
    double c = 0.0;
    for (int i = 0; i < d; ++i) {
        qb.lam(i) = 1.0 / (lm(i) * lm(i)) - 1.0 / (lp(i) * lp(i));
        qb.b_hat(i) = 2.0 * (1.0 / lm(i) + 1.0 / lp(i)) * qb.mu_hat(i);
        c += std::log(lm(i)) - std::log(lp(i));
    }
    qb.c = 2.0 * c;
    return qb;
}

void poison_points(Eigen::MatrixXd& points, const Eigen::VectorXi& labels, double a_minus, double a_plus) {
    if (points.rows() != labels.size()) throw std::invalid_argument("poison_points: size mismatch");
    const int d = static_cast<int>(points.cols());
    for (int i = 0; i < points.rows(); ++i) {
        const double a = labels(i) < 0 ? a_minus : a_plus;
        points.row(i) = toeplitz_apply(d, a, 1, points.row(i).transpose()).transpose();
    }
}

McResult mc_clean_accuracy(const QuadraticBoundary& boundary, const Eigen::VectorXd& mu, int n,
                           std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("mc_clean_accuracy: n must be positive");
    if (mu.size() != boundary.d) throw std::invalid_argument("mc_clean_accuracy: mu size mismatch");
    MixtureSampler sampler(MixtureSpec(boundary.d, mu), seed);
    const int chunk = 4096;
    Eigen::MatrixXd X(std::min(n, chunk), boundary.d);
    Eigen::VectorXi y(std::min(n, chunk));
    long correct = 0;
    for (int done = 0; done < n;) {
        const int take = std::min(chunk, n - done);
        sampler.draw(X, y, 0, take);
        // u = Qx per row; Q is symmetric, so U = X * Q.
        const Eigen::MatrixXd U = X.topRows(take) * boundary.Q;
        for (int i = 0; i < take; ++i) {
            double s = boundary.c;
            for (int j = 0; j < boundary.d; ++j) {
                const double u = U(i, j);
                s += boundary.lam(j) * u * u + boundary.b_hat(j) * u;
            }
            const int pred = s >= 0.0 ? 1 : -1;
            if (pred == y(i)) ++correct;
        }
        done += take;
    }
    McResult r;
    r.estimate = static_cast<double>(correct) / n;
    r.se = std::sqrt(r.estimate * (1.0 - r.estimate) / n);
    return r;
}

double chernoff_tail(const Eigen::VectorXd& lam, const Eigen::VectorXd& b, double gamma, double t) {
    if (t < 0.0) throw std::invalid_argument("chernoff_tail: t must be >= 0");
    const double nrm = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
    double logdet_half = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        const double f = 1.0 - 2.0 * t * lam(i);
        if (f <= 0.0) {
            throw numeric_error("chernoff_tail: infeasible t, 1-2t*lambda_" + std::to_string(i + 1) + " = " +
                                std::to_string(f));
        }
        logdet_half += 0.5 * std::log(f);
    }
    const double bn = b.norm();
    const double first = bn * nrm > 0.0 ? t / (4.0 * bn * bn * nrm) : 0.0;
    const double expo = -first - t * (gamma + lam.sum() + bn) - logdet_half;
    return cap_exp(expo);
}

std::vector<double> default_t_grid() {
    return {2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
}

namespace {

// Exact log moment factor E[exp(t(z' diag(lam) z + u'z + kappa))] for
// z ~ N(0, I): t*kappa + sum_i [ t^2 u_i^2 / (2 f_i) - (1/2) ln f_i ],
// f_i = 1 - 2 t lam_i; requires all f_i > 0.
bool exact_chernoff_exponent(const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double kappa, double t,
                             double* out) {
    double e = t * kappa;
    for (int i = 0; i < lam.size(); ++i) {
        const double f = 1.0 - 2.0 * t * lam(i);
        if (f <= 0.0) return false;
        e += 0.5 * t * t * u(i) * u(i) / f - 0.5 * std::log(f);
    }
    *out = e;
    return true;
}

// Printed-form exponent: t*(kappa - q) - (1/2) sum ln(1 - 2 t lam);
// q is the 1/(4 ||.|| ||Lam||) term, already evaluated by the caller.
bool printed_exponent(const Eigen::VectorXd& lam, double kappa, double q, double t, double* out) {
    double logdet_half = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        const double f = 1.0 - 2.0 * t * lam(i);
        if (f <= 0.0) return false;
        logdet_half += 0.5 * std::log(f);
    }
    *out = t * (kappa - q) - logdet_half;
    return true;
}

}  // namespace

BoundResult theorem_bound(const QuadraticBoundary& qb, const std::vector<double>& t_grid) {
    BoundResult r;
    const Eigen::VectorXd& lam = qb.lam;
    const double nrm = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
    const double trL = lam.sum();
    const double btmu = qb.b_hat.dot(qb.mu_hat);
    const double muAmu = qb.mu_hat.cwiseProduct(lam.cwiseProduct(qb.mu_hat)).sum();
    const Eigen::VectorXd u1 = qb.b_hat + 2.0 * lam.cwiseProduct(qb.mu_hat);
    const Eigen::VectorXd u2 = 2.0 * lam.cwiseProduct(qb.mu_hat) - qb.b_hat;
    const double n1 = u1.norm(), n2 = u2.norm();
    r.gamma1 = -(trL + n1 + muAmu + btmu + qb.c);
    r.gamma2 = -(-trL + n2 - muAmu + btmu - qb.c);
    r.gamma1_pos = r.gamma1 > 0.0;
    r.gamma2_pos = r.gamma2 > 0.0;
    r.p1 = r.p2 = 0.5;
    r.t1 = r.t2 = 0.0;
    r.grid_feasible = false;
    r.bound = 1.0;
    if (nrm == 0.0) return r;  // degenerate a_minus == a_plus: vacuous by decision

    const double k1 = muAmu + btmu + qb.c;
    const double k2 = -muAmu + btmu - qb.c;
    const double q1_t2 = n1 * nrm > 0.0 ? 1.0 / (4.0 * n1 * nrm) : 0.0;
    const double q2_t2 = n2 * nrm > 0.0 ? 1.0 / (4.0 * n2 * nrm) : 0.0;
    const double q1_l5 = n1 * nrm > 0.0 ? 1.0 / (4.0 * n1 * n1 * nrm) : 0.0;
    const double q2_l5 = n2 * nrm > 0.0 ? 1.0 / (4.0 * n2 * n2 * nrm) : 0.0;

    bool feas1 = false, feas2 = false;
    double best1 = 0.0, best2 = 0.0;
    double d1_t2 = 0.0, d2_t2 = 0.0, d1_l5 = 0.0, d2_l5 = 0.0;
    bool any_printed = false;
    const Eigen::VectorXd neg_lam = -lam;
    for (double t : t_grid) {
        double e;
        if (exact_chernoff_exponent(lam, u1, k1, t, &e) && (!feas1 || e < best1)) {
            feas1 = true;
            best1 = e;
            r.t1 = t;
        }
        if (exact_chernoff_exponent(neg_lam, u2, k2, t, &e) && (!feas2 || e < best2)) {
            feas2 = true;
            best2 = e;
            r.t2 = t;
        }
        double e1, e2;
        if (printed_exponent(lam, k1, q1_t2, t, &e1) && printed_exponent(lam, k2, q2_t2, t, &e2)) {
            if (!any_printed) {
                any_printed = true;
                d1_t2 = e1;
                d2_t2 = e2;
                printed_exponent(lam, k1, q1_l5, t, &d1_l5);
                printed_exponent(lam, k2, q2_l5, t, &d2_l5);
            } else {
                d1_t2 = std::min(d1_t2, e1);
                d2_t2 = std::min(d2_t2, e2);
                printed_exponent(lam, k1, q1_l5, t, &e1);
                printed_exponent(lam, k2, q2_l5, t, &e2);
                d1_l5 = std::min(d1_l5, e1);
                d2_l5 = std::min(d2_l5, e2);
            }
        }
    }
    if (feas1) r.p1 = 0.5 * cap_exp(best1);
    if (feas2) r.p2 = 0.5 * cap_exp(best2);
    r.grid_feasible = feas1 && feas2;
    r.bound = std::min(r.p1 + r.p2, 1.0);
    if (any_printed) {
        r.p1_theorem2 = 0.5 * cap_exp(d1_t2);
        r.p2_theorem2 = 0.5 * cap_exp(d2_t2);
        r.p1_lemma5 = 0.5 * cap_exp(d1_l5);
        r.p2_lemma5 = 0.5 * cap_exp(d2_l5);
    }
    return r;
}

BoundResult theorem_bound(const Eigen::VectorXd& mu, double a_minus, double a_plus,
                          const std::vector<double>& t_grid) {
    return theorem_bound(quadratic_boundary(mu, a_minus, a_plus), t_grid);
}

Eigen::VectorXd make_mu(double mu_norm, int d, MuDirection direction) {
    if (d < 1) throw std::invalid_argument("make_mu: d must be >= 1");
    if (direction == MuDirection::kUniform) {
        return Eigen::VectorXd::Constant(d, mu_norm / std::sqrt(static_cast<double>(d)));
    }
    return mu_norm * sine_basis(d).col(d - 1);
}

ContourGrid contour_grid(double mu_norm, int d, int grid_n, int n_points, std::uint64_t seed,
                         const std::vector<double>& t_grid, MuDirection direction, int threads) {
    if (grid_n < 1) throw std::invalid_argument("contour_grid: grid_n must be >= 1");
    ContourGrid grid;
    grid.mu_norm = mu_norm;
    grid.d = d;
    grid.grid_n = grid_n;
    grid.n_points = n_points;
    grid.seed = seed;
    grid.direction = direction;
    grid.cells.resize(static_cast<std::size_t>(grid_n) * grid_n);
    const Eigen::VectorXd mu = make_mu(mu_norm, d, direction);
    parallel_for(grid.cells.size(), threads, [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / grid_n;
        const int j = static_cast<int>(idx) % grid_n;
        ContourCell& cell = grid.cells[idx];
        cell.a_minus = grid_n == 1 ? 0.0 : 0.5 * i / (grid_n - 1);
        cell.a_plus = grid_n == 1 ? 0.0 : 0.5 * j / (grid_n - 1);
        const QuadraticBoundary qb = quadratic_boundary(mu, cell.a_minus, cell.a_plus);
        cell.mc = mc_clean_accuracy(qb, mu, n_points, derive_seed(seed, idx));
        cell.bound = theorem_bound(qb, t_grid);
    });
    return grid;
}

std::string contour_to_csv(const ContourGrid& grid) {
    std::ostringstream os;
    os << "a_minus,a_plus,mc_acc,mc_se,bound,t1,t2,gamma1_pos,gamma2_pos\n";
    char buf[64];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << sep;
    };
    for (const ContourCell& cell : grid.cells) {
        put(cell.a_minus, ',');
        put(cell.a_plus, ',');
        put(cell.mc.estimate, ',');
        put(cell.mc.se, ',');
        put(cell.bound.bound, ',');
        put(cell.bound.t1, ',');
        put(cell.bound.t2, ',');
        os << (cell.bound.gamma1_pos ? 1 : 0) << ',' << (cell.bound.gamma2_pos ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace unlearn
