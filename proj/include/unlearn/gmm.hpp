#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unlearn/rng.hpp"

namespace unlearn {

// Gaussian-mixture poisoning theory. Data model: x = y*mu + z with
// z ~ N(0, I), y = +/-1 equiprobable. Class-wise poisoning by T(d; a_y)
// turns the mixture into N(y A_y mu, A_y^2); its Bayes classifier is the
// quadratic sign(x'Ax + b'x + c) with A = A_{-1}^{-2} - A_{1}^{-2},
// b = 2(A_{-1}^{-1} + A_{1}^{-1}) mu. Everything is represented in the
// shared sine eigenbasis: A as the eigenvalue vector lam, b as b_hat = Qb.

struct MixtureSpec {
    int d = 0;
    Eigen::VectorXd mu;

    MixtureSpec(int d_, Eigen::VectorXd mu_);
};

// Incremental sampler so bulk materialization and chunked evaluation share
// one pinned stream: per sample, one uniform for the label (u < 0.5 maps
// to -1), then d Box-Muller normals.
class MixtureSampler {
  public:
    MixtureSampler(MixtureSpec spec, std::uint64_t seed);
    // Fills rows [row, row+count) of X and y.
    void draw(Eigen::MatrixXd& X, Eigen::VectorXi& y, int row, int count);

  private:
    MixtureSpec spec_;
    Xoshiro256pp rng_;
};

std::pair<Eigen::MatrixXd, Eigen::VectorXi> sample_mixture(const MixtureSpec& spec, int n, std::uint64_t seed);

// Phi(||mu||_2): accuracy of the clean Bayes boundary mu'x = 0.
double clean_bayes_accuracy(const Eigen::VectorXd& mu);

struct QuadraticBoundary {
    int d = 0;
    double a_minus = 0.0, a_plus = 0.0;
    Eigen::VectorXd mu, mu_hat;
    Eigen::VectorXd lam;    // eigenvalues of A in the sine basis
    Eigen::VectorXd b_hat;  // Qb
    double c = 0.0;
    Eigen::MatrixXd Q;

    // x'Ax + b'x + c, evaluated as u'diag(lam)u + b_hat'u + c with u = Qx.
    double score(const Eigen::VectorXd& x) const;
    // sign with ties resolved to +1.
    int predict(const Eigen::VectorXd& x) const { return score(x) >= 0.0 ? 1 : -1; }
};

QuadraticBoundary quadratic_boundary(const Eigen::VectorXd& mu, double a_minus, double a_plus);

// Replace each point by A_y x (label-dependent Toeplitz multiply).
void poison_points(Eigen::MatrixXd& points, const Eigen::VectorXi& labels, double a_minus, double a_plus);

struct McResult {
    double estimate = 0.0;
    double se = 0.0;
};

// Accuracy of the quadratic classifier on n clean samples; binomial SE.
McResult mc_clean_accuracy(const QuadraticBoundary& boundary, const Eigen::VectorXd& mu, int n,
                           std::uint64_t seed);

// Lemma-5 Chernoff factor, verbatim:
//   exp{-t/(4||b||^2 ||Lam||) - t(gamma + tr(Lam) + ||b||)} / |I-2t Lam|^{1/2}
// with ||Lam|| = max |lam_i|; the first exponent term is 0 when
// ||b|| ||Lam|| == 0. Requires t >= 0 and 1 - 2t lam_i > 0 for all i
// (numeric_error otherwise).
double chernoff_tail(const Eigen::VectorXd& lam, const Eigen::VectorXd& b, double gamma, double t);

struct BoundResult {
    double p1 = 1.0, p2 = 1.0;       // per-term minima over the feasible grid
    double t1 = 0.0, t2 = 0.0;       // arg minima (0 when the term's grid is empty)
    double gamma1 = 0.0, gamma2 = 0.0;
    bool gamma1_pos = false, gamma2_pos = false;  // effectiveness flags
    bool grid_feasible = false;      // both terms had at least one feasible t
    double bound = 1.0;              // min(p1 + p2, 1)
    // Printed-form diagnostics (see module docs): the theorem's stated
    // exponent with the unsquared norm denominator, and the lemma's squared
    // variant, both over the |I-2t Lam| feasible set; 1.0 when infeasible.
    double p1_theorem2 = 1.0, p2_theorem2 = 1.0;
    double p1_lemma5 = 1.0, p2_lemma5 = 1.0;
};

std::vector<double> default_t_grid();

// Upper bound on clean accuracy of the poisoned Bayes classifier. Each
// term is the exact Chernoff moment bound of its Gaussian quadratic form,
// minimized over the pinned t grid; a term with no feasible t falls back
// to the trivial 1/2. Degenerate a_minus == a_plus (lam = 0) returns the
// vacuous bound 1 with both flags false.
BoundResult theorem_bound(const QuadraticBoundary& boundary, const std::vector<double>& t_grid = default_t_grid());
BoundResult theorem_bound(const Eigen::VectorXd& mu, double a_minus, double a_plus,
                          const std::vector<double>& t_grid = default_t_grid());

enum class MuDirection { kUniform, kEigenvector };

struct ContourCell {
    double a_minus = 0.0, a_plus = 0.0;
    McResult mc;
    BoundResult bound;
};

struct ContourGrid {
    double mu_norm = 0.0;
    int d = 0, grid_n = 0, n_points = 0;
    std::uint64_t seed = 0;
    MuDirection direction = MuDirection::kUniform;
    std::vector<ContourCell> cells;  // row-major, a_minus outer
};

// The Figure-3 experiment: grid_n x grid_n cells over [0, 0.5]^2, each with
// an MC accuracy estimate (n_points samples, per-cell derived seed) and the
// theorem bound. mu = (mu_norm/sqrt(d)) * ones by default, or mu_norm times
// the last sine-basis column in eigenvector mode.
ContourGrid contour_grid(double mu_norm, int d, int grid_n, int n_points, std::uint64_t seed,
                         const std::vector<double>& t_grid = default_t_grid(),
                         MuDirection direction = MuDirection::kUniform, int threads = 1);

// Pinned CSV schema:
// a_minus,a_plus,mc_acc,mc_se,bound,t1,t2,gamma1_pos,gamma2_pos
std::string contour_to_csv(const ContourGrid& grid);

Eigen::VectorXd make_mu(double mu_norm, int d, MuDirection direction);

}  // namespace unlearn
