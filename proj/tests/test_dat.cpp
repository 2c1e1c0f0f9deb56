// Deconvolution-based adversarial training: the transpose-convolution
// primitive against flipped cross-correlation, filter gradients against
// finite differences, and the frozen-filter equivalence with plain SGD.

#include "doctest.h"

#include "unlearn/classifier.hpp"
#include "unlearn/dat.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/filters.hpp"
#include "unlearn/image.hpp"
#include "unlearn/poison.hpp"
#include "unlearn/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace unlearn;

namespace {

Eigen::MatrixXd random_batch(int rows, int dim, std::uint64_t seed) {
    Eigen::MatrixXd x(rows, dim);
    Xoshiro256pp rng(seed);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < dim; ++j) x(r, j) = rng.uniform();
    return x;
}

Filter random_filter(int k, std::uint64_t seed) {
    Filter s;
    s.k = k;
    s.values.resize(static_cast<std::size_t>(k) * k);
    Xoshiro256pp rng(seed);
    for (double& v : s.values) v = 2.0 * rng.uniform() - 1.0;
    return s;
}

// Direct evaluation of the documented formula with explicit bounds checks.
Eigen::MatrixXd tconv_oracle(const Eigen::MatrixXd& x, int h, int w, int c, const Filter& s,
                             double beta) {
    const int k = s.k, ctr = k / 2;
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (int ch = 0; ch < c; ++ch) {
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    double acc = beta;
                    for (int u = 0; u < k; ++u) {
                        for (int v = 0; v < k; ++v) {
                            const int si = i - u + ctr, sj = j - v + ctr;
                            if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
                            acc += s.at(u, v) * x(r, (static_cast<Eigen::Index>(ch) * h + si) * w + sj);
                        }
                    }
                    out(r, (static_cast<Eigen::Index>(ch) * h + i) * w + j) = acc;
                }
            }
        }
    }
    return out;
}

LabeledDataset poisoned_blobs(int per_class, std::uint64_t seed, const FilterBank& bank) {
    LabeledDataset ds;
    ds.h = 6;
    ds.w = 6;
    ds.c = 1;
    ds.num_classes = 2;
    Xoshiro256pp rng(seed);
    for (int i = 0; i < 2 * per_class; ++i) {
        const auto label = static_cast<std::uint16_t>(i % 2);
        Image img(6, 6, 1);
        for (float& p : img.pix)
            p = static_cast<float>(label == 0 ? 0.2 * rng.uniform() : 0.8 + 0.2 * rng.uniform());
        ds.append(img, label);
    }
    return poison_testset(ds, bank);
}

}  // namespace

TEST_CASE("tconv_batch with the identity filter adds only the bias") {
    Filter ident;
    ident.k = 3;
    ident.values.assign(9, 0.0);
    ident.values[4] = 1.0;
    const Eigen::MatrixXd x = random_batch(3, 4 * 5 * 2, 1);
    CHECK(tconv_batch(x, 4, 5, 2, ident, 0.0) == x);

    const Eigen::MatrixXd shifted = tconv_batch(x, 4, 5, 2, ident, 2.5);
    CHECK((shifted - x).isApproxToConstant(2.5, 1e-15));
}

TEST_CASE("tconv_batch matches the documented formula") {
    const int h = 4, w = 5, c = 2;
    const Eigen::MatrixXd x = random_batch(2, h * w * c, 2);
    const Filter s = random_filter(3, 3);
    const Eigen::MatrixXd got = tconv_batch(x, h, w, c, s, -0.3);
    const Eigen::MatrixXd want = tconv_oracle(x, h, w, c, s, -0.3);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXd bad(1, 7);
    CHECK_THROWS_AS(tconv_batch(bad, 4, 5, 2, s, 0.0), std::invalid_argument);
}

TEST_CASE("tconv is cross-correlation with the flipped kernel") {
    const int h = 5, w = 4, c = 3;
    Image img(h, w, c);
    Xoshiro256pp rng(4);
    for (float& p : img.pix) p = static_cast<float>(rng.uniform());

    const Filter s = random_filter(3, 5);
    Filter flipped;
    flipped.k = 3;
    flipped.values.resize(9);
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) flipped.values[static_cast<std::size_t>(u) * 3 + v] = s.at(2 - u, 2 - v);

    Eigen::MatrixXd x(1, h * w * c);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(0, j) = static_cast<double>(img.pix[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd t = tconv_batch(x, h, w, c, s, 0.0);
    const Image corr = convolve_same(img, flipped);
    for (std::size_t p = 0; p < corr.pix.size(); ++p)
        CHECK(t(0, static_cast<Eigen::Index>(p)) ==
              doctest::Approx(static_cast<double>(corr.pix[p])).epsilon(1e-6));
}

TEST_CASE("tconv_filter_grad differentiates the weighted sum") {
    const int h = 4, w = 4, c = 2, k = 3;
    const Eigen::MatrixXd x = random_batch(3, h * w * c, 6);
    Eigen::MatrixXd g(3, h * w * c);
    Xoshiro256pp rng(7);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(r, j) = 2.0 * rng.uniform() - 1.0;

    Filter s = random_filter(k, 8);
    double beta = 0.4;
    Filter ds;
    double dbeta = 0.0;
    tconv_filter_grad(x, g, h, w, c, k, &ds, &dbeta);
    REQUIRE(ds.k == k);

    // The objective is linear in (s, beta), so central differences are exact
    // up to rounding.
    auto objective = [&]() {
        return (g.cwiseProduct(tconv_batch(x, h, w, c, s, beta))).sum();
    };
    const double eps = 1e-6;
    for (std::size_t t = 0; t < s.values.size(); ++t) {
        const double save = s.values[t];
        s.values[t] = save + eps;
        const double up = objective();
        s.values[t] = save - eps;
        const double dn = objective();
        s.values[t] = save;
        CHECK(ds.values[t] == doctest::Approx((up - dn) / (2.0 * eps)).epsilon(1e-6));
    }
    const double bsave = beta;
    beta = bsave + eps;
    const double up = objective();
    beta = bsave - eps;
    const double dn = objective();
    beta = bsave;
    CHECK(dbeta == doctest::Approx((up - dn) / (2.0 * eps)).epsilon(1e-6));
    CHECK(dbeta == doctest::Approx(g.sum()).epsilon(1e-12));
}

TEST_CASE("the chained inner-ascent gradient matches finite differences") {
    const int h = 4, w = 4, c = 1, k = 3;
    for (int inst = 0; inst < 6; ++inst) {
        const bool mlp = inst % 2 == 1;
        const ClassifierModel model =
            init_model(mlp ? Arch::kMlp : Arch::kLinear, h * w * c, 3, 4, 500 + inst);
        const Eigen::MatrixXd xc = random_batch(3, h * w * c, 600 + inst);
        const std::vector<int> labels(3, inst % 3);

        Filter s = random_filter(k, 700 + inst);
        double beta = 0.1;

        const Eigen::MatrixXd xt = tconv_batch(xc, h, w, c, s, beta);
        const Eigen::MatrixXd gx = loss_input_grad(model, xt, labels);
        Filter gs;
        double gbeta = 0.0;
        tconv_filter_grad(xc, gx, h, w, c, k, &gs, &gbeta);

        auto loss_of = [&]() {
            const Eigen::MatrixXd z = tconv_batch(xc, h, w, c, s, beta);
            return loss_and_grad(model, z, labels, 0.0, nullptr);
        };
        const double eps = 1e-6;
        for (std::size_t t = 0; t < s.values.size(); ++t) {
            const double save = s.values[t];
            s.values[t] = save + eps;
            const double up = loss_of();
            s.values[t] = save - eps;
            const double dn = loss_of();
            s.values[t] = save;
            const double fd = (up - dn) / (2.0 * eps);
            CHECK(std::abs(gs.values[t] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
        }
        const double save = beta;
        beta = save + eps;
        const double up = loss_of();
        beta = save - eps;
        const double dn = loss_of();
        beta = save;
        CHECK(std::abs(gbeta - (up - dn) / (2.0 * eps)) / std::max(1.0, std::abs(gbeta)) < 1e-4);
    }
}

TEST_CASE("clamp 0 freezes the identity deconv: DAT equals plain training") {
    // On images whose max is exactly 1, the per-row rescale divides by 1.0
    // and the frozen identity transpose-convolution is a bitwise no-op, so
    // the two training loops must produce identical weights.
    const FilterBank bank = generate_bank(FilterSpec{2, 3, 0.3, 12});
    const LabeledDataset train_ds = poisoned_blobs(20, 70, bank);
    const LabeledDataset test_ds = poisoned_blobs(10, 71, bank);

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 5;
    DATConfig dat;
    dat.clamp = 0.0;

    const ClassifierModel plain = train(train_ds, Arch::kLinear, cfg);
    const DATResult res = dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat);
    CHECK(res.model.w1 == plain.w1);
    CHECK(res.model.b1 == plain.b1);

    REQUIRE(res.test_accuracy.size() == 3);
    CHECK(res.test_accuracy.back() == evaluate(res.model, test_ds));
    for (double a : res.test_accuracy) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("dat_train is deterministic and sensitive to the adversary") {
    const FilterBank bank = generate_bank(FilterSpec{2, 3, 0.3, 13});
    const LabeledDataset train_ds = poisoned_blobs(16, 72, bank);
    const LabeledDataset test_ds = poisoned_blobs(8, 73, bank);

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 9;
    DATConfig dat;
    dat.steps = 3;

    const DATResult a = dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat);
    const DATResult b = dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat);
    CHECK(a.model.w1 == b.model.w1);
    CHECK(a.test_accuracy == b.test_accuracy);

    // An active adversary (C > 0) trains a different model than a frozen one.
    DATConfig frozen;
    frozen.clamp = 0.0;
    const DATResult c = dat_train(train_ds, test_ds, Arch::kLinear, cfg, frozen);
    CHECK(a.model.w1 != c.model.w1);
}

TEST_CASE("dat_train validates its configuration") {
    const FilterBank bank = generate_bank(FilterSpec{2, 3, 0.3, 14});
    const LabeledDataset train_ds = poisoned_blobs(4, 74, bank);
    const LabeledDataset test_ds = poisoned_blobs(2, 75, bank);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;

    DATConfig dat;
    dat.k = 2;
    CHECK_THROWS_AS(dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat), std::invalid_argument);
    dat.k = 3;
    dat.clamp = -1.0;
    CHECK_THROWS_AS(dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat), std::invalid_argument);
    dat.clamp = 5.0;
    dat.steps = 0;
    CHECK_THROWS_AS(dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat), std::invalid_argument);
    dat.steps = 10;
    dat.inner_lr = 0.0;
    CHECK_THROWS_AS(dat_train(train_ds, test_ds, Arch::kLinear, cfg, dat), std::invalid_argument);

    LabeledDataset empty;
    empty.num_classes = 2;
    CHECK_THROWS_AS(dat_train(empty, test_ds, Arch::kLinear, cfg, DATConfig{}), std::invalid_argument);
}
