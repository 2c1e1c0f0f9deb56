#include "unlearn/dat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

Eigen::MatrixXd tconv_batch(const Eigen::MatrixXd& x, int h, int w, int c, const Filter& s, double beta) {
    const int k = s.k;
    const int ctr = k / 2;
    if (x.cols() != static_cast<Eigen::Index>(h) * w * c) throw std::invalid_argument("tconv_batch: shape mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(x.rows(), x.cols(), beta);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (int ch = 0; ch < c; ++ch) {
            const Eigen::Index base = static_cast<Eigen::Index>(ch) * h * w;
            for (int u = 0; u < k; ++u) {
                const int di = u - ctr;  // out[i] reads x[i - di]
                const int i0 = std::max(0, di), i1 = std::min(h, h + di);
                for (int v = 0; v < k; ++v) {
                    const double wt = s.at(u, v);
                    if (wt == 0.0) continue;
                    const int dj = v - ctr;
                    const int j0 = std::max(0, dj), j1 = std::min(w, w + dj);
                    for (int i = i0; i < i1; ++i) {
                        const Eigen::Index orow = base + static_cast<Eigen::Index>(i) * w;
                        const Eigen::Index xrow = base + static_cast<Eigen::Index>(i - di) * w;
                        for (int j = j0; j < j1; ++j) out(r, orow + j) += wt * x(r, xrow + j - dj);
                    }
                }
            }
        }
    }
    return out;
}

void tconv_filter_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g, int h, int w, int c, int k,
                       Filter* ds, double* dbeta) {
    if (x.rows() != g.rows() || x.cols() != g.cols()) throw std::invalid_argument("tconv_filter_grad: shape mismatch");
    if (x.cols() != static_cast<Eigen::Index>(h) * w * c) throw std::invalid_argument("tconv_filter_grad: bad dims");
    const int ctr = k / 2;
    ds->k = k;
    ds->values.assign(static_cast<std::size_t>(k) * k, 0.0);
    *dbeta = g.sum();
    for (int u = 0; u < k; ++u) {
        const int di = u - ctr;
        const int i0 = std::max(0, di), i1 = std::min(h, h + di);
        for (int v = 0; v < k; ++v) {
            const int dj = v - ctr;
            const int j0 = std::max(0, dj), j1 = std::min(w, w + dj);
            double acc = 0.0;
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                for (int ch = 0; ch < c; ++ch) {
                    const Eigen::Index base = static_cast<Eigen::Index>(ch) * h * w;
                    for (int i = i0; i < i1; ++i) {
                        const Eigen::Index grow = base + static_cast<Eigen::Index>(i) * w;
                        const Eigen::Index xrow = base + static_cast<Eigen::Index>(i - di) * w;
                        for (int j = j0; j < j1; ++j) acc += g(r, grow + j) * x(r, xrow + j - dj);
                    }
                }
            }
            ds->values[static_cast<std::size_t>(u) * k + v] = acc;
        }
    }
}

namespace {

Filter identity_filter(int k) {
    Filter s;
    s.k = k;
    s.values.assign(static_cast<std::size_t>(k) * k, 0.0);
    const int ctr = k / 2;
    s.values[static_cast<std::size_t>(ctr) * k + ctr] = 1.0;
    return s;
}

// Clamp at zero and divide each row (one image) by its max, matching the
// poisoning rescale but in double precision.
void clamp_rescale_rows(Eigen::MatrixXd& x) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double m = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (x(r, j) < 0.0) x(r, j) = 0.0;
            m = std::max(m, x(r, j));
        }
        if (m > 0.0) x.row(r) /= m;
    }
}

}  // namespace

DATResult dat_train(const LabeledDataset& train_ds, const LabeledDataset& test_ds, Arch arch,
                    const TrainConfig& cfg, const DATConfig& dat) {
    if (dat.k < 1 || dat.k % 2 == 0) throw std::invalid_argument("dat_train: k must be odd and >= 1");
    if (dat.clamp < 0.0) throw std::invalid_argument("dat_train: clamp must be >= 0");
    if (dat.steps < 1) throw std::invalid_argument("dat_train: steps must be >= 1");
    if (!(dat.inner_lr > 0.0)) throw std::invalid_argument("dat_train: inner lr must be positive");
    if (train_ds.size() == 0) throw std::invalid_argument("dat_train: empty dataset");
    train_ds.validate();
    const int n = static_cast<int>(train_ds.size());
    const int dim = train_ds.h * train_ds.w * train_ds.c;
    const int num_classes = train_ds.num_classes;

    DATResult result;
    ClassifierModel& model = result.model;
    model = init_model(arch, dim, num_classes, cfg.hidden, cfg.seed);
    Gradients g, vel;
    vel.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    vel.b1 = Eigen::VectorXd::Zero(model.b1.size());
    if (arch == Arch::kMlp) {
        vel.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
        vel.b2 = Eigen::VectorXd::Zero(model.b2.size());
    }
    Xoshiro256pp shuffle_rng(derive_seed(cfg.seed, 1));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const std::vector<int> decays = cfg.resolved_decay_epochs();

    for (int ep = 0; ep < cfg.epochs; ++ep) {
        double lr = cfg.lr;
        for (int de : decays)
            if (ep >= de) lr *= cfg.lr_decay;
        shuffle_rng.shuffle(order);
        for (int s0 = 0; s0 < n; s0 += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - s0);
            std::vector<int> idx(order.begin() + s0, order.begin() + s0 + bsz);
            std::vector<int> labels(static_cast<std::size_t>(bsz));
            for (int i = 0; i < bsz; ++i) labels[static_cast<std::size_t>(i)] = train_ds.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            Eigen::MatrixXd xb = batch_matrix(train_ds, idx);
            Eigen::MatrixXd xadv = xb;
            for (int cls = 0; cls < num_classes; ++cls) {
                std::vector<int> members;
                for (int i = 0; i < bsz; ++i)
                    if (labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
                if (members.empty()) continue;
                Eigen::MatrixXd xc(static_cast<Eigen::Index>(members.size()), dim);
                for (std::size_t r = 0; r < members.size(); ++r) xc.row(static_cast<Eigen::Index>(r)) = xb.row(members[r]);
                Filter s = identity_filter(dat.k);
                double beta = 0.0;
                if (dat.clamp > 0.0) {
                    const std::vector<int> cls_labels(members.size(), cls);
                    Filter gs;
                    double gbeta = 0.0;
                    for (int step = 0; step < dat.steps; ++step) {
                        const Eigen::MatrixXd xt = tconv_batch(xc, train_ds.h, train_ds.w, train_ds.c, s, beta);
                        const Eigen::MatrixXd gx = loss_input_grad(model, xt, cls_labels);
                        tconv_filter_grad(xc, gx, train_ds.h, train_ds.w, train_ds.c, dat.k, &gs, &gbeta);
                        for (std::size_t t = 0; t < s.values.size(); ++t)
                            s.values[t] = std::clamp(s.values[t] + dat.inner_lr * gs.values[t], -dat.clamp, dat.clamp);
                        beta = std::clamp(beta + dat.inner_lr * gbeta, -dat.clamp, dat.clamp);
                    }
                }
                Eigen::MatrixXd xfin = tconv_batch(xc, train_ds.h, train_ds.w, train_ds.c, s, beta);
                clamp_rescale_rows(xfin);
                for (std::size_t r = 0; r < members.size(); ++r) xadv.row(members[r]) = xfin.row(static_cast<Eigen::Index>(r));
            }
            const double loss = loss_and_grad(model, xadv, labels, cfg.weight_decay, &g);
            if (!std::isfinite(loss))
                throw numeric_error("dat_train: non-finite loss at epoch " + std::to_string(ep));
            vel.w1 = cfg.momentum * vel.w1 + g.w1;
            vel.b1 = cfg.momentum * vel.b1 + g.b1;
            model.w1 -= lr * vel.w1;
            model.b1 -= lr * vel.b1;
            if (arch == Arch::kMlp) {
                vel.w2 = cfg.momentum * vel.w2 + g.w2;
                vel.b2 = cfg.momentum * vel.b2 + g.b2;
                model.w2 -= lr * vel.w2;
                model.b2 -= lr * vel.b2;
            }
        }
        result.test_accuracy.push_back(evaluate(model, test_ds));
    }
    return result;
}

}  // namespace unlearn
