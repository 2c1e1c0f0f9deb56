#include "unlearn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::vector<int> TrainConfig::resolved_decay_epochs() const {
    if (!decay_epochs.empty()) return decay_epochs;
    return {static_cast<int>(epochs * 0.4), static_cast<int>(epochs * 0.8)};
}

Eigen::MatrixXd ClassifierModel::logits(const Eigen::MatrixXd& x) const {
    if (x.cols() != input_dim) throw std::invalid_argument("logits: input dimension mismatch");
    if (arch == Arch::kLinear) {
        return (x * w1.transpose()).rowwise() + b1.transpose();
    }
    Eigen::MatrixXd h = ((x * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
    return (h * w2.transpose()).rowwise() + b2.transpose();
}

namespace {

void glorot_fill(Eigen::MatrixXd& w, Xoshiro256pp& rng) {
    const double lim = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = -lim + rng.uniform() * (2.0 * lim);
}

// Softmax row-wise in place; returns mean cross-entropy against labels.
double softmax_ce(Eigen::MatrixXd& z, const std::vector<int>& labels) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            z(i, j) = std::exp(z(i, j) - m);
            sum += z(i, j);
        }
        z.row(i) /= sum;
        loss -= std::log(z(i, labels[static_cast<std::size_t>(i)]));
    }
    return loss / static_cast<double>(z.rows());
}

}  // namespace

ClassifierModel init_model(Arch arch, int input_dim, int num_classes, int hidden, std::uint64_t seed) {
    if (input_dim < 1 || num_classes < 2) throw std::invalid_argument("init_model: bad shape");
    ClassifierModel m;
    m.arch = arch;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    Xoshiro256pp rng(derive_seed(seed, 0));
    if (arch == Arch::kLinear) {
        m.w1.resize(num_classes, input_dim);
        glorot_fill(m.w1, rng);
        m.b1 = Eigen::VectorXd::Zero(num_classes);
    } else {
        if (hidden < 1) throw std::invalid_argument("init_model: hidden width must be >= 1");
        m.w1.resize(hidden, input_dim);
        glorot_fill(m.w1, rng);
        m.b1 = Eigen::VectorXd::Zero(hidden);
        m.w2.resize(num_classes, hidden);
        glorot_fill(m.w2, rng);
        m.b2 = Eigen::VectorXd::Zero(num_classes);
    }
    return m;
}

double loss_and_grad(const ClassifierModel& model, const Eigen::MatrixXd& x, const std::vector<int>& labels,
                     double weight_decay, Gradients* grads) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (x.rows() != n || n == 0) throw std::invalid_argument("loss_and_grad: batch size mismatch");
    double loss;
    Eigen::MatrixXd gz;  // d loss / d logits, already divided by batch size
    Eigen::MatrixXd h;   // MLP hidden activations
    if (model.arch == Arch::kLinear) {
        gz = model.logits(x);
    } else {
        h = ((x * model.w1.transpose()).rowwise() + model.b1.transpose()).cwiseMax(0.0);
        gz = (h * model.w2.transpose()).rowwise() + model.b2.transpose();
    }
    loss = softmax_ce(gz, labels);
    for (Eigen::Index i = 0; i < n; ++i) gz(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    gz /= static_cast<double>(n);

    if (weight_decay != 0.0) {
        loss += 0.5 * weight_decay * model.w1.squaredNorm();
        if (model.arch == Arch::kMlp) loss += 0.5 * weight_decay * model.w2.squaredNorm();
    }
    if (grads) {
        if (model.arch == Arch::kLinear) {
            grads->w1 = gz.transpose() * x + weight_decay * model.w1;
            grads->b1 = gz.colwise().sum().transpose();
            grads->w2.resize(0, 0);
            grads->b2.resize(0);
        } else {
            Eigen::MatrixXd gh = gz * model.w2;
            for (Eigen::Index i = 0; i < gh.rows(); ++i)
                for (Eigen::Index j = 0; j < gh.cols(); ++j)
                    if (h(i, j) <= 0.0) gh(i, j) = 0.0;
            grads->w2 = gz.transpose() * h + weight_decay * model.w2;
            grads->b2 = gz.colwise().sum().transpose();
            grads->w1 = gh.transpose() * x + weight_decay * model.w1;
            grads->b1 = gh.colwise().sum().transpose();
        }
    }
    return loss;
}

Eigen::MatrixXd loss_input_grad(const ClassifierModel& model, const Eigen::MatrixXd& x,
                                const std::vector<int>& labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (x.rows() != n || n == 0) throw std::invalid_argument("loss_input_grad: batch size mismatch");
    Eigen::MatrixXd gz;
    Eigen::MatrixXd h;
    if (model.arch == Arch::kLinear) {
        gz = model.logits(x);
    } else {
        h = ((x * model.w1.transpose()).rowwise() + model.b1.transpose()).cwiseMax(0.0);
        gz = (h * model.w2.transpose()).rowwise() + model.b2.transpose();
    }
    softmax_ce(gz, labels);
    for (Eigen::Index i = 0; i < n; ++i) gz(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    gz /= static_cast<double>(n);
    if (model.arch == Arch::kLinear) return gz * model.w1;
    Eigen::MatrixXd gh = gz * model.w2;
    for (Eigen::Index i = 0; i < gh.rows(); ++i)
        for (Eigen::Index j = 0; j < gh.cols(); ++j)
            if (h(i, j) <= 0.0) gh(i, j) = 0.0;
    return gh * model.w1;
}

Eigen::MatrixXd batch_matrix(const LabeledDataset& ds, const std::vector<int>& idx) {
    const int dim = ds.h * ds.w * ds.c;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), dim);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const float* p = ds.image_ptr(idx[r]);
        for (int j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(r), j) = static_cast<double>(p[j]);
    }
    return x;
}

ClassifierModel train(const LabeledDataset& ds, Arch arch, const TrainConfig& cfg, const BatchHook& hook) {
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train: bad config");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
    ds.validate();
    const int n = static_cast<int>(ds.size());
    const int dim = ds.h * ds.w * ds.c;
    ClassifierModel model = init_model(arch, dim, ds.num_classes, cfg.hidden, cfg.seed);
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
    std::uint64_t batch_counter = 0;

    for (int ep = 0; ep < cfg.epochs; ++ep) {
        double lr = cfg.lr;
        for (int de : decays)
            if (ep >= de) lr *= cfg.lr_decay;
        shuffle_rng.shuffle(order);
        for (int s = 0; s < n; s += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - s);
            std::vector<int> idx(order.begin() + s, order.begin() + s + bsz);
            std::vector<int> labels(static_cast<std::size_t>(bsz));
            for (int i = 0; i < bsz; ++i) labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            Eigen::MatrixXd x;
            if (hook) {
                std::vector<Image> batch(static_cast<std::size_t>(bsz));
                for (int i = 0; i < bsz; ++i) batch[static_cast<std::size_t>(i)] = ds.get(idx[static_cast<std::size_t>(i)]);
                hook(batch, batch_counter);
                x.resize(bsz, dim);
                for (int i = 0; i < bsz; ++i)
                    for (int j = 0; j < dim; ++j) x(i, j) = static_cast<double>(batch[static_cast<std::size_t>(i)].pix[static_cast<std::size_t>(j)]);
            } else {
                x = batch_matrix(ds, idx);
            }
            const double loss = loss_and_grad(model, x, labels, cfg.weight_decay, &g);
            if (!std::isfinite(loss))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(ep));
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
            ++batch_counter;
        }
    }
    return model;
}

double evaluate(const ClassifierModel& model, const LabeledDataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    if (ds.h * ds.w * ds.c != model.input_dim) throw std::invalid_argument("evaluate: shape mismatch");
    const int n = static_cast<int>(ds.size());
    const int block = 512;
    long correct = 0;
    std::vector<int> idx;
    for (int s = 0; s < n; s += block) {
        const int bsz = std::min(block, n - s);
        idx.resize(static_cast<std::size_t>(bsz));
        std::iota(idx.begin(), idx.end(), s);
        const Eigen::MatrixXd z = model.logits(batch_matrix(ds, idx));
        for (int i = 0; i < bsz; ++i) {
            int best = 0;
            for (int j = 1; j < model.num_classes; ++j)
                if (z(i, j) > z(i, best)) best = j;
            if (best == ds.labels[static_cast<std::size_t>(s + i)]) ++correct;
        }
    }
    return static_cast<double>(correct) / n;
}

}  // namespace unlearn
