#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/image.hpp"

namespace unlearn {

// Desk-scale stand-ins for the paper-scale networks: a linear softmax
// classifier and a one-hidden-layer ReLU MLP on raw pixels. Everything runs
// in double precision, single-threaded, so training is bitwise reproducible
// for a fixed seed regardless of the --threads setting elsewhere.

enum class Arch { kLinear, kMlp };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double lr = 0.1;
    double lr_decay = 0.1;          // multiplied in at each decay epoch
    std::vector<int> decay_epochs;  // empty -> {floor(0.4 e), floor(0.8 e)}
    double momentum = 0.9;
    double weight_decay = 5e-4;     // applied to weight matrices, not biases
    int hidden = 64;                // MLP width
    std::uint64_t seed = 0;

    std::vector<int> resolved_decay_epochs() const;
};

struct ClassifierModel {
    Arch arch = Arch::kLinear;
    int input_dim = 0;
    int num_classes = 0;
    // Linear: w1 is (K x D), b1 is K; w2/b2 unused (size 0).
    // MLP: w1 is (H x D), b1 is H, w2 is (K x H), b2 is K.
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;

    // Logits for a batch of flattened inputs (rows).
    Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
};

// Glorot-uniform initialization, pinned fill order: w1 row-major, then w2
// row-major, biases zero; draws come from Xoshiro256pp(derive_seed(seed, 0)).
ClassifierModel init_model(Arch arch, int input_dim, int num_classes, int hidden, std::uint64_t seed);

struct Gradients {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;
};

// Mean softmax cross-entropy over the batch plus 0.5*wd*(|w1|^2 + |w2|^2)
// (biases carry no decay). Returns the loss; fills grads when non-null.
double loss_and_grad(const ClassifierModel& model, const Eigen::MatrixXd& x, const std::vector<int>& labels,
                     double weight_decay, Gradients* grads);

// d(mean cross-entropy)/dx for a batch (no decay term; it does not depend
// on x). Used by the DAT inner ascent and its finite-difference oracle.
Eigen::MatrixXd loss_input_grad(const ClassifierModel& model, const Eigen::MatrixXd& x,
                                const std::vector<int>& labels);

// Optional per-batch mutation hook (e.g. the random-blur defense); receives
// the batch as images plus a global batch counter that keeps augmentation
// streams reproducible.
using BatchHook = std::function<void(std::vector<Image>&, std::uint64_t batch_index)>;

// Minibatch SGD with momentum (v = m v + g, w -= lr v) on softmax
// cross-entropy. Shuffles with Xoshiro256pp(derive_seed(seed, 1)) each
// epoch; throws numeric_error naming the epoch if the loss goes non-finite.
ClassifierModel train(const LabeledDataset& ds, Arch arch, const TrainConfig& cfg,
                      const BatchHook& hook = nullptr);

// Accuracy; argmax ties break toward the smaller class index.
double evaluate(const ClassifierModel& model, const LabeledDataset& ds);

// Rows of flattened pixels (double) for the given sample indices.
Eigen::MatrixXd batch_matrix(const LabeledDataset& ds, const std::vector<int>& idx);

}  // namespace unlearn
