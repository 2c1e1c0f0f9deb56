#pragma once

#include <Eigen/Dense>
#include <vector>

#include "unlearn/classifier.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/image.hpp"

namespace unlearn {

// Deconvolution-based adversarial training: before every model update, one
// transpose-convolution filter per class is fitted by gradient ascent to
// maximize that class's loss, and the model trains on the transformed batch.

struct DATConfig {
    int k = 3;           // deconv filter size, odd
    double clamp = 5.0;  // C; entries and bias live in [-C, C]. C = 0 freezes
                         // the filter at its identity initialization.
    int steps = 10;      // inner ascent steps
    double inner_lr = 0.1;
};

struct DATResult {
    ClassifierModel model;
    std::vector<double> test_accuracy;  // clean-test accuracy after each epoch
};

// Transpose of the zero-padded cross-correlation plus a scalar bias:
//   out[ch,i,j] = beta + sum_{u,v} s[u,v] * x[ch, i-u+ctr, j-v+ctr]
// applied per channel to each row of x (flattened channel-planar images).
// Taps accumulate in row-major (u,v) order.
Eigen::MatrixXd tconv_batch(const Eigen::MatrixXd& x, int h, int w, int c, const Filter& s, double beta);

// Gradient of sum(g .* tconv_batch(x, s, beta)) with respect to the filter:
//   ds[u,v] = sum g[ch,i,j] * x[ch, i-u+ctr, j-v+ctr],  dbeta = sum g.
void tconv_filter_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g, int h, int w, int c, int k,
                       Filter* ds, double* dbeta);

// Per batch and class: ascend the class's deconv filter for `steps` steps of
// size inner_lr on the mean cross-entropy of the raw tconv output, clamping
// entries and bias into [-C, C] after each step; then clamp the transformed
// images at 0, rescale each to max 1, and take one SGD step on the model.
// Returns the model plus the per-epoch clean-test accuracy trace.
DATResult dat_train(const LabeledDataset& train_ds, const LabeledDataset& test_ds, Arch arch,
                    const TrainConfig& cfg, const DATConfig& dat);

}  // namespace unlearn
