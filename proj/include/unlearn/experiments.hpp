#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "unlearn/classifier.hpp"
#include "unlearn/dat.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/filters.hpp"
#include "unlearn/report.hpp"

namespace unlearn {

// Desk-scale experiment drivers around a synthetic 10-class image task.
//
// Task design: every image shares a flat bed plus a period-2 alternating
// texture (checkerboard / row stripes / column stripes across the three
// channels), with one brighter template-free anchor block that pins the
// per-image maximum; each class adds a weak, very low-frequency block
// template; i.i.d. Gaussian pixel noise on top. The shared texture carries
// no label information, but it is an eigenimage of convolution, so a
// class-keyed filter re-weights it by a class-specific amplitude — exactly
// the shortcut the poisoning needs. The block templates are the legitimate
// features: orthogonal to the texture, weak enough that a poisoned-trained
// model ignores them, and smooth enough to survive any single blur (the
// universal-filter control trains on blurred data and is still expected to
// classify clean images). The anchor keeps the rescale factor after a blur
// class-independent, so brightness is never a spurious cue.

struct TaskParams {
    int h = 12, w = 12, c = 3;
    int num_classes = 10;
    int n_train = 800;  // totals; must split evenly across classes
    int n_test = 1000;
    double delta = 0.10;     // class template amplitude
    double sigma = 0.05;     // pixel noise
    double tex_amp = 0.25;   // shared texture amplitude
    double tex_jitter = 0.2; // per-image half-range of the texture gain
    int block = 6;           // template block edge; must divide h and w
};

// (train, test) with pinned derived streams: derive_seed(seed,0) builds the
// texture and class templates, derive_seed(seed,1)/(seed,2) draw the train
// and test noise. Deterministic for a fixed seed.
std::pair<LabeledDataset, LabeledDataset> make_template_task(std::uint64_t seed, const TaskParams& params = {});

// Trains on the fully poisoned train set and reports the four shortcut
// diagnostics: clean-test collapse, CUDA-test (true-label filters),
// permuted-filter test (cyclic shift), and the universal-blur control
// (training under one shared filter, which should stay near the baseline).
ExperimentReport shortcut_report(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                 const FilterBank& bank, Arch arch, const TrainConfig& cfg, int threads = 1);

// For each fraction: train on the stratified clean/poisoned mix and on the
// clean complement alone; table columns fraction, mixed_accuracy,
// clean_complement_accuracy (NaN when the complement is empty).
ExperimentReport protection_sweep(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                  const FilterBank& bank, const std::vector<double>& fractions, Arch arch,
                                  const TrainConfig& cfg, int threads = 1);

// Clean baseline, poisoned-ERM baseline, then DAT; reports the per-epoch
// clean-test trace and the recovered fraction of the poisoning gap.
ExperimentReport dat_demo(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                          const FilterBank& bank, Arch arch, const TrainConfig& cfg, const DATConfig& dat,
                          int threads = 1);

// Grayscale defense probe: both the baseline and the poisoned run are
// trained and evaluated on channel-averaged data.
ExperimentReport grayscale_check(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                 const FilterBank& bank, Arch arch, const TrainConfig& cfg, int threads = 1);

// Random-blur defense probe: trains on cuda_train with one fresh random
// k=3 filter applied per batch for each p_b' value; empty list reports the
// plain ERM result only.
ExperimentReport random_blur_defense_check(const LabeledDataset& cuda_train, const LabeledDataset& clean_test,
                                           const std::vector<double>& p_b_primes, Arch arch,
                                           const TrainConfig& cfg);

}  // namespace unlearn
