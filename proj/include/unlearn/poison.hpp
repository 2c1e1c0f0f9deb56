#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/filters.hpp"

namespace unlearn {

// Class-wise CUDA poisoning and the paper's control/defense transforms.
// All operations are pure; per-image work parallelizes with results
// written by index, so output is independent of the thread count.

// Stratified poisoning: for every class, a seeded random subset of
// floor(fraction * n_class) samples is replaced by cuda_poison_image with
// that class's filter. Untouched samples stay bit-identical.
std::pair<LabeledDataset, PoisonMask> poison_dataset(const LabeledDataset& ds, const FilterBank& bank,
                                                     double fraction, std::uint64_t seed, int threads = 1);

// Every image poisoned with the filter of its true label (the CUDA test
// set); combine with cyclic_permute_bank for the permuted-filter probe.
LabeledDataset poison_testset(const LabeledDataset& ds, const FilterBank& bank, int threads = 1);

// One filter for every image regardless of class (the universal-blur control).
LabeledDataset universal_blur(const LabeledDataset& ds, const Filter& filter, int threads = 1);

// One fresh random filter (drawn like generate_filter from the given seed)
// applied to the whole batch, then rescaled. The random-blur defense.
std::vector<Image> random_blur_augment(const std::vector<Image>& batch, double p_b_prime, int k,
                                       std::uint64_t seed);

// Channel mean; output has one channel.
LabeledDataset grayscale(const LabeledDataset& ds);

}  // namespace unlearn
