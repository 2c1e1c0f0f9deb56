#include "unlearn/poison.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "unlearn/parallel.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace {

void check_labels(const LabeledDataset& ds, const FilterBank& bank) {
    const int K = static_cast<int>(bank.filters.size());
    for (std::uint16_t l : ds.labels) {
        if (l >= K) throw std::invalid_argument("label " + std::to_string(l) + " outside filter bank range");
    }
}

void poison_index(LabeledDataset& out, const LabeledDataset& in, std::size_t idx, const Filter& f) {
    out.set(idx, cuda_poison_image(in.get(idx), f));
}

}  // namespace

std::pair<LabeledDataset, PoisonMask> poison_dataset(const LabeledDataset& ds, const FilterBank& bank,
                                                     double fraction, std::uint64_t seed, int threads) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in [0,1]");
    check_labels(ds, bank);
    const int K = static_cast<int>(bank.filters.size());

    PoisonMask mask;
    mask.flags.assign(ds.size(), 0);
    mask.seed = seed;
    mask.fraction = fraction;

    // Per-class stratified selection with a per-class derived stream, so the
    // choice for one class is independent of the others.
    std::vector<std::size_t> selected;
    for (int cls = 0; cls < K; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] == cls) members.push_back(i);
        }
        const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
        Xoshiro256pp rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
        rng.shuffle(members);
        for (std::size_t t = 0; t < take && t < members.size(); ++t) {
            selected.push_back(members[t]);
            mask.flags[members[t]] = 1;
        }
    }

    LabeledDataset out = ds;
    parallel_for(selected.size(), threads, [&](std::size_t s) {
        const std::size_t idx = selected[s];
        poison_index(out, ds, idx, bank.filters[ds.labels[idx]]);
    });
    if (fraction > 0.0) {
        out.provenance = (mask.count() == ds.size() ? "poisoned" : "mixed") +
                         std::string("(bank=") + fingerprint_hex(bank_fingerprint(bank)) + ")";
    }
    return {std::move(out), std::move(mask)};
}

LabeledDataset poison_testset(const LabeledDataset& ds, const FilterBank& bank, int threads) {
    check_labels(ds, bank);
    LabeledDataset out = ds;
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        poison_index(out, ds, i, bank.filters[ds.labels[i]]);
    });
    out.provenance = "poisoned(bank=" + fingerprint_hex(bank_fingerprint(bank)) + ")";
    return out;
}

LabeledDataset universal_blur(const LabeledDataset& ds, const Filter& filter, int threads) {
    LabeledDataset out = ds;
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        poison_index(out, ds, i, filter);
    });
    out.provenance = "universal-blur";
    return out;
}

std::vector<Image> random_blur_augment(const std::vector<Image>& batch, double p_b_prime, int k,
                                       std::uint64_t seed) {
    const Filter f = generate_filter(seed, k, p_b_prime);
    std::vector<Image> out;
    out.reserve(batch.size());
    for (const Image& img : batch) out.push_back(cuda_poison_image(img, f));
    return out;
}

LabeledDataset grayscale(const LabeledDataset& ds) {
    if (ds.c <= 1) return ds;
    LabeledDataset out;
    out.h = ds.h;
    out.w = ds.w;
    out.c = 1;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.provenance = ds.provenance + "+grayscale";
    const std::size_t plane = static_cast<std::size_t>(ds.h) * ds.w;
    out.pixels.resize(ds.size() * plane);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* src = ds.image_ptr(i);
        float* dst = out.pixels.data() + i * plane;
        for (std::size_t p = 0; p < plane; ++p) {
            double acc = 0.0;
            for (int ch = 0; ch < ds.c; ++ch) acc += static_cast<double>(src[ch * plane + p]);
            dst[p] = static_cast<float>(acc / ds.c);
        }
    }
    return out;
}

}  // namespace unlearn
