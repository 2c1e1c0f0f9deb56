// Convolution, max-rescaling, the poisoning composition, and the dataset-
// level poisoning operators, each checked against independent nested-loop
// replays.

#include "doctest.h"

#include "unlearn/errors.hpp"
#include "unlearn/filters.hpp"
#include "unlearn/image.hpp"
#include "unlearn/poison.hpp"
#include "unlearn/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace unlearn;

// Naive per-pixel correlation with taps in row-major order -- the same
// accumulation order as the fast path, so results must match bitwise.
static Image conv_oracle(const Image& img, const Filter& f) {
    const int k = f.k, ctr = k / 2;
    Image out(img.h, img.w, img.c);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int i = 0; i < img.h; ++i) {
            for (int j = 0; j < img.w; ++j) {
                double acc = 0.0;
                for (int u = 0; u < k; ++u) {
                    for (int v = 0; v < k; ++v) {
                        const int si = i + u - ctr, sj = j + v - ctr;
                        if (si < 0 || si >= img.h || sj < 0 || sj >= img.w) continue;
                        acc += f.at(u, v) * static_cast<double>(img.at(ch, si, sj));
                    }
                }
                out.at(ch, i, j) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

static Image random_image(int h, int w, int c, std::uint64_t seed) {
    Image img(h, w, c);
    Xoshiro256pp rng(seed);
    for (float& p : img.pix) p = static_cast<float>(rng.uniform());
    return img;
}

static LabeledDataset make_dataset(int per_class, int num_classes, int h, int w, int c,
                                   std::uint64_t seed) {
    LabeledDataset ds;
    ds.h = h;
    ds.w = w;
    ds.c = c;
    ds.num_classes = num_classes;
    Xoshiro256pp rng(seed);
    for (int n = 0; n < per_class * num_classes; ++n) {
        Image img(h, w, c);
        for (float& p : img.pix) p = static_cast<float>(rng.uniform());
        ds.append(img, static_cast<std::uint16_t>(n % num_classes));
    }
    return ds;
}

TEST_CASE("convolve_same: interior pixels of a flat image sum the taps") {
    Image ones(4, 4, 1);
    std::fill(ones.pix.begin(), ones.pix.end(), 1.0f);
    const Filter f(3, {0.1, 0.2, 0.3, 0.4, 1.0, 0.5, 0.6, 0.7, 0.8});
    const double tap_sum = std::accumulate(f.values.begin(), f.values.end(), 0.0);

    const Image out = convolve_same(ones, f);
    // Interior pixels see the full kernel footprint. Both routes add the
    // taps in row-major order, so the float results agree exactly.
    CHECK(out.at(0, 1, 1) == static_cast<float>(tap_sum));
    CHECK(out.at(0, 2, 2) == static_cast<float>(tap_sum));
    // Corners see only the overlapping taps (zero padding outside).
    const Image ref = conv_oracle(ones, f);
    for (std::size_t p = 0; p < out.pix.size(); ++p) CHECK(out.pix[p] == ref.pix[p]);
    CHECK(out.at(0, 0, 0) < static_cast<float>(tap_sum));
}

TEST_CASE("convolve_same is a cross-correlation, not a flipped convolution") {
    // An impulse at (1,1) copies the kernel so that out[i][j] picks up
    // f(i - 1 + ctr, j - 1 + ctr); the top-left output reads the
    // bottom-right tap.
    Image impulse(4, 4, 1);
    impulse.at(0, 1, 1) = 1.0f;
    const Filter f(3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Image out = convolve_same(impulse, f);
    CHECK(out.at(0, 0, 0) == 9.0f);
    CHECK(out.at(0, 1, 1) == 5.0f);
    CHECK(out.at(0, 2, 2) == 1.0f);
    CHECK(out.at(0, 0, 2) == 7.0f);
    CHECK(out.at(0, 2, 0) == 3.0f);
    CHECK(out.at(0, 3, 3) == 0.0f);
}

TEST_CASE("convolve_same: 1x1 kernels scale, identity kernels pass through") {
    const Image img = random_image(5, 6, 2, 17);
    const Image doubled = convolve_same(img, Filter(1, {2.0}));
    for (std::size_t p = 0; p < img.pix.size(); ++p)
        CHECK(doubled.pix[p] == static_cast<float>(2.0 * static_cast<double>(img.pix[p])));

    Filter ident(3, std::vector<double>(9, 0.0));
    ident.at(1, 1) = 1.0;
    const Image same = convolve_same(img, ident);
    CHECK(same.pix == img.pix);

    Image zero(4, 4, 3);
    const Image still_zero = convolve_same(zero, Filter(3, std::vector<double>(9, 0.7)));
    for (float p : still_zero.pix) CHECK(p == 0.0f);
}

TEST_CASE("convolve_same rejects malformed kernels") {
    const Image img = random_image(4, 4, 1, 1);
    CHECK_THROWS_AS(convolve_same(img, Filter(2, std::vector<double>(4, 0.1))),
                    std::invalid_argument);
    CHECK_THROWS_AS(convolve_same(img, Filter(0, {})), std::invalid_argument);
    CHECK_THROWS_AS(convolve_same(img, Filter(3, std::vector<double>(8, 0.1))),
                    std::invalid_argument);
}

TEST_CASE("fast convolution matches the nested-loop oracle bitwise") {
    struct Shape { int h, w, c, k; };
    const Shape shapes[] = {{5, 7, 3, 3}, {12, 12, 3, 5}, {9, 4, 2, 3},
                            {1, 1, 1, 3}, {3, 3, 1, 5},   {8, 8, 1, 7}};
    std::uint64_t seed = 100;
    for (const Shape& s : shapes) {
        for (int rep = 0; rep < 4; ++rep) {
            const Image img = random_image(s.h, s.w, s.c, seed++);
            const Filter f = generate_filter(seed++, s.k, 0.3);
            const Image fast = convolve_same(img, f);
            const Image ref = conv_oracle(img, f);
            REQUIRE(fast.pix.size() == ref.pix.size());
            for (std::size_t p = 0; p < fast.pix.size(); ++p) CHECK(fast.pix[p] == ref.pix[p]);
        }
    }
}

TEST_CASE("rescale_max divides by the global maximum") {
    Image img(1, 3, 1);
    img.pix = {0.2f, 0.5f, 1.5f};
    const Image out = rescale_max(img);
    CHECK(out.pix[0] == 0.2f / 1.5f);
    CHECK(out.pix[1] == 0.5f / 1.5f);
    CHECK(out.pix[2] == 1.0f);

    // The max is taken across channels, not per channel.
    Image two(1, 2, 2);
    two.pix = {0.5f, 1.0f, 2.0f, 4.0f};
    const Image tout = rescale_max(two);
    CHECK(tout.pix[0] == 0.125f);
    CHECK(tout.pix[3] == 1.0f);
}

TEST_CASE("rescale_max edge cases: all-zero passes, max-one is a no-op, negatives reject") {
    Image zero(2, 2, 1);
    CHECK(rescale_max(zero).pix == zero.pix);

    Image pinned(1, 3, 1);
    pinned.pix = {0.25f, 1.0f, 0.75f};
    CHECK(rescale_max(pinned).pix == pinned.pix);

    Image neg(1, 2, 1);
    neg.pix = {0.5f, -0.1f};
    CHECK_THROWS_AS(rescale_max(neg), std::invalid_argument);
}

TEST_CASE("cuda_poison_image rescales so the max is exactly one") {
    Image half(6, 6, 3);
    std::fill(half.pix.begin(), half.pix.end(), 0.5f);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Filter f = generate_filter(seed, 3, 0.3);
        const Image out = cuda_poison_image(half, f);
        CHECK(*std::max_element(out.pix.begin(), out.pix.end()) == 1.0f);
        // Composition equals the two explicit steps.
        const Image steps = rescale_max(convolve_same(half, f));
        CHECK(out.pix == steps.pix);
    }
    Image zero(4, 4, 1);
    const Image out = cuda_poison_image(zero, generate_filter(3, 3, 0.3));
    for (float p : out.pix) CHECK(p == 0.0f);
}

TEST_CASE("poison_dataset: fraction 0 is the identity, fraction 1 hits every image") {
    const LabeledDataset ds = make_dataset(10, 5, 4, 4, 1, 2);
    const FilterBank bank = generate_bank(FilterSpec{5, 3, 0.3, 7});

    const auto [none, none_mask] = poison_dataset(ds, bank, 0.0, 99);
    CHECK(none.pixels == ds.pixels);
    CHECK(none.provenance == "clean");
    CHECK(none_mask.count() == 0);

    const auto [all, all_mask] = poison_dataset(ds, bank, 1.0, 99);
    CHECK(all_mask.count() == ds.size());
    CHECK(all.provenance.rfind("poisoned(bank=", 0) == 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Image expect = cuda_poison_image(ds.get(i), bank.filters[ds.labels[i]]);
        CHECK(all.get(i).pix == expect.pix);
    }
}

TEST_CASE("poison_dataset: stratified selection takes floor(f * n_c) per class") {
    const LabeledDataset ds = make_dataset(100, 5, 4, 4, 1, 3);
    const FilterBank bank = generate_bank(FilterSpec{5, 3, 0.3, 7});
    const auto [mixed, mask] = poison_dataset(ds, bank, 0.2, 31);

    std::vector<int> per_class(5, 0);
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (mask.flags[i]) ++per_class[ds.labels[i]];
    for (int c : per_class) CHECK(c == 20);
    CHECK(mask.count() == 100);
    CHECK(mixed.provenance.rfind("mixed(bank=", 0) == 0);

    // Unpoisoned images are bit-identical to the input; poisoned ones match
    // the per-image composition.
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (mask.flags[i]) {
            const Image expect = cuda_poison_image(ds.get(i), bank.filters[ds.labels[i]]);
            CHECK(mixed.get(i).pix == expect.pix);
        } else {
            CHECK(mixed.get(i).pix == ds.get(i).pix);
        }
    }

    // Replay the documented selection rule: per-class members in dataset
    // order, shuffled by the class-derived stream, first floor(f*n) taken.
    for (int cls = 0; cls < 5; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == cls) members.push_back(i);
        Xoshiro256pp rng(derive_seed(31, static_cast<std::uint64_t>(cls)));
        rng.shuffle(members);
        for (std::size_t t = 0; t < members.size(); ++t)
            CHECK(static_cast<bool>(mask.flags[members[t]]) == (t < 20));
    }
}

TEST_CASE("poison_dataset is deterministic in its seed and thread-count invariant") {
    const LabeledDataset ds = make_dataset(20, 4, 5, 5, 3, 4);
    const FilterBank bank = generate_bank(FilterSpec{4, 3, 0.3, 8});

    const auto [a, am] = poison_dataset(ds, bank, 0.5, 7, 1);
    const auto [b, bm] = poison_dataset(ds, bank, 0.5, 7, 4);
    CHECK(a.pixels == b.pixels);
    CHECK(am.flags == bm.flags);

    const auto [c, cm] = poison_dataset(ds, bank, 0.5, 8, 1);
    CHECK(cm.flags != am.flags);
}

TEST_CASE("poison_dataset validates its arguments") {
    LabeledDataset ds = make_dataset(4, 2, 3, 3, 1, 5);
    const FilterBank bank = generate_bank(FilterSpec{2, 3, 0.3, 9});
    CHECK_THROWS_AS(poison_dataset(ds, bank, 1.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(poison_dataset(ds, bank, -0.1, 1), std::invalid_argument);

    ds.labels[0] = 2;  // outside the 2-class bank
    CHECK_THROWS_AS(poison_dataset(ds, bank, 0.5, 1), std::invalid_argument);
}

TEST_CASE("poison_testset applies the label's filter to every image") {
    const LabeledDataset ds = make_dataset(6, 3, 4, 5, 3, 6);
    const FilterBank bank = generate_bank(FilterSpec{3, 3, 0.3, 10});

    const LabeledDataset test = poison_testset(ds, bank);
    const auto [full, mask] = poison_dataset(ds, bank, 1.0, 0);
    CHECK(test.pixels == full.pixels);
    CHECK(test.provenance == full.provenance);

    // With a permuted bank, class i's images carry class (i+1)'s filter.
    const FilterBank cyc = cyclic_permute_bank(bank);
    const LabeledDataset perm = poison_testset(ds, cyc);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Filter& wrong = bank.filters[(ds.labels[i] + 1u) % 3u];
        const Image expect = cuda_poison_image(ds.get(i), wrong);
        CHECK(perm.get(i).pix == expect.pix);
    }

    LabeledDataset empty;
    empty.h = 4;
    empty.w = 4;
    empty.c = 1;
    empty.num_classes = 3;
    CHECK(poison_testset(empty, bank).size() == 0);
}

TEST_CASE("universal_blur applies one shared filter everywhere") {
    const LabeledDataset ds = make_dataset(5, 4, 6, 6, 3, 7);
    const Filter f = generate_filter(derive_seed(10, 4), 3, 0.3);
    const LabeledDataset out = universal_blur(ds, f);
    CHECK(out.provenance == "universal-blur");
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(out.get(i).pix == cuda_poison_image(ds.get(i), f).pix);
    const LabeledDataset threaded = universal_blur(ds, f, 4);
    CHECK(threaded.pixels == out.pixels);
}

TEST_CASE("random_blur_augment draws one fresh filter per call") {
    std::vector<Image> batch;
    for (std::uint64_t i = 0; i < 4; ++i) batch.push_back(random_image(5, 5, 3, 40 + i));
    batch.push_back(batch[0]);  // duplicate to prove the filter is shared

    const auto out = random_blur_augment(batch, 0.3, 3, 123);
    REQUIRE(out.size() == 5);
    const Filter f = generate_filter(123, 3, 0.3);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i].pix == cuda_poison_image(batch[i], f).pix);
    CHECK(out[4].pix == out[0].pix);

    const auto again = random_blur_augment(batch, 0.3, 3, 123);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].pix == out[i].pix);
    const auto other = random_blur_augment(batch, 0.3, 3, 124);
    CHECK(other[0].pix != out[0].pix);

    // p_b' = 0 degenerates to a pure shift plus rescale.
    const auto shifted = random_blur_augment(batch, 0.0, 3, 5);
    const Filter shift = generate_filter(5, 3, 0.0);
    CHECK(std::count(shift.values.begin(), shift.values.end(), 1.0) == 1);
    for (std::size_t i = 0; i < shifted.size(); ++i)
        CHECK(shifted[i].pix == cuda_poison_image(batch[i], shift).pix);
}

TEST_CASE("grayscale averages channels and keeps single-channel data intact") {
    LabeledDataset ds;
    ds.h = 1;
    ds.w = 1;
    ds.c = 3;
    ds.num_classes = 2;
    Image px(1, 1, 3);
    px.pix = {0.0f, 0.5f, 1.0f};
    ds.append(px, 0);
    const LabeledDataset gray = grayscale(ds);
    CHECK(gray.c == 1);
    CHECK(gray.pixels.size() == 1);
    CHECK(gray.pixels[0] == 0.5f);
    CHECK(gray.provenance == "clean+grayscale");

    const LabeledDataset mono = make_dataset(3, 2, 4, 4, 1, 8);
    const LabeledDataset same = grayscale(mono);
    CHECK(same.pixels == mono.pixels);
    CHECK(same.provenance == mono.provenance);
}
