#include "unlearn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unlearn/poison.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::pair<LabeledDataset, LabeledDataset> make_template_task(std::uint64_t seed, const TaskParams& p) {
    if (p.h < 1 || p.w < 1 || p.c < 1) throw std::invalid_argument("make_template_task: bad shape");
    if (p.num_classes < 2) throw std::invalid_argument("make_template_task: need >= 2 classes");
    if (p.block < 1 || p.h % p.block != 0 || p.w % p.block != 0)
        throw std::invalid_argument("make_template_task: block must divide h and w");
    if (p.n_train % p.num_classes != 0 || p.n_test % p.num_classes != 0)
        throw std::invalid_argument("make_template_task: sizes must split evenly across classes");

    const int gh = p.h / p.block, gw = p.w / p.block;
    Xoshiro256pp rng(derive_seed(seed, 0));

    // Shared base, kept as two components so each can be jittered per image:
    // a flat bed and a period-2 texture, one alternation pattern per channel.
    // Being period-2 makes the texture an eigenimage of any zero-padded
    // convolution (up to boundary effects), so a class-keyed filter re-weights
    // it by a class-specific amplitude — the shortcut — while block-mean
    // features never see it (each even-sized block sums it to zero). The
    // first block of channel 0 is a brighter, template-free anchor: it is
    // where the per-image maximum lands before and after any blur, which
    // keeps the poisoning rescale factor class-independent.
    const std::size_t npx = static_cast<std::size_t>(p.c) * p.h * p.w;
    std::vector<double> bed(npx), texpat(npx);
    {
        std::size_t t = 0;
        for (int ch = 0; ch < p.c; ++ch)
            for (int i = 0; i < p.h; ++i)
                for (int j = 0; j < p.w; ++j, ++t) {
                    const bool anchor = ch == 0 && i < p.block && j < p.block;
                    bed[t] = anchor ? 0.70 : 0.45;
                    const int flip = ch % 3 == 0 ? i + j : ch % 3 == 1 ? i : j;
                    texpat[t] = p.tex_amp * (flip % 2 == 0 ? 1.0 : -1.0);
                }
    }

    // Per-class block templates, zero on the anchor block, normalized to peak
    // |delta|. Within each block the template is a mid-frequency dipole
    // (+,+,0,0,-,- along one axis, the axis alternating by channel) rather
    // than a constant: a filter's off-center taps shift the dipole out of
    // phase, so the usable class signal attenuates roughly in proportion to
    // total tap mass. That keeps strong poisoning strictly harder to undo
    // than weak poisoning. The dipole has no period-2 component, so it stays
    // invisible to the texture channel.
    std::vector<std::vector<double>> tmpl(static_cast<std::size_t>(p.num_classes));
    for (int cls = 0; cls < p.num_classes; ++cls) {
        std::vector<double> grid(static_cast<std::size_t>(p.c) * gh * gw);
        double peak = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            grid[g] = g == 0 ? 0.0 : rng.normal();
            peak = std::max(peak, std::abs(grid[g]));
        }
        std::vector<double>& t = tmpl[static_cast<std::size_t>(cls)];
        t.resize(npx);
        std::size_t px = 0;
        for (int ch = 0; ch < p.c; ++ch)
            for (int i = 0; i < p.h; ++i)
                for (int j = 0; j < p.w; ++j, ++px) {
                    const std::size_t g = (static_cast<std::size_t>(ch) * gh + static_cast<std::size_t>(i) / p.block) * gw +
                                          static_cast<std::size_t>(j) / p.block;
                    const int along = (ch % 2 == 0 ? j : i) % p.block;
                    const int third = 3 * along / p.block;  // 0, 1, 2 across the block
                    const double dip = third == 0 ? 1.0 : third == 2 ? -1.0 : 0.0;
                    t[px] = p.delta * grid[g] * dip / peak;
                }
    }

    auto draw = [&](int n_total, std::uint64_t stream) {
        Xoshiro256pp drng(derive_seed(seed, stream));
        const int n_per = n_total / p.num_classes;
        LabeledDataset ds;
        ds.h = p.h;
        ds.w = p.w;
        ds.c = p.c;
        ds.num_classes = p.num_classes;
        ds.pixels.resize(static_cast<std::size_t>(n_total) * npx);
        ds.labels.resize(static_cast<std::size_t>(n_total));
        std::size_t at = 0;
        for (int cls = 0; cls < p.num_classes; ++cls) {
            const std::vector<double>& t = tmpl[static_cast<std::size_t>(cls)];
            for (int s = 0; s < n_per; ++s, ++at) {
                ds.labels[at] = static_cast<std::uint16_t>(cls);
                float* out = ds.image_ptr(at);
                // Brightness and per-channel contrast jitter (drawn before the
                // pixel noise: one bed gain, then one texture gain per channel).
                // They give every label-free direction variance, so no
                // classifier can lean on those directions -- that is what lets
                // a model trained on blurred data carry over to clean images.
                const double g = 0.9 + 0.2 * drng.uniform();
                std::vector<double> a(static_cast<std::size_t>(p.c));
                for (double& v : a)
                    v = 1.0 - p.tex_jitter + 2.0 * p.tex_jitter * drng.uniform();
                const std::size_t plane = static_cast<std::size_t>(p.h) * p.w;
                for (std::size_t px = 0; px < npx; ++px)
                    out[px] = static_cast<float>(std::clamp(
                        g * bed[px] + a[px / plane] * texpat[px] + t[px] + p.sigma * drng.normal(), 0.0, 1.0));
            }
        }
        // Shuffle samples with the same stream so class order is not a cue.
        std::vector<int> perm(static_cast<std::size_t>(n_total));
        std::iota(perm.begin(), perm.end(), 0);
        drng.shuffle(perm);
        LabeledDataset out = ds;
        for (int i = 0; i < n_total; ++i) {
            const int src = perm[static_cast<std::size_t>(i)];
            out.labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(src)];
            std::copy_n(ds.image_ptr(src), npx, out.image_ptr(i));
        }
        return out;
    };

    return {draw(p.n_train, 1), draw(p.n_test, 2)};
}

namespace {

double train_and_test(const LabeledDataset& train_ds, const LabeledDataset& test_ds, Arch arch,
                      const TrainConfig& cfg) {
    return evaluate(train(train_ds, arch, cfg), test_ds);
}

}  // namespace

ExperimentReport shortcut_report(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                 const FilterBank& bank, Arch arch, const TrainConfig& cfg, int threads) {
    ExperimentReport rep;
    rep.name = "shortcut_report";
    const double baseline = train_and_test(clean_train, clean_test, arch, cfg);

    auto [poisoned, mask] = poison_dataset(clean_train, bank, 1.0, cfg.seed, threads);
    const ClassifierModel model = train(poisoned, arch, cfg);
    const double clean_acc = evaluate(model, clean_test);
    const double cuda_acc = evaluate(model, poison_testset(clean_test, bank, threads));
    const double perm_acc = evaluate(model, poison_testset(clean_test, cyclic_permute_bank(bank), threads));

    const Filter universal =
        generate_filter(derive_seed(bank.spec.master_seed, static_cast<std::uint64_t>(bank.spec.num_classes)),
                        bank.spec.kernel_size, bank.spec.blur);
    const double uni_acc =
        train_and_test(universal_blur(clean_train, universal, threads), clean_test, arch, cfg);

    rep.add_scalar("clean_baseline", baseline);
    rep.add_scalar("clean_test_accuracy", clean_acc);
    rep.add_scalar("cuda_test_accuracy", cuda_acc);
    rep.add_scalar("permuted_test_accuracy", perm_acc);
    rep.add_scalar("universal_blur_clean_accuracy", uni_acc);
    rep.add_note("bank " + fingerprint_hex(bank_fingerprint(bank)));
    return rep;
}

ExperimentReport protection_sweep(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                  const FilterBank& bank, const std::vector<double>& fractions, Arch arch,
                                  const TrainConfig& cfg, int threads) {
    ExperimentReport rep;
    rep.name = "protection_sweep";
    ReportTable table;
    table.name = "sweep";
    table.columns = {"fraction", "mixed_accuracy", "clean_complement_accuracy"};
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double f = fractions[fi];
        auto [mixed, mask] = poison_dataset(clean_train, bank, f, derive_seed(cfg.seed, 1000 + fi), threads);
        const double mixed_acc = train_and_test(mixed, clean_test, arch, cfg);

        LabeledDataset complement;
        complement.h = clean_train.h;
        complement.w = clean_train.w;
        complement.c = clean_train.c;
        complement.num_classes = clean_train.num_classes;
        for (std::size_t i = 0; i < clean_train.size(); ++i)
            if (!mask.flags[i]) complement.append(clean_train.get(i), clean_train.labels[i]);
        const double comp_acc = complement.size() == 0
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : train_and_test(complement, clean_test, arch, cfg);
        table.rows.push_back({f, mixed_acc, comp_acc});
    }
    rep.tables.push_back(std::move(table));
    rep.add_note("bank " + fingerprint_hex(bank_fingerprint(bank)));
    return rep;
}

ExperimentReport dat_demo(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                          const FilterBank& bank, Arch arch, const TrainConfig& cfg, const DATConfig& dat,
                          int threads) {
    ExperimentReport rep;
    rep.name = "dat_demo";
    const double baseline = train_and_test(clean_train, clean_test, arch, cfg);
    auto [poisoned, mask] = poison_dataset(clean_train, bank, 1.0, cfg.seed, threads);
    const double erm_acc = train_and_test(poisoned, clean_test, arch, cfg);
    const DATResult res = dat_train(poisoned, clean_test, arch, cfg, dat);
    const double final_acc = res.test_accuracy.back();
    const double gap = baseline - erm_acc;
    rep.add_scalar("clean_baseline", baseline);
    rep.add_scalar("erm_clean_test", erm_acc);
    rep.add_scalar("dat_final_clean_test", final_acc);
    rep.add_scalar("recovered_fraction", gap > 0.0 ? (final_acc - erm_acc) / gap
                                                   : std::numeric_limits<double>::quiet_NaN());
    rep.add_trace("dat_clean_test", res.test_accuracy);
    rep.add_note("bank " + fingerprint_hex(bank_fingerprint(bank)));
    return rep;
}

ExperimentReport grayscale_check(const LabeledDataset& clean_train, const LabeledDataset& clean_test,
                                 const FilterBank& bank, Arch arch, const TrainConfig& cfg, int threads) {
    ExperimentReport rep;
    rep.name = "grayscale_check";
    const LabeledDataset gray_train = grayscale(clean_train);
    const LabeledDataset gray_test = grayscale(clean_test);
    const double baseline = train_and_test(gray_train, gray_test, arch, cfg);
    auto [poisoned, mask] = poison_dataset(clean_train, bank, 1.0, cfg.seed, threads);
    const double cuda_acc = train_and_test(grayscale(poisoned), gray_test, arch, cfg);
    rep.add_scalar("grayscale_clean_baseline", baseline);
    rep.add_scalar("grayscale_cuda_accuracy", cuda_acc);
    rep.add_note("bank " + fingerprint_hex(bank_fingerprint(bank)));
    return rep;
}

ExperimentReport random_blur_defense_check(const LabeledDataset& cuda_train, const LabeledDataset& clean_test,
                                           const std::vector<double>& p_b_primes, Arch arch,
                                           const TrainConfig& cfg) {
    ExperimentReport rep;
    rep.name = "random_blur_defense_check";
    rep.add_scalar("erm_clean_test", train_and_test(cuda_train, clean_test, arch, cfg));
    ReportTable table;
    table.name = "defense";
    table.columns = {"p_b_prime", "clean_test_accuracy"};
    for (std::size_t pi = 0; pi < p_b_primes.size(); ++pi) {
        const double pb = p_b_primes[pi];
        const std::uint64_t aug_seed = derive_seed(cfg.seed, 2000 + pi);
        const BatchHook hook = [pb, aug_seed](std::vector<Image>& batch, std::uint64_t counter) {
            batch = random_blur_augment(batch, pb, 3, derive_seed(aug_seed, counter));
        };
        const ClassifierModel model = train(cuda_train, arch, cfg, hook);
        table.rows.push_back({pb, evaluate(model, clean_test)});
    }
    rep.tables.push_back(std::move(table));
    return rep;
}

}  // namespace unlearn
