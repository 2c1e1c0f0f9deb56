// Command-line front end: filter-bank generation, dataset poisoning,
// inspection, theory verification/contours, and the desk-scale demos.
//
// Conventions shared by every subcommand:
//   - a flat key=value --config file supplies defaults, flags override;
//   - every artifact-producing run writes a run.json manifest (resolved
//     parameters, input fingerprints, output list — no timestamps, and no
//     thread count, so reruns and different --threads are byte-identical);
//   - exit codes: 0 ok, 1 I/O, 2 usage, 3 format, 4 numeric.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "unlearn/classifier.hpp"
#include "unlearn/dat.hpp"
#include "unlearn/dataset_io.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/experiments.hpp"
#include "unlearn/filters.hpp"
#include "unlearn/gmm.hpp"
#include "unlearn/poison.hpp"
#include "unlearn/report.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/toeplitz.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace unlearn;

namespace {

constexpr const char* kToolName = "unlearn_cli";
constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------- config

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw usage_error("config line " + std::to_string(lineno) + " is not key=value: " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

long long parse_ll(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw usage_error("invalid integer for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw usage_error("invalid integer for " + key + ": '" + v + "'");
    }
}

double parse_f64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw usage_error("invalid number for " + key + ": '" + v + "'");
    }
}

std::vector<double> parse_f64_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::string cur;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == ',') {
            if (!cur.empty()) out.push_back(parse_f64(cur, key));
            cur.clear();
        } else {
            cur += v[i];
        }
    }
    if (out.empty()) throw usage_error(key + " needs at least one value");
    return out;
}

// Applies config-file values to options the command line left untouched.
class ParamSet {
  public:
    explicit ParamSet(std::map<std::string, std::string> cfg) : cfg_(std::move(cfg)) {}

    void bind_int(CLI::Option* opt, std::string key, int* var) {
        entries_.push_back({opt, std::move(key), [var](const std::string& v, const std::string& k) {
                                *var = static_cast<int>(parse_ll(v, k));
                            }});
    }
    void bind_u64(CLI::Option* opt, std::string key, std::uint64_t* var) {
        entries_.push_back({opt, std::move(key), [var](const std::string& v, const std::string& k) {
                                *var = parse_u64(v, k);
                            }});
    }
    void bind_f64(CLI::Option* opt, std::string key, double* var) {
        entries_.push_back({opt, std::move(key), [var](const std::string& v, const std::string& k) {
                                *var = parse_f64(v, k);
                            }});
    }
    void bind_str(CLI::Option* opt, std::string key, std::string* var) {
        entries_.push_back({opt, std::move(key), [var](const std::string& v, const std::string&) {
                                *var = v;
                            }});
    }

    void finalize() {
        for (const Entry& e : entries_) {
            if (e.opt->count() > 0) continue;
            const auto it = cfg_.find(e.key);
            if (it != cfg_.end()) e.apply(it->second, e.key);
        }
    }

  private:
    struct Entry {
        CLI::Option* opt;
        std::string key;
        std::function<void(const std::string&, const std::string&)> apply;
    };
    std::map<std::string, std::string> cfg_;
    std::vector<Entry> entries_;
};

// ---------------------------------------------------------------- manifest

struct Manifest {
    std::string command;
    ordered_json config = ordered_json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    void add_input(const std::string& path) { inputs.push_back(path); }
    void add_output(const std::string& path) { outputs.push_back(path); }

    // run.json lands in the directory of the primary output.
    void write(const std::string& primary_output) const {
        ordered_json j;
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config"] = config;
        ordered_json ins = ordered_json::object();
        for (const std::string& p : inputs) ins[p] = fingerprint_hex(file_fingerprint(p));
        j["inputs"] = std::move(ins);
        j["outputs"] = outputs;
        const fs::path dir = fs::path(primary_output).parent_path();
        const fs::path path = (dir.empty() ? fs::path(".") : dir) / "run.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write " + path.string());
        out << j.dump(2) << "\n";
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << text;
}

// ---------------------------------------------------------------- helpers

std::vector<std::string> expand_dataset_paths(const std::string& in) {
    if (!fs::exists(in)) throw io_error("input path does not exist: " + in);
    if (!fs::is_directory(in)) return {in};
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".bin") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw usage_error("no .bin files in directory: " + in);
    return paths;
}

LabeledDataset load_dataset(const std::string& in, const std::string& format,
                            std::vector<std::string>* input_files) {
    if (format == "uds") {
        input_files->push_back(in);
        return read_uds(in);
    }
    if (format == "cifar10" || format == "cifar100") {
        const std::vector<std::string> paths = expand_dataset_paths(in);
        input_files->insert(input_files->end(), paths.begin(), paths.end());
        return read_cifar_binary(paths,
                                 format == "cifar10" ? CifarFormat::kCifar10 : CifarFormat::kCifar100);
    }
    throw usage_error("unknown --format '" + format + "' (expected uds, cifar10 or cifar100)");
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("UNLEARN_THREADS")) {
        const long long v = parse_ll(env, "UNLEARN_THREADS");
        if (v >= 1) return static_cast<int>(v);
    }
    return 1;
}

std::string scalar_lines(const ExperimentReport& rep) {
    std::string out;
    char buf[128];
    for (const auto& [k, v] : rep.scalars) {
        std::snprintf(buf, sizeof buf, "%s = %.6f\n", k.c_str(), v);
        out += buf;
    }
    return out;
}

// Writes report JSON (and CSV next to it when tables exist), prints the
// scalar summary, and emits the manifest.
void emit_report(const ExperimentReport& rep, const std::string& out, Manifest& manifest) {
    if (out.empty()) throw usage_error("--out is required");
    write_text(out, report_to_json(rep));
    manifest.add_output(out);
    std::fputs(scalar_lines(rep).c_str(), stdout);
    if (!rep.tables.empty()) {
        const std::string csv_path = fs::path(out).replace_extension(".csv").string();
        std::string csv;
        for (const auto& t : rep.tables) csv += table_to_csv(t);
        write_text(csv_path, csv);
        manifest.add_output(csv_path);
        std::printf("wrote %s\n", csv_path.c_str());
    }
    std::printf("wrote %s\n", out.c_str());
    manifest.write(out);
}

// ---------------------------------------------------------------- theory

int cmd_theory_verify(std::uint64_t seed) {
    bool all_ok = true;
    auto check = [&](const std::string& name, bool ok, double value) {
        std::printf("%s: %s (%.3g)\n", ok ? "ok" : "FAIL", name.c_str(), value);
        all_ok = all_ok && ok;
    };

    {  // eigensystem reconstruction on random draws
        Xoshiro256pp rng(derive_seed(seed, 0));
        double worst_recon = 0.0, worst_ortho = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 1 + static_cast<int>(rng.uniform_int(128));
            const double a = rng.uniform_below(0.5);
            const auto [q, lam] = toeplitz_eigensystem(d, a);
            const Eigen::MatrixXd t = SymTriToeplitz(d, a).dense();
            worst_recon = std::max(worst_recon, (q * lam.asDiagonal() * q - t).norm());
            worst_ortho = std::max(worst_ortho, (q * q - Eigen::MatrixXd::Identity(d, d)).norm());
        }
        check("toeplitz reconstruction (100 draws)", worst_recon <= 1e-8, worst_recon);
        check("sine basis orthogonality", worst_ortho <= 1e-8, worst_ortho);
    }

    {  // trace identities for matrix powers
        Xoshiro256pp rng(derive_seed(seed, 1));
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int d = 2 + static_cast<int>(rng.uniform_int(63));
            const double am = rng.uniform_below(0.5), ap = rng.uniform_below(0.5);
            const Eigen::MatrixXd m1 = SymTriToeplitz(d, ap).dense();
            const Eigen::MatrixXd m2 = SymTriToeplitz(d, am).dense();
            const Eigen::VectorXd l1 = SymTriToeplitz(d, ap).eigenvalues();
            const Eigen::VectorXd l2 = SymTriToeplitz(d, am).eigenvalues();
            Eigen::MatrixXd p1 = Eigen::MatrixXd::Identity(d, d), p2 = p1;
            Eigen::VectorXd e1 = Eigen::VectorXd::Ones(d), e2 = e1;
            for (int n = 1; n <= 3; ++n) {
                p1 = p1 * m1;
                p2 = p2 * m2;
                e1 = e1.cwiseProduct(l1);
                e2 = e2.cwiseProduct(l2);
                worst = std::max(worst, std::abs((p1 + p2).trace() - (e1.sum() + e2.sum())));
                worst = std::max(worst, std::abs((p1 - p2).trace() - (e1.sum() - e2.sum())));
            }
        }
        check("trace power identities", worst <= 1e-8, worst);
    }

    {  // clean Bayes accuracy against the Gaussian CDF
        const int n = 100000;
        const double norms[] = {0.0, 1.0, 2.5, 5.0};
        for (int i = 0; i < 4; ++i) {
            const Eigen::VectorXd mu = make_mu(norms[i], 100, MuDirection::kUniform);
            const QuadraticBoundary qb = quadratic_boundary(mu, 0.0, 0.0);
            const McResult mc = mc_clean_accuracy(qb, mu, n, derive_seed(seed, 10 + static_cast<std::uint64_t>(i)));
            const double phi = clean_bayes_accuracy(mu);
            const double se = std::sqrt(std::max(mc.estimate * (1.0 - mc.estimate), phi * (1.0 - phi)) / n);
            char name[64];
            std::snprintf(name, sizeof name, "clean accuracy vs Phi at |mu|=%.1f", norms[i]);
            check(name, std::abs(mc.estimate - phi) <= 3.0 * se, std::abs(mc.estimate - phi));
        }
    }

    if (!all_ok) throw numeric_error("theory verification failed");
    std::printf("all theory checks passed\n");
    return kExitOk;
}

int cmd_theory_bound(double mu_norm, double a_minus, double a_plus, int d, int points,
                     std::uint64_t seed, const std::string& direction) {
    const MuDirection dir = direction == "eigen" ? MuDirection::kEigenvector : MuDirection::kUniform;
    if (direction != "uniform" && direction != "eigen")
        throw usage_error("--direction must be uniform or eigen");
    const Eigen::VectorXd mu = make_mu(mu_norm, d, dir);
    const QuadraticBoundary qb = quadratic_boundary(mu, a_minus, a_plus);
    const BoundResult b = theorem_bound(qb);
    const McResult mc = mc_clean_accuracy(qb, mu, points, derive_seed(seed, 0));
    std::printf("bound = %.6f (p1 = %.6g at t1 = %g, p2 = %.6g at t2 = %g)\n", b.bound, b.p1, b.t1, b.p2,
                b.t2);
    std::printf("gamma1 = %.6g (%s), gamma2 = %.6g (%s), grid_feasible = %s\n", b.gamma1,
                b.gamma1_pos ? "effective" : "inactive", b.gamma2, b.gamma2_pos ? "effective" : "inactive",
                b.grid_feasible ? "yes" : "no");
    std::printf("mc = %.6f (se = %.6f, n = %d)\n", mc.estimate, mc.se, points);
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------- main

static int run(int argc, char** argv) {
    // The config file feeds defaults to every option below, so it has to be
    // found before CLI11 parses anything.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string tok = argv[i];
        if (tok == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (tok.rfind("--config=", 0) == 0) config_path = tok.substr(9);
    }
    ParamSet params(config_path.empty() ? std::map<std::string, std::string>{} : load_config_file(config_path));

    CLI::App app{"Class-keyed convolution poisoning toolkit (filters, datasets, theory, demos)"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "Flat key=value defaults; flags override; unknown keys ignored");
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "Worker threads (env UNLEARN_THREADS is the fallback)");

    // genfilters
    auto* gen = app.add_subcommand("genfilters", "Generate a class-keyed filter bank");
    int g_classes = 0, g_k = 3;
    double g_pb = 0.3;
    std::uint64_t g_seed = 1;
    std::string g_out;
    params.bind_int(gen->add_option("--classes", g_classes, "Number of classes (required)"), "classes", &g_classes);
    params.bind_int(gen->add_option("--k", g_k, "Filter size (odd)"), "k", &g_k);
    params.bind_f64(gen->add_option("--pb", g_pb, "Blur parameter p_b"), "pb", &g_pb);
    params.bind_u64(gen->add_option("--seed", g_seed, "Master seed"), "seed", &g_seed);
    params.bind_str(gen->add_option("-o,--out", g_out, "Bank output path (required)"), "out", &g_out);

    // poison
    auto* poi = app.add_subcommand("poison", "Poison a dataset with a filter bank");
    std::string p_in, p_format = "uds", p_bank, p_out, p_mask;
    double p_fraction = 1.0;
    std::uint64_t p_seed = 1;
    params.bind_str(poi->add_option("--in", p_in, "Input dataset (UDS file, CIFAR file or directory)"), "in", &p_in);
    params.bind_str(poi->add_option("--format", p_format, "uds | cifar10 | cifar100"), "format", &p_format);
    params.bind_str(poi->add_option("--bank", p_bank, "Filter bank path (required)"), "bank", &p_bank);
    params.bind_f64(poi->add_option("--fraction", p_fraction, "Poisoned fraction per class"), "fraction", &p_fraction);
    params.bind_u64(poi->add_option("--seed", p_seed, "Subset-selection seed"), "seed", &p_seed);
    params.bind_str(poi->add_option("-o,--out", p_out, "Output UDS path (required)"), "out", &p_out);
    params.bind_str(poi->add_option("--mask", p_mask, "Mask sidecar path (default <out>.mask.json)"), "mask", &p_mask);

    // inspect
    auto* ins = app.add_subcommand("inspect", "Print a JSON summary of a dataset or bank");
    std::string i_in, i_format = "uds";
    params.bind_str(ins->add_option("--in", i_in, "Input path"), "in", &i_in);
    params.bind_str(ins->add_option("--format", i_format, "uds | cifar10 | cifar100 | bank"), "format", &i_format);

    // theory
    auto* theo = app.add_subcommand("theory", "Verification suite, pointwise bounds, contour grids");
    std::string t_mode;
    theo->add_option("mode", t_mode, "verify | contour | bound")->required();
    double t_mu_norm = 1.0, t_a_minus = 0.0, t_a_plus = 0.0;
    int t_d = 100, t_grid = 30, t_points = 1000, t_bound_points = 100000;
    std::uint64_t t_seed = 1;
    std::string t_direction = "uniform", t_out;
    params.bind_f64(theo->add_option("--mu-norm", t_mu_norm, "Mean norm |mu|"), "mu-norm", &t_mu_norm);
    params.bind_f64(theo->add_option("--a-minus", t_a_minus, "Class -1 filter parameter"), "a-minus", &t_a_minus);
    params.bind_f64(theo->add_option("--a-plus", t_a_plus, "Class +1 filter parameter"), "a-plus", &t_a_plus);
    params.bind_int(theo->add_option("--d", t_d, "Dimension"), "d", &t_d);
    params.bind_int(theo->add_option("--grid", t_grid, "Contour grid edge"), "grid", &t_grid);
    params.bind_int(theo->add_option("--points", t_points, "MC points per contour cell"), "points", &t_points);
    params.bind_int(theo->add_option("--bound-points", t_bound_points, "MC points for theory bound"), "bound-points", &t_bound_points);
    params.bind_u64(theo->add_option("--seed", t_seed, "Seed"), "seed", &t_seed);
    params.bind_str(theo->add_option("--direction", t_direction, "mu direction: uniform | eigen"), "direction", &t_direction);
    params.bind_str(theo->add_option("-o,--out", t_out, "Contour CSV output path"), "out", &t_out);

    // demo
    auto* demo = app.add_subcommand("demo", "Desk-scale experiments: shortcut | protection | dat | grayscale | blur-defense");
    std::string d_scenario;
    demo->add_option("scenario", d_scenario, "shortcut | protection | dat | grayscale | blur-defense")->required();
    std::uint64_t d_seed = 11, d_bank_seed = 14;
    std::string d_arch = "linear", d_out, d_fractions = "0,0.2,0.4,0.6,0.8,1.0", d_pbs = "0.1,0.3";
    int d_k = 3, d_epochs = 30, d_n_train = 800, d_n_test = 1000, d_dat_k = 3, d_dat_steps = 10, d_hidden = 64;
    double d_pb = 0.3, d_clamp = 5.0, d_inner_lr = 0.1;
    params.bind_u64(demo->add_option("--seed", d_seed, "Task/training seed"), "seed", &d_seed);
    params.bind_u64(demo->add_option("--bank-seed", d_bank_seed, "Filter bank master seed"), "bank-seed", &d_bank_seed);
    params.bind_str(demo->add_option("--arch", d_arch, "linear | mlp"), "arch", &d_arch);
    params.bind_int(demo->add_option("--hidden", d_hidden, "MLP width"), "hidden", &d_hidden);
    params.bind_int(demo->add_option("--k", d_k, "Poison filter size"), "k", &d_k);
    params.bind_f64(demo->add_option("--pb", d_pb, "Poison blur parameter"), "pb", &d_pb);
    params.bind_int(demo->add_option("--epochs", d_epochs, "Training epochs"), "epochs", &d_epochs);
    params.bind_int(demo->add_option("--n-train", d_n_train, "Task training samples"), "n-train", &d_n_train);
    params.bind_int(demo->add_option("--n-test", d_n_test, "Task test samples"), "n-test", &d_n_test);
    params.bind_str(demo->add_option("--fractions", d_fractions, "Protection fractions (comma list)"), "fractions", &d_fractions);
    params.bind_str(demo->add_option("--pbs", d_pbs, "Blur-defense p_b' values (comma list)"), "pbs", &d_pbs);
    params.bind_int(demo->add_option("--dat-k", d_dat_k, "DAT deconv filter size"), "dat-k", &d_dat_k);
    params.bind_f64(demo->add_option("--clamp", d_clamp, "DAT clamp C"), "clamp", &d_clamp);
    params.bind_int(demo->add_option("--steps", d_dat_steps, "DAT inner steps"), "steps", &d_dat_steps);
    params.bind_f64(demo->add_option("--inner-lr", d_inner_lr, "DAT inner step size"), "inner-lr", &d_inner_lr);
    params.bind_str(demo->add_option("-o,--out", d_out, "Report JSON path (default demo_<scenario>.json)"), "out", &d_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    params.finalize();
    const int threads = resolve_threads(threads_flag);

    if (*gen) {
        if (g_classes <= 0) throw usage_error("--classes is required");
        if (g_out.empty()) throw usage_error("--out is required");
        const FilterSpec spec{g_classes, g_k, g_pb, g_seed};
        const FilterBank bank = generate_bank(spec);
        save_bank(bank, g_out);
        std::printf("fingerprint %s\n", fingerprint_hex(bank_fingerprint(bank)).c_str());
        std::printf("wrote %s\n", g_out.c_str());
        Manifest m;
        m.command = "genfilters";
        m.config = {{"classes", g_classes}, {"k", g_k}, {"pb", g_pb}, {"seed", g_seed}, {"out", g_out}};
        m.add_output(g_out);
        m.write(g_out);
        return kExitOk;
    }

    if (*poi) {
        if (p_in.empty()) throw usage_error("--in is required");
        if (p_bank.empty()) throw usage_error("--bank is required");
        if (p_out.empty()) throw usage_error("--out is required");
        if (p_mask.empty()) p_mask = p_out + ".mask.json";
        std::vector<std::string> input_files;
        const LabeledDataset ds = load_dataset(p_in, p_format, &input_files);
        const FilterBank bank = load_bank(p_bank);
        input_files.push_back(p_bank);
        auto [poisoned, mask] = poison_dataset(ds, bank, p_fraction, p_seed, threads);
        write_uds(poisoned, p_out);

        std::vector<std::size_t> per_class(static_cast<std::size_t>(bank.spec.num_classes), 0);
        for (std::size_t i = 0; i < mask.flags.size(); ++i)
            if (mask.flags[i]) ++per_class[ds.labels[i]];
        ordered_json mj;
        mj["fraction"] = mask.fraction;
        mj["seed"] = mask.seed;
        mj["total"] = ds.size();
        mj["poisoned"] = mask.count();
        mj["per_class"] = per_class;
        write_text(p_mask, mj.dump(2) + "\n");

        std::printf("poisoned %zu/%zu images\n", mask.count(), ds.size());
        std::printf("wrote %s\n", p_out.c_str());
        std::printf("wrote %s\n", p_mask.c_str());
        Manifest m;
        m.command = "poison";
        m.config = {{"in", p_in},   {"format", p_format},   {"bank", p_bank}, {"fraction", p_fraction},
                    {"seed", p_seed}, {"out", p_out}, {"mask", p_mask}};
        m.inputs = input_files;
        m.add_output(p_out);
        m.add_output(p_mask);
        m.write(p_out);
        return kExitOk;
    }

    if (*ins) {
        if (i_in.empty()) throw usage_error("--in is required");
        if (i_format == "bank") {
            std::fputs(bank_to_json(load_bank(i_in)).c_str(), stdout);
        } else {
            std::vector<std::string> input_files;
            const LabeledDataset ds = load_dataset(i_in, i_format, &input_files);
            std::fputs(summary_to_json(dataset_summary(ds)).c_str(), stdout);
        }
        return kExitOk;
    }

    if (*theo) {
        if (t_mode == "verify") return cmd_theory_verify(t_seed);
        if (t_mode == "bound")
            return cmd_theory_bound(t_mu_norm, t_a_minus, t_a_plus, t_d, t_bound_points, t_seed, t_direction);
        if (t_mode != "contour")
            throw usage_error("unknown theory mode '" + t_mode + "' (expected verify, contour or bound)");
        if (t_out.empty()) throw usage_error("--out is required for theory contour");
        const MuDirection dir = t_direction == "eigen" ? MuDirection::kEigenvector : MuDirection::kUniform;
        if (t_direction != "uniform" && t_direction != "eigen")
            throw usage_error("--direction must be uniform or eigen");
        const ContourGrid grid =
            contour_grid(t_mu_norm, t_d, t_grid, t_points, t_seed, default_t_grid(), dir, threads);
        write_text(t_out, contour_to_csv(grid));
        std::printf("wrote %s (%zu cells)\n", t_out.c_str(), grid.cells.size());
        Manifest m;
        m.command = "theory contour";
        m.config = {{"mu-norm", t_mu_norm}, {"d", t_d},       {"grid", t_grid},
                    {"points", t_points},   {"seed", t_seed}, {"direction", t_direction},
                    {"out", t_out}};
        m.add_output(t_out);
        m.write(t_out);
        return kExitOk;
    }

    // demo scenarios
    const Arch arch = d_arch == "mlp" ? Arch::kMlp : Arch::kLinear;
    if (d_arch != "linear" && d_arch != "mlp") throw usage_error("--arch must be linear or mlp");
    TaskParams task_params;
    task_params.n_train = d_n_train;
    task_params.n_test = d_n_test;
    TrainConfig cfg;
    cfg.epochs = d_epochs;
    cfg.hidden = d_hidden;
    cfg.seed = d_seed;
    if (d_out.empty()) d_out = "demo_" + d_scenario + ".json";

    Manifest m;
    m.command = "demo " + d_scenario;
    m.config = {{"scenario", d_scenario}, {"seed", d_seed},     {"bank-seed", d_bank_seed},
                {"arch", d_arch},         {"hidden", d_hidden}, {"k", d_k},
                {"pb", d_pb},             {"epochs", d_epochs}, {"n-train", d_n_train},
                {"n-test", d_n_test},     {"out", d_out}};

    const auto [clean_train, clean_test] = make_template_task(d_seed, task_params);
    const FilterSpec bank_spec{task_params.num_classes, d_k, d_pb, d_bank_seed};

    if (d_scenario == "shortcut") {
        emit_report(shortcut_report(clean_train, clean_test, generate_bank(bank_spec), arch, cfg, threads),
                    d_out, m);
    } else if (d_scenario == "protection") {
        m.config["fractions"] = d_fractions;
        const std::vector<double> fractions = parse_f64_list(d_fractions, "--fractions");
        emit_report(
            protection_sweep(clean_train, clean_test, generate_bank(bank_spec), fractions, arch, cfg, threads),
            d_out, m);
    } else if (d_scenario == "dat") {
        m.config["dat-k"] = d_dat_k;
        m.config["clamp"] = d_clamp;
        m.config["steps"] = d_dat_steps;
        m.config["inner-lr"] = d_inner_lr;
        DATConfig dat;
        dat.k = d_dat_k;
        dat.clamp = d_clamp;
        dat.steps = d_dat_steps;
        dat.inner_lr = d_inner_lr;
        emit_report(dat_demo(clean_train, clean_test, generate_bank(bank_spec), arch, cfg, dat, threads),
                    d_out, m);
    } else if (d_scenario == "grayscale") {
        emit_report(grayscale_check(clean_train, clean_test, generate_bank(bank_spec), arch, cfg, threads),
                    d_out, m);
    } else if (d_scenario == "blur-defense") {
        m.config["pbs"] = d_pbs;
        const std::vector<double> pbs = parse_f64_list(d_pbs, "--pbs");
        const LabeledDataset cuda_train =
            poison_dataset(clean_train, generate_bank(bank_spec), 1.0, cfg.seed, threads).first;
        emit_report(random_blur_defense_check(cuda_train, clean_test, pbs, arch, cfg), d_out, m);
    } else {
        throw usage_error("unknown demo scenario '" + d_scenario +
                          "' (expected shortcut, protection, dat, grayscale or blur-defense)");
    }
    return kExitOk;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const usage_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const format_error& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitFormat;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
}
