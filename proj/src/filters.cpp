#include "unlearn/filters.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void validate_spec(const FilterSpec& spec) {
    if (spec.num_classes < 1) throw std::invalid_argument("FilterSpec: num_classes must be >= 1");
    if (spec.kernel_size < 1 || spec.kernel_size % 2 == 0)
        throw std::invalid_argument("FilterSpec: kernel_size must be odd and positive");
    if (!(spec.blur >= 0.0)) throw std::invalid_argument("FilterSpec: blur p_b must be >= 0");
}

void validate_filter(const Filter& f, double p_b) {
    if (f.k < 1 || f.k % 2 == 0 || static_cast<int>(f.values.size()) != f.k * f.k)
        throw std::invalid_argument("Filter: malformed shape");
    int ones = 0;
    for (double v : f.values) {
        if (v == 1.0) {
            ++ones;
        } else if (!(v >= 0.0 && v <= p_b)) {
            throw std::invalid_argument("Filter: entry outside [0, p_b]");
        }
    }
    if (ones != 1) throw std::invalid_argument("Filter: must contain exactly one 1.0 entry");
}

Filter generate_filter(std::uint64_t class_seed, int k, double p_b) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("generate_filter: k must be odd and positive");
    if (!(p_b >= 0.0)) throw std::invalid_argument("generate_filter: p_b must be >= 0");
    Xoshiro256pp rng(class_seed);
    const int n = k * k;
    // Pinned draw order: unit-entry position first, then row-major fills.
    const auto one_pos = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    Filter f(k, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(n); ++idx) {
        f.values[idx] = idx == one_pos ? 1.0 : rng.uniform_below(p_b);
    }
    return f;
}

FilterBank generate_bank(const FilterSpec& spec) {
    validate_spec(spec);
    FilterBank bank;
    bank.spec = spec;
    bank.filters.reserve(static_cast<std::size_t>(spec.num_classes));
    for (int i = 0; i < spec.num_classes; ++i) {
        bank.filters.push_back(generate_filter(derive_seed(spec.master_seed, static_cast<std::uint64_t>(i)),
                                               spec.kernel_size, spec.blur));
    }
    return bank;
}

FilterBank permute_bank(const FilterBank& bank, const std::vector<int>& perm) {
    const int K = static_cast<int>(bank.filters.size());
    if (static_cast<int>(perm.size()) != K) throw std::invalid_argument("permute_bank: wrong permutation length");
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    for (int p : perm) {
        if (p < 0 || p >= K || seen[static_cast<std::size_t>(p)])
            throw std::invalid_argument("permute_bank: not a bijection on [0, K)");
        seen[static_cast<std::size_t>(p)] = true;
    }
    FilterBank out;
    out.spec = bank.spec;
    out.filters.reserve(static_cast<std::size_t>(K));
    std::ostringstream note;
    note << "permuted[";
    for (int i = 0; i < K; ++i) {
        out.filters.push_back(bank.filters[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
        note << (i ? "," : "") << perm[static_cast<std::size_t>(i)];
    }
    note << "]";
    out.note = bank.note.empty() ? note.str() : bank.note + " " + note.str();
    return out;
}

FilterBank cyclic_permute_bank(const FilterBank& bank) {
    const int K = static_cast<int>(bank.filters.size());
    std::vector<int> perm(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) perm[static_cast<std::size_t>(i)] = (i + 1) % K;
    return permute_bank(bank, perm);
}

// ---- serialization ----

namespace {

constexpr char kMagic[8] = {'C', 'U', 'D', 'A', 'F', 'B', '1', '\0'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Cursor {
    const std::vector<std::uint8_t>& b;
    std::size_t pos = 0;
    std::uint32_t u32() {
        if (pos + 4 > b.size()) throw format_error("bank file truncated at byte " + std::to_string(pos));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        if (pos + 8 > b.size()) throw format_error("bank file truncated at byte " + std::to_string(pos));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

std::vector<std::uint8_t> serialize_bank(const FilterBank& bank) {
    validate_spec(bank.spec);
    if (static_cast<int>(bank.filters.size()) != bank.spec.num_classes)
        throw std::invalid_argument("serialize_bank: filter count does not match spec");
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, static_cast<std::uint32_t>(bank.spec.num_classes));
    put_u32(out, static_cast<std::uint32_t>(bank.spec.kernel_size));
    put_f64(out, bank.spec.blur);
    put_u64(out, bank.spec.master_seed);
    for (const Filter& f : bank.filters) {
        for (double v : f.values) put_f64(out, v);
    }
    return out;
}

FilterBank deserialize_bank(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw format_error("bank file: bad magic (expected CUDAFB1)");
    Cursor cur{bytes, 8};
    FilterBank bank;
    bank.spec.num_classes = static_cast<int>(cur.u32());
    bank.spec.kernel_size = static_cast<int>(cur.u32());
    bank.spec.blur = cur.f64();
    bank.spec.master_seed = cur.u64();
    try {
        validate_spec(bank.spec);
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("bank file: ") + e.what());
    }
    const std::size_t per = static_cast<std::size_t>(bank.spec.kernel_size) * bank.spec.kernel_size;
    const std::size_t want = cur.pos + static_cast<std::size_t>(bank.spec.num_classes) * per * 8;
    if (bytes.size() != want)
        throw format_error("bank file: size " + std::to_string(bytes.size()) + ", expected " + std::to_string(want));
    for (int c = 0; c < bank.spec.num_classes; ++c) {
        Filter f(bank.spec.kernel_size, std::vector<double>(per));
        for (auto& v : f.values) v = cur.f64();
        try {
            validate_filter(f, bank.spec.blur);
        } catch (const std::invalid_argument& e) {
            throw format_error("bank file: class " + std::to_string(c) + ": " + e.what());
        }
        bank.filters.push_back(std::move(f));
    }
    return bank;
}

void save_bank(const FilterBank& bank, const std::string& path) {
    const auto bytes = serialize_bank(bank);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path);
}

FilterBank load_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_bank(bytes);
}

std::string bank_to_json(const FilterBank& bank) {
    std::ostringstream os;
    os << "{\n  \"format\": \"CUDAFB1\",\n";
    os << "  \"num_classes\": " << bank.spec.num_classes << ",\n";
    os << "  \"kernel_size\": " << bank.spec.kernel_size << ",\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", bank.spec.blur);
    os << "  \"blur\": " << buf << ",\n";
    os << "  \"master_seed\": \"" << bank.spec.master_seed << "\",\n";
    os << "  \"fingerprint\": \"" << fingerprint_hex(bank_fingerprint(bank)) << "\",\n";
    os << "  \"filters\": [\n";
    for (std::size_t c = 0; c < bank.filters.size(); ++c) {
        os << "    [";
        const auto& v = bank.filters[c].values;
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            os << (i ? ", " : "") << buf;
        }
        os << "]" << (c + 1 < bank.filters.size() ? "," : "") << "\n";
    }
    os << "  ]\n}\n";
    return os.str();
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t bank_fingerprint(const FilterBank& bank) {
    const auto bytes = serialize_bank(bank);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

}  // namespace unlearn
