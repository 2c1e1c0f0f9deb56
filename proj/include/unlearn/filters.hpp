#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/image.hpp"

namespace unlearn {

// The private key of a CUDA attack: per-class k x k filters generated from
// a master seed. One filter entry is exactly 1.0 (uniform position), the
// rest are i.i.d. Uniform[0, p_b).

struct FilterSpec {
    int num_classes = 0;
    int kernel_size = 0;
    double blur = 0.0;  // p_b
    std::uint64_t master_seed = 0;
};

struct FilterBank {
    FilterSpec spec;
    std::vector<Filter> filters;  // index == class label
    std::string note;             // e.g. permutation annotation; not serialized
};

void validate_spec(const FilterSpec& spec);

// Throws invalid_argument unless the filter has exactly one 1.0 entry and
// all others in [0, p_b], all non-negative.
void validate_filter(const Filter& f, double p_b);

Filter generate_filter(std::uint64_t class_seed, int k, double p_b);

// Class i's filter comes from generate_filter(derive_seed(master, i), ...).
FilterBank generate_bank(const FilterSpec& spec);

// Output filter for class i is input filter for class perm[i].
FilterBank permute_bank(const FilterBank& bank, const std::vector<int>& perm);

// Cyclic permutation perm(i) = (i+1) mod K -- the permuted-filter test.
FilterBank cyclic_permute_bank(const FilterBank& bank);

// Versioned binary container: "CUDAFB1\0", u32 K, u32 k, f64 p_b,
// u64 master_seed, then K*k*k little-endian f64 filter values.
std::vector<std::uint8_t> serialize_bank(const FilterBank& bank);
FilterBank deserialize_bank(const std::vector<std::uint8_t>& bytes);
void save_bank(const FilterBank& bank, const std::string& path);
FilterBank load_bank(const std::string& path);

// Human-readable JSON export (inspection only, not a load format).
std::string bank_to_json(const FilterBank& bank);

// FNV-1a 64-bit over the serialized bytes; the bank's public identity.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);
std::uint64_t bank_fingerprint(const FilterBank& bank);
std::string fingerprint_hex(std::uint64_t fp);

}  // namespace unlearn
