#pragma once

#include <string>
#include <vector>

#include "unlearn/dataset.hpp"

namespace unlearn {

enum class CifarFormat { kCifar10, kCifar100 };

// CIFAR binary readers. CIFAR-10 records are 3073 bytes: 1 label byte in
// [0,9] then 3072 pixel bytes (32x32 red, green, blue planes). CIFAR-100
// records are 3074 bytes: coarse byte, fine byte (used as the label, in
// [0,99]), then the same 3072 pixel planes. Pixels map to [0,1] via /255.
LabeledDataset read_cifar_binary(const std::vector<std::string>& paths, CifarFormat format = CifarFormat::kCifar10);

// Inverse writer (CIFAR-10 layout only): quantizes by round(p*255). Reading
// a file written from /255 data reproduces the original bytes.
void write_cifar10_binary(const LabeledDataset& ds, const std::string& path);

// Internal container (UDS): magic "CUDADS1\0", u32 h, u32 w, u32 c, u32 K,
// u64 n, u32 provenance length + bytes, n*c*h*w little-endian f32 pixels,
// n little-endian u16 labels. Round-trips bitwise.
void write_uds(const LabeledDataset& ds, const std::string& path);
LabeledDataset read_uds(const std::string& path);

std::vector<std::uint8_t> serialize_uds(const LabeledDataset& ds);
LabeledDataset deserialize_uds(const std::vector<std::uint8_t>& bytes);

// FNV-1a 64 fingerprint of a file's bytes (CLI provenance / run manifest).
std::uint64_t file_fingerprint(const std::string& path);

std::string summary_to_json(const DatasetSummary& s);

}  // namespace unlearn
