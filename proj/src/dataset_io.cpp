#include "unlearn/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/filters.hpp"

namespace unlearn {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Cursor {
    const std::vector<std::uint8_t>& b;
    std::size_t pos = 0;
    void need(std::size_t n) {
        if (pos + n > b.size()) throw format_error("dataset file truncated at byte " + std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
};

constexpr char kUdsMagic[8] = {'C', 'U', 'D', 'A', 'D', 'S', '1', '\0'};
constexpr std::size_t kCifarPixels = 3072;

}  // namespace

LabeledDataset read_cifar_binary(const std::vector<std::string>& paths, CifarFormat format) {
    const bool c100 = format == CifarFormat::kCifar100;
    const std::size_t record = c100 ? 3074 : 3073;
    const int max_label = c100 ? 99 : 9;
    LabeledDataset ds;
    ds.h = 32;
    ds.w = 32;
    ds.c = 3;
    ds.num_classes = c100 ? 100 : 10;
    for (const auto& path : paths) {
        const auto bytes = read_file(path);
        if (bytes.empty() || bytes.size() % record != 0)
            throw format_error(path + ": size " + std::to_string(bytes.size()) + " is not a multiple of " +
                               std::to_string(record) + "-byte records");
        const std::size_t n = bytes.size() / record;
        ds.pixels.reserve(ds.pixels.size() + n * kCifarPixels);
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint8_t* rec = bytes.data() + r * record;
            const int label = c100 ? rec[1] : rec[0];  // CIFAR-100: fine label
            if (label > max_label)
                throw format_error(path + ": record " + std::to_string(r) + " at byte offset " +
                                   std::to_string(r * record) + ": label " + std::to_string(label) + " out of range");
            const std::uint8_t* px = rec + (c100 ? 2 : 1);
            for (std::size_t p = 0; p < kCifarPixels; ++p) {
                ds.pixels.push_back(static_cast<float>(px[p]) / 255.0f);
            }
            ds.labels.push_back(static_cast<std::uint16_t>(label));
        }
    }
    return ds;
}

void write_cifar10_binary(const LabeledDataset& ds, const std::string& path) {
    if (ds.h != 32 || ds.w != 32 || ds.c != 3)
        throw std::invalid_argument("write_cifar10_binary: dataset is not 32x32x3");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(ds.size() * 3073);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] > 9) throw std::invalid_argument("write_cifar10_binary: label > 9");
        bytes.push_back(static_cast<std::uint8_t>(ds.labels[i]));
        const float* px = ds.image_ptr(i);
        for (std::size_t p = 0; p < kCifarPixels; ++p) {
            const double q = std::round(static_cast<double>(px[p]) * 255.0);
            bytes.push_back(static_cast<std::uint8_t>(q < 0 ? 0 : q > 255 ? 255 : q));
        }
    }
    write_file(path, bytes);
}

std::vector<std::uint8_t> serialize_uds(const LabeledDataset& ds) {
    ds.validate();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kUdsMagic, kUdsMagic + 8);
    put_u32(out, static_cast<std::uint32_t>(ds.h));
    put_u32(out, static_cast<std::uint32_t>(ds.w));
    put_u32(out, static_cast<std::uint32_t>(ds.c));
    put_u32(out, static_cast<std::uint32_t>(ds.num_classes));
    put_u64(out, static_cast<std::uint64_t>(ds.size()));
    put_u32(out, static_cast<std::uint32_t>(ds.provenance.size()));
    out.insert(out.end(), ds.provenance.begin(), ds.provenance.end());
    for (float p : ds.pixels) put_u32(out, std::bit_cast<std::uint32_t>(p));
    for (std::uint16_t l : ds.labels) {
        out.push_back(static_cast<std::uint8_t>(l & 0xff));
        out.push_back(static_cast<std::uint8_t>(l >> 8));
    }
    return out;
}

LabeledDataset deserialize_uds(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kUdsMagic, 8) != 0)
        throw format_error("dataset file: bad magic (expected CUDADS1)");
    Cursor cur{bytes, 8};
    LabeledDataset ds;
    ds.h = static_cast<int>(cur.u32());
    ds.w = static_cast<int>(cur.u32());
    ds.c = static_cast<int>(cur.u32());
    ds.num_classes = static_cast<int>(cur.u32());
    const std::uint64_t n = cur.u64();
    if (ds.h < 0 || ds.w < 0 || ds.c < 0 || ds.num_classes < 0)
        throw format_error("dataset file: dimension overflows int");
    const std::uint64_t per = static_cast<std::uint64_t>(ds.h) * static_cast<std::uint64_t>(ds.w) *
                              static_cast<std::uint64_t>(ds.c);
    if (per > (1ull << 32) || n > (1ull << 40) || (per != 0 && n > std::numeric_limits<std::uint64_t>::max() / per / 4))
        throw format_error("dataset file: dimensions overflow");
    const std::uint32_t prov_len = cur.u32();
    cur.need(prov_len);
    ds.provenance.assign(reinterpret_cast<const char*>(bytes.data() + cur.pos), prov_len);
    cur.pos += prov_len;
    const std::uint64_t n_px = n * per;
    cur.need(n_px * 4 + n * 2);
    if (bytes.size() != cur.pos + n_px * 4 + n * 2)
        throw format_error("dataset file: trailing bytes after payload");
    ds.pixels.resize(n_px);
    for (std::uint64_t i = 0; i < n_px; ++i) {
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[cur.pos + 4 * i + k]) << (8 * k);
        ds.pixels[i] = std::bit_cast<float>(v);
    }
    cur.pos += n_px * 4;
    ds.labels.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        ds.labels[i] = static_cast<std::uint16_t>(bytes[cur.pos + 2 * i] |
                                                  (static_cast<std::uint16_t>(bytes[cur.pos + 2 * i + 1]) << 8));
    }
    try {
        ds.validate();
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("dataset file: ") + e.what());
    }
    return ds;
}

void write_uds(const LabeledDataset& ds, const std::string& path) {
    write_file(path, serialize_uds(ds));
}

LabeledDataset read_uds(const std::string& path) {
    return deserialize_uds(read_file(path));
}

std::uint64_t file_fingerprint(const std::string& path) {
    const auto bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string summary_to_json(const DatasetSummary& s) {
    std::ostringstream os;
    char buf[64];
    os << "{\n";
    os << "  \"n\": " << s.n << ",\n";
    os << "  \"shape\": [" << s.h << ", " << s.w << ", " << s.c << "],\n";
    os << "  \"num_classes\": " << s.num_classes << ",\n";
    os << "  \"provenance\": \"" << s.provenance << "\",\n";
    os << "  \"class_counts\": [";
    for (std::size_t i = 0; i < s.class_counts.size(); ++i) os << (i ? ", " : "") << s.class_counts[i];
    os << "],\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.pixel_min);
    os << "  \"pixel_min\": " << buf << ",\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.pixel_max);
    os << "  \"pixel_max\": " << buf << ",\n";
    std::snprintf(buf, sizeof buf, "%.17g", s.pixel_mean);
    os << "  \"pixel_mean\": " << buf << "\n";
    os << "}\n";
    return os.str();
}

}  // namespace unlearn
