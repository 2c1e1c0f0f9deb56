// Dataset containers and readers: the CUDADS1 binary format, CIFAR binary
// parsing with strict record validation, and summary export.

#include "doctest.h"

#include "unlearn/dataset.hpp"
#include "unlearn/dataset_io.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/filters.hpp"
#include "unlearn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

using namespace unlearn;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "unlearn_test_io";
    std::filesystem::create_directories(dir);
    return dir;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LabeledDataset random_dataset(int n, int num_classes, int h, int w, int c, std::uint64_t seed) {
    LabeledDataset ds;
    ds.h = h;
    ds.w = w;
    ds.c = c;
    ds.num_classes = num_classes;
    Xoshiro256pp rng(seed);
    for (int i = 0; i < n; ++i) {
        Image img(h, w, c);
        for (float& p : img.pix) p = static_cast<float>(rng.uniform());
        ds.append(img, static_cast<std::uint16_t>(i % num_classes));
    }
    return ds;
}

std::vector<std::uint8_t> cifar10_record(std::uint8_t label, std::uint8_t fill) {
    std::vector<std::uint8_t> rec(3073, fill);
    rec[0] = label;
    return rec;
}

}  // namespace

TEST_CASE("UDS serialization round-trips bitwise") {
    LabeledDataset ds = random_dataset(12, 4, 6, 5, 3, 11);
    ds.provenance = "mixed(bank=00f00dfeedbeef01)";

    const auto bytes = serialize_uds(ds);
    REQUIRE(bytes.size() >= 8);
    CHECK(std::equal(bytes.begin(), bytes.begin() + 8,
                     reinterpret_cast<const std::uint8_t*>("CUDADS1\0")));
    CHECK(bytes.size() == 8 + 16 + 8 + 4 + ds.provenance.size() +
                              4 * ds.pixels.size() + 2 * ds.labels.size());

    const LabeledDataset back = deserialize_uds(bytes);
    CHECK(back.h == ds.h);
    CHECK(back.w == ds.w);
    CHECK(back.c == ds.c);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.provenance == ds.provenance);
    CHECK(back.pixels == ds.pixels);
    CHECK(back.labels == ds.labels);
    CHECK(serialize_uds(back) == bytes);
}

TEST_CASE("UDS handles an empty dataset") {
    LabeledDataset empty;
    empty.h = 8;
    empty.w = 8;
    empty.c = 1;
    empty.num_classes = 2;
    const auto bytes = serialize_uds(empty);
    const LabeledDataset back = deserialize_uds(bytes);
    CHECK(back.size() == 0);
    CHECK(back.h == 8);
    CHECK(serialize_uds(back) == bytes);
}

TEST_CASE("UDS rejects corrupted containers") {
    const LabeledDataset ds = random_dataset(3, 3, 4, 4, 1, 9);
    const auto bytes = serialize_uds(ds);

    auto bad_magic = bytes;
    bad_magic[3] = 'X';
    CHECK_THROWS_AS(deserialize_uds(bad_magic), format_error);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(deserialize_uds(truncated), format_error);

    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(deserialize_uds(padded), format_error);

    CHECK_THROWS_AS(deserialize_uds({}), format_error);

    // Corrupt a label so it exceeds num_classes; payload validation trips.
    auto bad_label = bytes;
    bad_label[bad_label.size() - 2] = 0xff;
    bad_label[bad_label.size() - 1] = 0xff;
    CHECK_THROWS_AS(deserialize_uds(bad_label), format_error);
}

TEST_CASE("write_uds and read_uds round-trip through a file") {
    const auto dir = temp_dir();
    const auto path = (dir / "ds.uds").string();
    LabeledDataset ds = random_dataset(10, 5, 4, 4, 3, 21);
    ds.provenance = "clean";
    write_uds(ds, path);
    const LabeledDataset back = read_uds(path);
    CHECK(back.pixels == ds.pixels);
    CHECK(back.labels == ds.labels);
    CHECK(file_fingerprint(path) ==
          fnv1a64(serialize_uds(ds).data(), serialize_uds(ds).size()));
    CHECK_THROWS_AS(read_uds((dir / "nope.uds").string()), io_error);
    CHECK_THROWS_AS(file_fingerprint((dir / "nope.uds").string()), io_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_cifar_binary accepts exactly 3073-byte CIFAR-10 records") {
    const auto dir = temp_dir();
    const auto path = dir / "batch.bin";

    auto rec = cifar10_record(3, 255);
    rec[1] = 0;                         // first red pixel -> 0.0
    rec[1 + 1024] = 128;                // first green pixel -> 128/255
    write_bytes(path, rec);

    const LabeledDataset ds = read_cifar_binary({path.string()});
    REQUIRE(ds.size() == 1);
    CHECK(ds.h == 32);
    CHECK(ds.w == 32);
    CHECK(ds.c == 3);
    CHECK(ds.num_classes == 10);
    CHECK(ds.labels[0] == 3);
    CHECK(ds.get(0).at(0, 0, 0) == 0.0f);
    CHECK(ds.get(0).at(1, 0, 0) == 128.0f / 255.0f);
    CHECK(ds.get(0).at(2, 0, 0) == 1.0f);
    CHECK(ds.get(0).at(0, 0, 1) == 1.0f);

    // Two records concatenate in order.
    auto two = cifar10_record(1, 0);
    auto second = cifar10_record(9, 7);
    two.insert(two.end(), second.begin(), second.end());
    write_bytes(path, two);
    const LabeledDataset pair = read_cifar_binary({path.string()});
    REQUIRE(pair.size() == 2);
    CHECK(pair.labels[0] == 1);
    CHECK(pair.labels[1] == 9);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_cifar_binary rejects truncated or mislabeled files") {
    const auto dir = temp_dir();
    const auto path = dir / "bad.bin";

    auto rec = cifar10_record(0, 1);
    rec.pop_back();  // 3072 bytes: one short of a record
    write_bytes(path, rec);
    CHECK_THROWS_AS(read_cifar_binary({path.string()}), format_error);

    write_bytes(path, {});
    CHECK_THROWS_AS(read_cifar_binary({path.string()}), format_error);

    write_bytes(path, cifar10_record(10, 0));  // label out of [0,9]
    CHECK_THROWS_AS(read_cifar_binary({path.string()}), format_error);

    CHECK_THROWS_AS(read_cifar_binary({(dir / "absent.bin").string()}), io_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_cifar_binary parses CIFAR-100 records with the fine label") {
    const auto dir = temp_dir();
    const auto path = dir / "c100.bin";

    std::vector<std::uint8_t> rec(3074, 200);
    rec[0] = 7;    // coarse label, ignored
    rec[1] = 42;   // fine label, used
    write_bytes(path, rec);
    const LabeledDataset ds = read_cifar_binary({path.string()}, CifarFormat::kCifar100);
    REQUIRE(ds.size() == 1);
    CHECK(ds.num_classes == 100);
    CHECK(ds.labels[0] == 42);
    CHECK(ds.get(0).at(0, 0, 0) == 200.0f / 255.0f);

    rec[1] = 100;  // fine label out of [0,99]
    write_bytes(path, rec);
    CHECK_THROWS_AS(read_cifar_binary({path.string()}, CifarFormat::kCifar100), format_error);

    // A CIFAR-10-sized file is not a whole number of CIFAR-100 records.
    write_bytes(path, cifar10_record(0, 0));
    CHECK_THROWS_AS(read_cifar_binary({path.string()}, CifarFormat::kCifar100), format_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("write_cifar10_binary inverts the reader byte-for-byte") {
    const auto dir = temp_dir();
    const auto src = dir / "src.bin";
    const auto dst = dir / "dst.bin";

    // Random bytes in, same bytes out: /255 then round(p*255) is lossless.
    std::vector<std::uint8_t> bytes;
    Xoshiro256pp rng(33);
    for (int r = 0; r < 3; ++r) {
        auto rec = cifar10_record(static_cast<std::uint8_t>(r), 0);
        for (std::size_t p = 1; p < rec.size(); ++p)
            rec[p] = static_cast<std::uint8_t>(rng.uniform_int(256));
        bytes.insert(bytes.end(), rec.begin(), rec.end());
    }
    write_bytes(src, bytes);
    const LabeledDataset ds = read_cifar_binary({src.string()});
    write_cifar10_binary(ds, dst.string());
    CHECK(read_bytes(dst) == bytes);

    LabeledDataset wrong_shape = random_dataset(2, 2, 4, 4, 3, 1);
    CHECK_THROWS_AS(write_cifar10_binary(wrong_shape, dst.string()), std::invalid_argument);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset validate catches inconsistent buffers") {
    LabeledDataset ds = random_dataset(4, 2, 3, 3, 1, 44);
    CHECK_NOTHROW(ds.validate());

    LabeledDataset short_pix = ds;
    short_pix.pixels.pop_back();
    CHECK_THROWS_AS(short_pix.validate(), std::invalid_argument);

    LabeledDataset bad_label = ds;
    bad_label.labels[0] = 2;
    CHECK_THROWS_AS(bad_label.validate(), std::invalid_argument);

    LabeledDataset zero_dim = ds;
    zero_dim.c = 0;
    CHECK_THROWS_AS(zero_dim.validate(), std::invalid_argument);
}

TEST_CASE("dataset_summary reports counts and pixel statistics") {
    LabeledDataset ds = random_dataset(20, 4, 2, 2, 1, 55);
    ds.pixels[0] = 0.0f;
    ds.pixels[1] = 1.0f;
    const DatasetSummary s = dataset_summary(ds);
    CHECK(s.n == 20);
    CHECK(s.h == 2);
    CHECK(s.num_classes == 4);
    REQUIRE(s.class_counts.size() == 4);
    for (std::size_t cnt : s.class_counts) CHECK(cnt == 5);
    CHECK(s.pixel_min == 0.0);
    CHECK(s.pixel_max == 1.0);
    double acc = 0.0;
    for (float p : ds.pixels) acc += static_cast<double>(p);
    CHECK(s.pixel_mean == acc / static_cast<double>(ds.pixels.size()));

    const auto doc = nlohmann::json::parse(summary_to_json(s));
    CHECK(doc["n"] == 20);
    CHECK(doc["shape"] == nlohmann::json({2, 2, 1}));
    CHECK(doc["num_classes"] == 4);
    CHECK(doc["provenance"] == "clean");
    CHECK(doc["class_counts"] == nlohmann::json({5, 5, 5, 5}));
    CHECK(doc["pixel_min"].get<double>() == 0.0);
    CHECK(doc["pixel_max"].get<double>() == 1.0);
}
