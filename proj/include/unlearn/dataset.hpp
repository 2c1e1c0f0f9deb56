#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/image.hpp"

namespace unlearn {

// Labeled image dataset with uniform shape, stored as one flat pixel
// buffer (channel-planar per image) plus a label per image. Pixels are
// float32 in [0,1]; labels fit in uint16.
struct LabeledDataset {
    int h = 0, w = 0, c = 0;
    int num_classes = 0;
    std::vector<float> pixels;
    std::vector<std::uint16_t> labels;
    std::string provenance = "clean";

    std::size_t size() const { return labels.size(); }
    std::size_t image_floats() const { return static_cast<std::size_t>(h) * w * c; }

    const float* image_ptr(std::size_t idx) const { return pixels.data() + idx * image_floats(); }
    float* image_ptr(std::size_t idx) { return pixels.data() + idx * image_floats(); }

    Image get(std::size_t idx) const;
    void set(std::size_t idx, const Image& img);
    void append(const Image& img, std::uint16_t label);

    // Throws invalid_argument on shape/label inconsistencies.
    void validate() const;
};

struct PoisonMask {
    std::vector<std::uint8_t> flags;  // 1 = poisoned
    std::uint64_t seed = 0;
    double fraction = 0.0;

    std::size_t count() const;
};

struct DatasetSummary {
    std::size_t n = 0;
    int h = 0, w = 0, c = 0;
    int num_classes = 0;
    std::string provenance;
    std::vector<std::size_t> class_counts;
    double pixel_min = 0.0, pixel_max = 0.0, pixel_mean = 0.0;
};

DatasetSummary dataset_summary(const LabeledDataset& ds);

}  // namespace unlearn
