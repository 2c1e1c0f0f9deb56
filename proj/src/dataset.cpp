#include "unlearn/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace unlearn {

Image LabeledDataset::get(std::size_t idx) const {
    if (idx >= size()) throw std::invalid_argument("dataset index out of range");
    Image img(h, w, c);
    std::memcpy(img.pix.data(), image_ptr(idx), image_floats() * sizeof(float));
    return img;
}

void LabeledDataset::set(std::size_t idx, const Image& img) {
    if (idx >= size()) throw std::invalid_argument("dataset index out of range");
    if (img.h != h || img.w != w || img.c != c) throw std::invalid_argument("dataset set: shape mismatch");
    std::memcpy(image_ptr(idx), img.pix.data(), image_floats() * sizeof(float));
}

void LabeledDataset::append(const Image& img, std::uint16_t label) {
    if (size() == 0 && pixels.empty()) {
        h = img.h;
        w = img.w;
        c = img.c;
    }
    if (img.h != h || img.w != w || img.c != c) throw std::invalid_argument("dataset append: shape mismatch");
    pixels.insert(pixels.end(), img.pix.begin(), img.pix.end());
    labels.push_back(label);
}

void LabeledDataset::validate() const {
    if (h < 0 || w < 0 || c < 0) throw std::invalid_argument("dataset: negative dimensions");
    if (size() > 0 && (h == 0 || w == 0 || c == 0)) throw std::invalid_argument("dataset: zero dimensions");
    if (pixels.size() != size() * image_floats()) throw std::invalid_argument("dataset: pixel buffer size mismatch");
    if (num_classes < 0) throw std::invalid_argument("dataset: negative class count");
    for (std::uint16_t l : labels) {
        if (num_classes > 0 && l >= num_classes) throw std::invalid_argument("dataset: label out of range");
    }
}

std::size_t PoisonMask::count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

DatasetSummary dataset_summary(const LabeledDataset& ds) {
    DatasetSummary s;
    s.n = ds.size();
    s.h = ds.h;
    s.w = ds.w;
    s.c = ds.c;
    s.num_classes = ds.num_classes;
    s.provenance = ds.provenance;
    s.class_counts.assign(static_cast<std::size_t>(ds.num_classes > 0 ? ds.num_classes : 0), 0);
    for (std::uint16_t l : ds.labels) {
        if (l < s.class_counts.size()) ++s.class_counts[l];
    }
    if (!ds.pixels.empty()) {
        double mn = ds.pixels[0], mx = ds.pixels[0], acc = 0.0;
        for (float p : ds.pixels) {
            mn = std::min(mn, static_cast<double>(p));
            mx = std::max(mx, static_cast<double>(p));
            acc += static_cast<double>(p);
        }
        s.pixel_min = mn;
        s.pixel_max = mx;
        s.pixel_mean = acc / static_cast<double>(ds.pixels.size());
    }
    return s;
}

}  // namespace unlearn
