#pragma once

#include <cstddef>
#include <vector>

namespace unlearn {

// Dense image, channel-planar float32 layout: pix[(c*h + i)*w + j].
// Pixel values live in [0,1] for dataset images; convolution outputs may
// temporarily exceed 1 before rescaling.
struct Image {
    int h = 0, w = 0, c = 0;
    std::vector<float> pix;

    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), pix(static_cast<std::size_t>(h_) * w_ * c_, 0.0f) {}

    float& at(int ch, int i, int j) { return pix[(static_cast<std::size_t>(ch) * h + i) * w + j]; }
    float at(int ch, int i, int j) const { return pix[(static_cast<std::size_t>(ch) * h + i) * w + j]; }
    std::size_t size() const { return pix.size(); }
};

// k x k convolution filter; row-major doubles. Generation guarantees one
// entry exactly 1.0 and the rest in [0, p_b).
struct Filter {
    int k = 0;
    std::vector<double> values;  // k*k, row-major

    Filter() = default;
    Filter(int k_, std::vector<double> v) : k(k_), values(std::move(v)) {}
    double at(int u, int v) const { return values[static_cast<std::size_t>(u) * k + v]; }
    double& at(int u, int v) { return values[static_cast<std::size_t>(u) * k + v]; }
};

// Zero-padded same-size cross-correlation of every channel with the shared
// 2D filter. The per-pixel sum is accumulated in double over filter taps in
// row-major order; tests hold the naive oracle to the identical order, so
// the two routes agree bit-for-bit with contraction disabled.
Image convolve_same(const Image& img, const Filter& f);

// Divide by the global max across all channels; all-zero images pass
// through unchanged. Negative pixels reject (cannot arise from non-negative
// inputs and filters).
Image rescale_max(const Image& img);

// rescale_max(convolve_same(img, f)) -- the poisoning composition.
Image cuda_poison_image(const Image& img, const Filter& f);

}  // namespace unlearn
