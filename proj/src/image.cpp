#include "unlearn/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace unlearn {

// Fast path: taps outermost, each tap streaming over a contiguous pixel
// block (vectorizable), accumulating into a double buffer. Per output
// pixel the taps still arrive in row-major (u,v) order -- the same order
// the naive per-pixel oracle uses -- so both routes produce bitwise
// identical sums before the single float rounding at the end.
Image convolve_same(const Image& img, const Filter& f) {
    if (f.k <= 0 || f.k % 2 == 0) throw std::invalid_argument("convolve_same: kernel size must be odd and positive");
    if (static_cast<int>(f.values.size()) != f.k * f.k) throw std::invalid_argument("convolve_same: malformed filter");
    const int k = f.k, ctr = k / 2, h = img.h, w = img.w;
    std::vector<double> acc(static_cast<std::size_t>(h) * w);
    Image out(h, w, img.c);
    for (int ch = 0; ch < img.c; ++ch) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* plane = img.pix.data() + static_cast<std::size_t>(ch) * h * w;
        for (int u = 0; u < k; ++u) {
            const int di = u - ctr;
            const int i0 = std::max(0, -di), i1 = std::min(h, h - di);
            for (int v = 0; v < k; ++v) {
                const double wt = f.at(u, v);
                const int dj = v - ctr;
                const int j0 = std::max(0, -dj), j1 = std::min(w, w - dj);
                for (int i = i0; i < i1; ++i) {
                    double* arow = acc.data() + static_cast<std::size_t>(i) * w;
                    const float* xrow = plane + static_cast<std::size_t>(i + di) * w + dj;
                    for (int j = j0; j < j1; ++j) arow[j] += wt * static_cast<double>(xrow[j]);
                }
            }
        }
        float* orow = out.pix.data() + static_cast<std::size_t>(ch) * h * w;
        for (std::size_t p = 0; p < acc.size(); ++p) orow[p] = static_cast<float>(acc[p]);
    }
    return out;
}

Image rescale_max(const Image& img) {
    float m = 0.0f;
    for (float p : img.pix) {
        if (p < 0.0f) throw std::invalid_argument("rescale_max: negative pixel");
        if (p > m) m = p;
    }
    if (m == 0.0f) return img;
    Image out = img;
    for (float& p : out.pix) p /= m;
    return out;
}

Image cuda_poison_image(const Image& img, const Filter& f) {
    return rescale_max(convolve_same(img, f));
}

}  // namespace unlearn
