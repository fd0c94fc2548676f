#include "segnoise/mask.hpp"

#include <bit>
#include <cmath>

#include "segnoise/errors.hpp"

namespace segnoise {

InstanceMask::InstanceMask(int height, int width)
    : h_(height), w_(width), wpr_((width + 63) / 64),
      words_(static_cast<std::size_t>(height) * ((width + 63) / 64), 0) {}

std::uint64_t InstanceMask::count() const {
    std::uint64_t total = 0;
    for (std::uint64_t word : words_)
        total += static_cast<std::uint64_t>(std::popcount(word));
    return total;
}

namespace {

// dst bit x = src bit (x + s); bits sampled past either end read as zero.
// The padding-zero invariant on src makes out-of-width samples background,
// which is exactly the out-of-image convention the filters need.
void shift_row(const std::uint64_t* src, std::uint64_t* dst, int words, int s) {
    if (s == 0) {
        for (int i = 0; i < words; ++i)
            dst[i] = src[i];
        return;
    }
    if (s > 0) {
        int wo = s >> 6, bo = s & 63;
        for (int i = 0; i < words; ++i) {
            std::uint64_t lo = (i + wo < words) ? src[i + wo] : 0;
            std::uint64_t hi = (i + wo + 1 < words) ? src[i + wo + 1] : 0;
            dst[i] = bo ? (lo >> bo) | (hi << (64 - bo)) : lo;
        }
    } else {
        int t = -s;
        int wo = t >> 6, bo = t & 63;
        for (int i = words - 1; i >= 0; --i) {
            std::uint64_t hi = (i - wo >= 0) ? src[i - wo] : 0;
            std::uint64_t lo = (i - wo - 1 >= 0) ? src[i - wo - 1] : 0;
            dst[i] = bo ? (hi << bo) | (lo >> (64 - bo)) : hi;
        }
    }
}

enum class Filter { min, max };

// Separable k x k filter anchored at a = floor(k/2): window offsets run over
// [-a, k-1-a] on each axis. min == erosion, max == dilation.
InstanceMask square_filter(const InstanceMask& m, int k, Filter f) {
    const int h = m.height(), w = m.width(), wpr = m.words_per_row();
    const int a = k / 2;
    const std::uint64_t width_mask =
        (w % 64) ? ((1ull << (w % 64)) - 1) : ~0ull;

    // Horizontal pass.
    InstanceMask horiz(h, w);
    std::vector<std::uint64_t> shifted(wpr);
    for (int y = 0; y < h; ++y) {
        const std::uint64_t* src = m.row(y);
        std::uint64_t* out = horiz.row(y);
        shift_row(src, out, wpr, -a);
        for (int dx = -a + 1; dx <= k - 1 - a; ++dx) {
            shift_row(src, shifted.data(), wpr, dx);
            if (f == Filter::min)
                for (int i = 0; i < wpr; ++i)
                    out[i] &= shifted[i];
            else
                for (int i = 0; i < wpr; ++i)
                    out[i] |= shifted[i];
        }
        out[wpr - 1] &= width_mask;
    }

    // Vertical pass. A window row outside the image is all background, which
    // zeroes the min filter and is a no-op for the max filter.
    InstanceMask result(h, w);
    for (int y = 0; y < h; ++y) {
        std::uint64_t* out = result.row(y);
        if (f == Filter::min) {
            bool in_bounds = (y - a >= 0) && (y + k - 1 - a < h);
            if (!in_bounds)
                continue; // row stays zero
            for (int i = 0; i < wpr; ++i)
                out[i] = ~0ull;
            for (int dy = -a; dy <= k - 1 - a; ++dy) {
                const std::uint64_t* src = horiz.row(y + dy);
                for (int i = 0; i < wpr; ++i)
                    out[i] &= src[i];
            }
            out[wpr - 1] &= width_mask;
        } else {
            for (int dy = -a; dy <= k - 1 - a; ++dy) {
                if (y + dy < 0 || y + dy >= h)
                    continue;
                const std::uint64_t* src = horiz.row(y + dy);
                for (int i = 0; i < wpr; ++i)
                    out[i] |= src[i];
            }
        }
    }
    return result;
}

} // namespace

InstanceMask erode(const InstanceMask& m, int k) {
    if (k <= 1)
        return m;
    return square_filter(m, k, Filter::min);
}

InstanceMask dilate(const InstanceMask& m, int k) {
    if (k <= 1)
        return m;
    return square_filter(m, k, Filter::max);
}

InstanceMask opening(const InstanceMask& m, int k) {
    if (k <= 1)
        return m;
    return dilate(erode(m, k), k);
}

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ValidationError("mask_iou: dimension mismatch");
    std::uint64_t inter = 0, uni = 0;
    const int wpr = a.words_per_row();
    for (int y = 0; y < a.height(); ++y) {
        const std::uint64_t* ra = a.row(y);
        const std::uint64_t* rb = b.row(y);
        for (int i = 0; i < wpr; ++i) {
            inter += static_cast<std::uint64_t>(std::popcount(ra[i] & rb[i]));
            uni += static_cast<std::uint64_t>(std::popcount(ra[i] | rb[i]));
        }
    }
    if (uni == 0)
        return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

InstanceMask boundary_band(const InstanceMask& m, int d) {
    InstanceMask interior = erode(m, 2 * d + 1);
    InstanceMask band = m;
    const int wpr = m.words_per_row();
    for (int y = 0; y < m.height(); ++y) {
        std::uint64_t* out = band.row(y);
        const std::uint64_t* in = interior.row(y);
        for (int i = 0; i < wpr; ++i)
            out[i] &= ~in[i];
    }
    return band;
}

double boundary_iou(const InstanceMask& a, const InstanceMask& b, int d) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ValidationError("boundary_iou: dimension mismatch");
    return mask_iou(boundary_band(a, d), boundary_band(b, d));
}

int default_band_width(int height, int width) {
    double diag = std::hypot(static_cast<double>(height), static_cast<double>(width));
    int d = static_cast<int>(std::llround(0.02 * diag));
    return d < 1 ? 1 : d;
}

} // namespace segnoise
