#pragma once

#include <cstdint>
#include <vector>

namespace segnoise {

// Binary bitmap. Row-major, bit-packed into 64-bit words per row; bit x of a
// row is word x/64, bit x%64 (LSB first). Padding bits past the width are
// kept zero at all times, which makes equality, popcounts, and the shifted
// AND/OR filters below exact without per-pixel cleanup.
class InstanceMask {
public:
    InstanceMask() = default;
    InstanceMask(int height, int width);

    int height() const { return h_; }
    int width() const { return w_; }
    int words_per_row() const { return wpr_; }

    bool get(int x, int y) const {
        return (words_[static_cast<std::size_t>(y) * wpr_ + (x >> 6)] >> (x & 63)) & 1u;
    }
    void set(int x, int y, bool v) {
        std::uint64_t& word = words_[static_cast<std::size_t>(y) * wpr_ + (x >> 6)];
        std::uint64_t bit = 1ull << (x & 63);
        if (v)
            word |= bit;
        else
            word &= ~bit;
    }

    const std::uint64_t* row(int y) const { return words_.data() + static_cast<std::size_t>(y) * wpr_; }
    std::uint64_t* row(int y) { return words_.data() + static_cast<std::size_t>(y) * wpr_; }

    std::uint64_t count() const; // foreground pixel count
    bool empty() const { return count() == 0; }

    bool operator==(const InstanceMask& other) const {
        return h_ == other.h_ && w_ == other.w_ && words_ == other.words_;
    }

private:
    int h_ = 0;
    int w_ = 0;
    int wpr_ = 0;
    std::vector<std::uint64_t> words_;
};

// Square-kernel min/max filters with the k x k element anchored at
// floor(k/2); out-of-image pixels count as background. k <= 1 is identity.
InstanceMask erode(const InstanceMask& m, int k);
InstanceMask dilate(const InstanceMask& m, int k);
InstanceMask opening(const InstanceMask& m, int k); // dilate(erode(m,k),k)

// |a AND b| / |a OR b|; 1.0 when both masks are empty. Throws
// ValidationError on dimension mismatch.
double mask_iou(const InstanceMask& a, const InstanceMask& b);

// Foreground within Chebyshev distance d of the background (or of the image
// border): m minus erode(m, 2d+1). Requires d >= 1.
InstanceMask boundary_band(const InstanceMask& m, int d);

// mask_iou restricted to the two boundary bands; 1.0 when both bands are
// empty.
double boundary_iou(const InstanceMask& a, const InstanceMask& b, int d);

// Default band width for an image: max(1, round(0.02 * diagonal)).
int default_band_width(int height, int width);

} // namespace segnoise
