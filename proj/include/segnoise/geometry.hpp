#pragma once

#include <array>
#include <optional>
#include <vector>

#include "segnoise/mask.hpp"
#include "segnoise/rng.hpp"

namespace segnoise {

struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
};

// Implicitly closed; valid rings carry >= 3 vertices with finite coordinates.
using Ring = std::vector<Point>;

// Multi-part instance. Parts are filled independently (per-ring even-odd)
// and unioned, matching how COCO polygon lists are consumed.
using PolygonSet = std::vector<Ring>;

// Douglas-Peucker with tolerance epsilon. The closed ring is split at its
// two mutually farthest vertices and each open chain is simplified with
// point-to-segment deviation, so every dropped vertex lies within epsilon
// of the retained chain. epsilon = 0 returns the input unchanged. Returns
// nullopt when fewer than 3 vertices survive; the caller decides what a
// collapse means.
std::optional<Ring> simplify(const Ring& r, double epsilon);

// Displaces each vertex by (Bx*|N(mu,sigma)|, By*|N(mu,sigma)|) with
// independent Rademacher signs and magnitudes per coordinate. With
// shared_sign the two coordinates of a vertex reuse one sign draw.
// Clamping to the image rectangle is the caller's job.
Ring perturb_vertices(const Ring& r, double mu, double sigma, SeededRng& rng,
                      bool shared_sign = false);

// Whole-ring translation.
Ring shift(const Ring& r, double dx, double dy);

// Even-odd scanline fill sampling pixel centers (x+0.5, y+0.5); pixels
// outside the image are discarded. Each ring is filled independently and
// the results are unioned.
InstanceMask rasterize(const PolygonSet& p, int height, int width);

// Traces directed boundary edges on the pixel lattice, one exterior ring per
// 8-connected foreground component; holes are discarded. Rings of a hole-free
// mask re-rasterize to the mask exactly. Collinear vertices are pruned.
PolygonSet extract_contours(const InstanceMask& m);

// Shoelace area summed over rings.
double polygon_area(const PolygonSet& p);

// Tight axis-aligned hull as (x, y, w, h).
std::array<double, 4> polygon_bbox(const PolygonSet& p);

} // namespace segnoise
