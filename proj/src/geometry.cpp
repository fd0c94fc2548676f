#include "segnoise/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace segnoise {

namespace {

double point_segment_dist(const Point& p, const Point& a, const Point& b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = p.x - a.x, wy = p.y - a.y;
    double len2 = vx * vx + vy * vy;
    if (len2 == 0.0)
        return std::hypot(wx, wy);
    double t = (wx * vx + wy * vy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(wx - t * vx, wy - t * vy);
}

// Marks interior vertices of chain[lo..hi] whose deviation exceeds epsilon;
// endpoints stay. Iterative so pathological chains cannot overflow the stack.
void dp_mark(const std::vector<Point>& chain, double epsilon, std::vector<char>& keep) {
    if (chain.size() < 3)
        return;
    std::vector<std::pair<int, int>> stack;
    stack.emplace_back(0, static_cast<int>(chain.size()) - 1);
    while (!stack.empty()) {
        auto [lo, hi] = stack.back();
        stack.pop_back();
        if (hi - lo < 2)
            continue;
        double best = -1.0;
        int split = -1;
        for (int i = lo + 1; i < hi; ++i) {
            double d = point_segment_dist(chain[i], chain[lo], chain[hi]);
            if (d > best) {
                best = d;
                split = i;
            }
        }
        if (best > epsilon) {
            keep[split] = 1;
            stack.emplace_back(lo, split);
            stack.emplace_back(split, hi);
        }
    }
}

void simplify_chain(const std::vector<Point>& chain, double epsilon, Ring& out) {
    if (chain.empty())
        return;
    std::vector<char> keep(chain.size(), 0);
    keep.front() = 1;
    keep.back() = 1;
    dp_mark(chain, epsilon, keep);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) // final vertex belongs to the next chain
        if (keep[i])
            out.push_back(chain[i]);
}

} // namespace

std::optional<Ring> simplify(const Ring& r, double epsilon) {
    if (epsilon == 0.0)
        return r; // zero tolerance keeps every vertex, collinear or not
    const int n = static_cast<int>(r.size());
    if (n < 3)
        return std::nullopt;

    // Split the closed ring at its two mutually farthest vertices.
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double dx = r[i].x - r[j].x, dy = r[i].y - r[j].y;
            double d2 = dx * dx + dy * dy;
            if (d2 > best) {
                best = d2;
                bi = i;
                bj = j;
            }
        }

    std::vector<Point> first, second;
    for (int i = bi; i != bj; i = (i + 1) % n)
        first.push_back(r[i]);
    first.push_back(r[bj]);
    for (int i = bj; i != bi; i = (i + 1) % n)
        second.push_back(r[i]);
    second.push_back(r[bi]);

    Ring result;
    simplify_chain(first, epsilon, result);
    simplify_chain(second, epsilon, result);
    if (result.size() < 3)
        return std::nullopt;
    return result;
}

Ring perturb_vertices(const Ring& r, double mu, double sigma, SeededRng& rng,
                      bool shared_sign) {
    Ring out;
    out.reserve(r.size());
    // Draw order per vertex is fixed: sign(s) before magnitudes, x before y.
    for (const Point& v : r) {
        double dx, dy;
        if (shared_sign) {
            double b = rng.rademacher();
            dx = b * std::fabs(rng.normal(mu, sigma));
            dy = b * std::fabs(rng.normal(mu, sigma));
        } else {
            double bx = rng.rademacher();
            double mx = std::fabs(rng.normal(mu, sigma));
            double by = rng.rademacher();
            double my = std::fabs(rng.normal(mu, sigma));
            dx = bx * mx;
            dy = by * my;
        }
        out.push_back({v.x + dx, v.y + dy});
    }
    return out;
}

Ring shift(const Ring& r, double dx, double dy) {
    Ring out;
    out.reserve(r.size());
    for (const Point& v : r)
        out.push_back({v.x + dx, v.y + dy});
    return out;
}

InstanceMask rasterize(const PolygonSet& p, int height, int width) {
    InstanceMask m(height, width);
    std::vector<double> xs;
    for (const Ring& ring : p) {
        const std::size_t n = ring.size();
        if (n < 3)
            continue;
        double miny = std::numeric_limits<double>::infinity();
        double maxy = -miny;
        for (const Point& v : ring) {
            miny = std::min(miny, v.y);
            maxy = std::max(maxy, v.y);
        }
        int y0 = std::max(0, static_cast<int>(std::ceil(miny - 0.5)));
        int y1 = std::min(height - 1, static_cast<int>(std::floor(maxy - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            xs.clear();
            for (std::size_t i = 0; i < n; ++i) {
                const Point& a = ring[i];
                const Point& b = ring[(i + 1) % n];
                // Half-open crossing rule: each edge covers [min_y, max_y),
                // so shared vertices are counted exactly once.
                if ((a.y > py) != (b.y > py))
                    xs.push_back(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t j = 0; j + 1 < xs.size(); j += 2) {
                // Pixel centers in [xs[j], xs[j+1]).
                int x0 = static_cast<int>(std::ceil(xs[j] - 0.5));
                int x1 = static_cast<int>(std::ceil(xs[j + 1] - 0.5)) - 1;
                x0 = std::max(x0, 0);
                x1 = std::min(x1, width - 1);
                for (int x = x0; x <= x1; ++x)
                    m.set(x, y, true);
            }
        }
    }
    return m;
}

namespace {

// Directions on the corner lattice: index -> (dx, dy), y grows downward.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

void prune_collinear(Ring& ring) {
    bool changed = true;
    while (changed && ring.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < ring.size() && ring.size() > 3; ++i) {
            const Point& prev = ring[(i + ring.size() - 1) % ring.size()];
            const Point& next = ring[(i + 1) % ring.size()];
            if (point_segment_dist(ring[i], prev, next) < 1e-6) {
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                --i;
            }
        }
    }
}

} // namespace

PolygonSet extract_contours(const InstanceMask& m) {
    const int h = m.height(), w = m.width();
    PolygonSet out;
    if (h == 0 || w == 0)
        return out;
    const int cw = w + 1; // corner lattice width
    const std::size_t corners = static_cast<std::size_t>(cw) * (h + 1);
    std::vector<char> edge(corners * 4, 0);
    auto eidx = [&](int cx, int cy, int dir) {
        return (static_cast<std::size_t>(cy) * cw + cx) * 4 + dir;
    };
    auto fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h && m.get(x, y);
    };

    // One directed edge per exposed pixel side, oriented so foreground lies
    // to the right of travel: exteriors trace out positive shoelace cycles.
    bool any = false;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.get(x, y))
                continue;
            any = true;
            if (!fg(x, y - 1))
                edge[eidx(x, y, 0)] = 1;
            if (!fg(x + 1, y))
                edge[eidx(x + 1, y, 1)] = 1;
            if (!fg(x, y + 1))
                edge[eidx(x + 1, y + 1, 2)] = 1;
            if (!fg(x - 1, y))
                edge[eidx(x, y + 1, 3)] = 1;
        }
    if (!any)
        return out;

    for (std::size_t start = 0; start < corners * 4; ++start) {
        if (!edge[start])
            continue;
        int cx = static_cast<int>(start / 4 % cw);
        int cy = static_cast<int>(start / 4 / cw);
        int dir = static_cast<int>(start % 4);
        const int sx = cx, sy = cy, sdir = dir;
        Ring ring;
        double area2 = 0.0;
        do {
            edge[eidx(cx, cy, dir)] = 0;
            ring.push_back({static_cast<double>(cx), static_cast<double>(cy)});
            int nx = cx + kDx[dir], ny = cy + kDy[dir];
            area2 += static_cast<double>(cx) * ny - static_cast<double>(nx) * cy;
            cx = nx;
            cy = ny;
            // Left turn first: at a corner where two diagonal pixels meet this
            // keeps 8-connected foreground on a single exterior ring.
            int next_dir = -1;
            for (int turn : {3, 0, 1}) {
                int cand = (dir + turn) % 4;
                if (edge[eidx(cx, cy, cand)] || (cx == sx && cy == sy && cand == sdir)) {
                    next_dir = cand;
                    break;
                }
            }
            if (next_dir < 0)
                break; // unreachable for well-formed edge sets
            dir = next_dir;
        } while (!(cx == sx && cy == sy && dir == sdir));

        if (area2 > 0.0) { // positive = exterior; holes are discarded
            prune_collinear(ring);
            out.push_back(std::move(ring));
        }
    }
    return out;
}

double polygon_area(const PolygonSet& p) {
    double total = 0.0;
    for (const Ring& ring : p) {
        const std::size_t n = ring.size();
        if (n < 3)
            continue;
        double a2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = ring[i];
            const Point& b = ring[(i + 1) % n];
            a2 += a.x * b.y - b.x * a.y;
        }
        total += std::fabs(a2) / 2.0;
    }
    return total;
}

std::array<double, 4> polygon_bbox(const PolygonSet& p) {
    double minx = std::numeric_limits<double>::infinity();
    double miny = minx, maxx = -minx, maxy = -minx;
    bool any = false;
    for (const Ring& ring : p)
        for (const Point& v : ring) {
            any = true;
            minx = std::min(minx, v.x);
            miny = std::min(miny, v.y);
            maxx = std::max(maxx, v.x);
            maxy = std::max(maxy, v.y);
        }
    if (!any)
        return {0.0, 0.0, 0.0, 0.0};
    return {minx, miny, maxx - minx, maxy - miny};
}

} // namespace segnoise
