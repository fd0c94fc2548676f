#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "segnoise/geometry.hpp"
#include "segnoise/rng.hpp"

using namespace segnoise;

namespace {

Ring star_ring(SeededRng& rng, double cx, double cy, double radius, int n) {
  Ring r;
  for (int i = 0; i < n; ++i) {
    double theta = 2.0 * std::numbers::pi * (i + 0.1 + 0.8 * rng.uniform01()) / n;
    double f = 0.55 + 0.45 * rng.uniform01();
    r.push_back(Point{cx + radius * f * std::cos(theta), cy + radius * f * std::sin(theta)});
  }
  return r;
}

} // namespace

TEST_CASE("rasterize fills an axis-aligned square exactly") {
  Ring sq{{0, 0}, {5, 0}, {5, 5}, {0, 5}};
  InstanceMask m = rasterize({sq}, 8, 8);
  CHECK(m.count() == 25);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) CHECK(m.get(x, y));
  CHECK_FALSE(m.get(5, 0));
  CHECK_FALSE(m.get(0, 5));
}

TEST_CASE("rasterization is clipped to the image") {
  Ring sq{{-3, -3}, {4, -3}, {4, 4}, {-3, 4}};
  InstanceMask m = rasterize({sq}, 6, 6);
  CHECK(m.count() == 16); // the 4x4 corner that lies inside
}

TEST_CASE("rasterize agrees with an even-odd point-in-polygon oracle") {
  SeededRng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    PolygonSet p{star_ring(rng, 12 + 16 * rng.uniform01(), 12 + 16 * rng.uniform01(),
                           4 + 8 * rng.uniform01(), 8 + static_cast<int>(rng.uniform_below(7)))};
    InstanceMask m = rasterize(p, 40, 40);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        CHECK(m.get(x, y) == oracle::point_in_polyset(p, x + 0.5, y + 0.5));
  }
}

TEST_CASE("a ring inside another ring makes a hole (even-odd per part is unioned)") {
  // One ring with a hole must come as a single ring in COCO polygon lists;
  // two separate rings are two filled parts, so the union has no hole.
  Ring outer{{0, 0}, {9, 0}, {9, 9}, {0, 9}};
  Ring inner{{3, 3}, {6, 3}, {6, 6}, {3, 6}};
  InstanceMask two_parts = rasterize({outer, inner}, 10, 10);
  CHECK(two_parts.count() == 81); // inner part is inside the outer fill
  // A self-overlapping single ring flips parity inside.
  Ring combined{{0, 0}, {9, 0}, {9, 9}, {0, 9}, {0, 0}, {3, 3}, {6, 3}, {6, 6}, {3, 6}, {3, 3}};
  InstanceMask holed = rasterize({combined}, 10, 10);
  CHECK(holed.count() == 81 - 9);
  CHECK_FALSE(holed.get(4, 4));
}

TEST_CASE("simplify with epsilon 0 returns the input unchanged") {
  SeededRng rng(777);
  Ring r = star_ring(rng, 20, 20, 10, 12);
  auto s = simplify(r, 0.0);
  REQUIRE(s.has_value());
  CHECK(*s == r);
}

TEST_CASE("simplify drops collinear vertices for any positive epsilon") {
  Ring sq{{0, 0}, {5, 0}, {10, 0}, {10, 10}, {5, 10}, {0, 10}};
  auto s = simplify(sq, 1e-9);
  REQUIRE(s.has_value());
  CHECK(s->size() == 4);
  for (const Point& p : {Point{0, 0}, Point{10, 0}, Point{10, 10}, Point{0, 10}})
    CHECK(std::count(s->begin(), s->end(), p) == 1);
}

TEST_CASE("simplify keeps vertices that deviate more than epsilon") {
  Ring r{{0, 0}, {5, 3}, {10, 0}, {10, 10}, {0, 10}};
  auto s1 = simplify(r, 2.0);
  REQUIRE(s1.has_value());
  CHECK(std::count(s1->begin(), s1->end(), Point{5, 3}) == 1);
  auto s2 = simplify(r, 4.0);
  REQUIRE(s2.has_value());
  CHECK(std::count(s2->begin(), s2->end(), Point{5, 3}) == 0);
}

TEST_CASE("simplify collapses thin rings to nothing") {
  Ring sliver{{0, 0}, {10, 0.2}, {20, 0}};
  CHECK_FALSE(simplify(sliver, 5.0).has_value());
}

TEST_CASE("simplify preserves vertex order and subset") {
  SeededRng rng(901);
  for (int trial = 0; trial < 30; ++trial) {
    Ring r = star_ring(rng, 30, 30, 15, 14);
    auto s = simplify(r, 1.5);
    if (!s) continue;
    // Every kept vertex appears in the original; relative order preserved
    // up to rotation (the ring is split at the farthest pair).
    for (const Point& p : *s) CHECK(std::count(r.begin(), r.end(), p) == 1);
  }
}

TEST_CASE("simplify matches an independent recursive implementation") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    Ring r = star_ring(rng, 25, 25, 12, 8 + static_cast<int>(rng.uniform_below(9)));
    for (double eps : {0.3, 1.0, 3.0, 8.0}) {
      auto got = simplify(r, eps);
      auto want = oracle::simplify_ring(r, eps);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(*got == *want);
    }
  }
}

TEST_CASE("perturb_vertices applies sign times half-normal magnitude per coordinate") {
  Ring r{{10, 10}, {20, 10}, {15, 18}};
  SeededRng rng(42), probe(42);
  Ring out = perturb_vertices(r, 3.0, 1.0, rng);
  for (std::size_t i = 0; i < r.size(); ++i) {
    int bx = probe.rademacher();
    double mx = std::abs(probe.normal(3.0, 1.0));
    int by = probe.rademacher();
    double my = std::abs(probe.normal(3.0, 1.0));
    CHECK(out[i].x == r[i].x + bx * mx);
    CHECK(out[i].y == r[i].y + by * my);
  }
}

TEST_CASE("perturb_vertices with a shared sign moves both coordinates the same way") {
  Ring r{{10, 10}, {20, 10}, {15, 18}};
  SeededRng rng(43), probe(43);
  Ring out = perturb_vertices(r, 3.0, 1.0, rng, true);
  for (std::size_t i = 0; i < r.size(); ++i) {
    int b = probe.rademacher();
    double mx = std::abs(probe.normal(3.0, 1.0));
    double my = std::abs(probe.normal(3.0, 1.0));
    CHECK(out[i].x == r[i].x + b * mx);
    CHECK(out[i].y == r[i].y + b * my);
  }
}

TEST_CASE("shift translates every vertex") {
  Ring r{{1, 2}, {3, 4}};
  Ring s = shift(r, 0.5, -1.5);
  CHECK(s[0] == Point{1.5, 0.5});
  CHECK(s[1] == Point{3.5, 2.5});
}

TEST_CASE("extract_contours of a single pixel is its unit square") {
  InstanceMask m(4, 4);
  m.set(1, 2, true);
  PolygonSet p = extract_contours(m);
  REQUIRE(p.size() == 1);
  CHECK(p[0].size() == 4);
  CHECK(polygon_area(p) == 1.0);
  CHECK(rasterize(p, 4, 4) == m);
}

TEST_CASE("extract_contours re-rasterizes hole-free masks exactly") {
  SeededRng rng(860);
  for (int trial = 0; trial < 25; ++trial) {
    PolygonSet p{star_ring(rng, 20, 20, 4 + 12 * rng.uniform01(),
                           8 + static_cast<int>(rng.uniform_below(9)))};
    InstanceMask m = rasterize(p, 40, 40);
    if (m.count() == 0) continue;
    CHECK(rasterize(extract_contours(m), 40, 40) == m);
  }
}

TEST_CASE("extract_contours joins 8-connected diagonal pixels into one ring") {
  InstanceMask m(4, 4);
  m.set(1, 1, true);
  m.set(2, 2, true);
  PolygonSet p = extract_contours(m);
  CHECK(p.size() == 1);
  CHECK(rasterize(p, 4, 4) == m);
}

TEST_CASE("extract_contours discards holes, filling them") {
  InstanceMask m(5, 5); // 3x3 donut
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x)
      if (x != 2 || y != 2) m.set(x, y, true);
  PolygonSet p = extract_contours(m);
  REQUIRE(p.size() == 1);
  InstanceMask filled = rasterize(p, 5, 5);
  CHECK(filled.count() == 9);
  CHECK(filled.get(2, 2));
}

TEST_CASE("extract_contours separates 4-disconnected components") {
  InstanceMask m(6, 10);
  m.set(1, 1, true);
  m.set(8, 4, true);
  PolygonSet p = extract_contours(m);
  CHECK(p.size() == 2);
  CHECK(rasterize(p, 6, 10) == m);
}

TEST_CASE("polygon_area is the absolute shoelace sum over rings") {
  Ring sq{{0, 0}, {5, 0}, {5, 5}, {0, 5}};
  Ring sq_cw{{0, 0}, {0, 2}, {2, 2}, {2, 0}}; // opposite orientation
  CHECK(polygon_area({sq}) == 25.0);
  CHECK(polygon_area({sq, sq_cw}) == 29.0);
}

TEST_CASE("polygon_bbox is the tight hull in xywh form") {
  Ring tri{{2, 1}, {7, 3}, {4, 9}};
  auto b = polygon_bbox({tri});
  CHECK(b[0] == 2.0);
  CHECK(b[1] == 1.0);
  CHECK(b[2] == 5.0);
  CHECK(b[3] == 8.0);
}
