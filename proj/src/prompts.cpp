#include "segnoise/prompts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "segnoise/errors.hpp"
#include "segnoise/noise.hpp"
#include "segnoise/parallel.hpp"

namespace segnoise {

namespace {

// First set pixel in row-major order, or {-1,-1}.
std::pair<int, int> first_pixel(const InstanceMask& m) {
  for (int y = 0; y < m.height(); ++y) {
    const std::uint64_t* r = m.row(y);
    for (int w = 0; w < m.words_per_row(); ++w) {
      if (r[w] != 0) {
        int x = w * 64 + std::countr_zero(r[w]);
        return {x, y};
      }
    }
  }
  return {-1, -1};
}

struct Bounds {
  int x0, y0, x1, y1; // inclusive
};

Bounds pixel_bounds(const InstanceMask& m) {
  Bounds b{m.width(), m.height(), -1, -1};
  for (int y = 0; y < m.height(); ++y) {
    const std::uint64_t* r = m.row(y);
    int first = -1, last = -1;
    for (int w = 0; w < m.words_per_row(); ++w) {
      if (r[w] == 0) continue;
      if (first < 0) first = w * 64 + std::countr_zero(r[w]);
      last = w * 64 + 63 - std::countl_zero(r[w]);
    }
    if (first < 0) continue;
    if (b.y1 < 0) b.y0 = y;
    b.y1 = y;
    b.x0 = std::min(b.x0, first);
    b.x1 = std::max(b.x1, last);
  }
  return b;
}

} // namespace

std::pair<int, int> center_point(const InstanceMask& m) {
  Bounds b = pixel_bounds(m);
  if (b.y1 < 0) throw ValidationError("center_point: empty mask");
  // Work on the tight crop; pixels outside the hull are background either
  // way, so the crop border behaves exactly like the image border.
  InstanceMask cur(b.y1 - b.y0 + 1, b.x1 - b.x0 + 1);
  for (int y = b.y0; y <= b.y1; ++y)
    for (int x = b.x0; x <= b.x1; ++x)
      if (m.get(x, y)) cur.set(x - b.x0, y - b.y0, true);
  while (true) {
    InstanceMask next = erode(cur, 3);
    if (next.count() == 0) break;
    cur = std::move(next);
  }
  auto [cx, cy] = first_pixel(cur);
  return {cx + b.x0, cy + b.y0};
}

std::pair<int, int> random_point(const InstanceMask& m, SeededRng& rng) {
  std::uint64_t total = m.count();
  if (total == 0) throw ValidationError("random_point: empty mask");
  std::uint64_t idx = rng.uniform_below(total);
  for (int y = 0; y < m.height(); ++y) {
    const std::uint64_t* r = m.row(y);
    for (int w = 0; w < m.words_per_row(); ++w) {
      std::uint64_t word = r[w];
      unsigned wc = static_cast<unsigned>(std::popcount(word));
      if (idx >= wc) {
        idx -= wc;
        continue;
      }
      while (idx > 0) {
        word &= word - 1;
        --idx;
      }
      return {w * 64 + std::countr_zero(word), y};
    }
  }
  throw ValidationError("random_point: pixel count mismatch");
}

std::array<double, 4> tight_box(const InstanceMask& m) {
  Bounds b = pixel_bounds(m);
  if (b.y1 < 0) throw ValidationError("tight_box: empty mask");
  return {static_cast<double>(b.x0), static_cast<double>(b.y0), static_cast<double>(b.x1 + 1),
          static_cast<double>(b.y1 + 1)};
}

std::array<double, 4> noisy_box(const std::array<double, 4>& b, SeededRng& rng, int width,
                                int height) {
  double x1 = b[0], y1 = b[1], x2 = b[2], y2 = b[3];
  std::uint64_t corner = rng.uniform_below(4);
  double dx = rng.normal(0.0, 2.0);
  double dy = rng.normal(0.0, 2.0);
  switch (corner) {
    case 0: x1 += dx; y1 += dy; break;
    case 1: x2 += dx; y1 += dy; break;
    case 2: x1 += dx; y2 += dy; break;
    default: x2 += dx; y2 += dy; break;
  }
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  x1 = std::clamp(x1, 0.0, static_cast<double>(width));
  x2 = std::clamp(x2, 0.0, static_cast<double>(width));
  y1 = std::clamp(y1, 0.0, static_cast<double>(height));
  y2 = std::clamp(y2, 0.0, static_cast<double>(height));
  if (x1 == x2) {
    if (x2 < width)
      x2 += 1.0;
    else
      x1 = std::max(0.0, x1 - 1.0);
  }
  if (y1 == y2) {
    if (y2 < height)
      y2 += 1.0;
    else
      y1 = std::max(0.0, y1 - 1.0);
  }
  return {x1, y1, x2, y2};
}

std::string prompts_jsonl(const Dataset& d, PromptKind kind, bool noisy,
                          std::uint64_t master_seed, unsigned workers, std::size_t* skipped) {
  auto images = image_index(d);
  std::vector<std::size_t> order(d.annotations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.annotations[a].id < d.annotations[b].id;
  });

  std::vector<std::string> lines(order.size());
  parallel_for(order.size(), workers, [&](std::size_t slot) {
    const Annotation& ann = d.annotations[order[slot]];
    const ImageInfo& img = d.images[images.at(ann.image_id)];
    InstanceMask m = annotation_mask(ann, img.height, img.width);
    if (m.count() == 0) return; // slot stays empty; reported as skipped
    std::uint64_t seed = sub_seed(master_seed, static_cast<std::uint64_t>(ann.id));
    ordered_json line;
    line["image_id"] = ann.image_id;
    line["annotation_id"] = ann.id;
    if (kind == PromptKind::point) {
      line["kind"] = "point";
      std::pair<int, int> p;
      if (noisy) {
        SeededRng rng(sub_seed(seed, kStreamRandomPoint));
        p = random_point(m, rng);
      } else {
        p = center_point(m);
      }
      line["payload"] = ordered_json::array({p.first, p.second});
    } else {
      line["kind"] = "box";
      std::array<double, 4> box = tight_box(m);
      if (noisy) {
        SeededRng rng(sub_seed(seed, kStreamNoisyBox));
        box = noisy_box(box, rng, img.width, img.height);
      }
      line["payload"] = ordered_json::array({box[0], box[1], box[2], box[3]});
    }
    line["perturbed"] = noisy;
    line["seed"] = seed;
    lines[slot] = line.dump();
  });

  std::string out;
  std::size_t skip_count = 0;
  for (const std::string& l : lines) {
    if (l.empty()) {
      ++skip_count;
      continue;
    }
    out += l;
    out += '\n';
  }
  if (skipped) *skipped = skip_count;
  return out;
}

} // namespace segnoise
