#include "segnoise/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "segnoise/errors.hpp"
#include "segnoise/mask.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/rng.hpp"

namespace segnoise {

namespace {

constexpr double kMargin = 20.0; // instances keep this distance from borders
constexpr int kMaxPlacementAttempts = 25;
constexpr double kMaxOverlap = 0.35; // of the smaller bbox

// Target raster-area windows per size class, chosen clear of the 32^2 and
// 96^2 bucket edges so boundary pixels cannot flip the bucket.
constexpr double kAreaLo[3] = {256.0, 1300.0, 10500.0};
constexpr double kAreaHi[3] = {900.0, 8500.0, 20000.0};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct PendingInstance {
  long long category_id = 0;
  Ring ring;
  double bx1 = 0, by1 = 0, bx2 = 0, by2 = 0;
};

double rect_overlap_ratio(const PendingInstance& a, const PendingInstance& b) {
  double ix = std::max(0.0, std::min(a.bx2, b.bx2) - std::max(a.bx1, b.bx1));
  double iy = std::max(0.0, std::min(a.by2, b.by2) - std::max(a.by1, b.by1));
  double inter = ix * iy;
  double aa = (a.bx2 - a.bx1) * (a.by2 - a.by1);
  double ab = (b.bx2 - b.bx1) * (b.by2 - b.by1);
  double lo = std::min(aa, ab);
  return lo > 0.0 ? inter / lo : 0.0;
}

std::vector<PendingInstance> make_image_instances(const CorpusSpec& s, SeededRng& rng) {
  double mix_total = s.size_mix[0] + s.size_mix[1] + s.size_mix[2];
  int count = s.instances_min +
              static_cast<int>(rng.uniform_below(
                  static_cast<std::uint64_t>(s.instances_max - s.instances_min) + 1));
  std::vector<PendingInstance> placed;
  for (int k = 0; k < count; ++k) {
    PendingInstance inst;
    inst.category_id = 1 + static_cast<long long>(
                               rng.uniform_below(static_cast<std::uint64_t>(s.num_categories)));
    double u = rng.uniform01() * mix_total;
    int size_class = u <= s.size_mix[0] ? 0 : (u <= s.size_mix[0] + s.size_mix[1] ? 1 : 2);
    double target = kAreaLo[size_class] +
                    rng.uniform01() * (kAreaHi[size_class] - kAreaLo[size_class]);
    int n = s.vertices_min +
            static_cast<int>(rng.uniform_below(
                static_cast<std::uint64_t>(s.vertices_max - s.vertices_min) + 1));
    std::vector<double> qx(static_cast<std::size_t>(n)), qy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double theta = 2.0 * std::numbers::pi * (i + 0.1 + 0.8 * rng.uniform01()) / n;
      double f = 0.55 + 0.45 * rng.uniform01();
      qx[static_cast<std::size_t>(i)] = f * std::cos(theta);
      qy[static_cast<std::size_t>(i)] = f * std::sin(theta);
    }
    double area2 = 0.0;
    for (int i = 0; i < n; ++i) {
      int j = (i + 1) % n;
      area2 += qx[static_cast<std::size_t>(i)] * qy[static_cast<std::size_t>(j)] -
               qx[static_cast<std::size_t>(j)] * qy[static_cast<std::size_t>(i)];
    }
    double unit_area = std::abs(area2) / 2.0;
    double radius = std::sqrt(target / unit_area);
    auto minmax_x = std::minmax_element(qx.begin(), qx.end());
    auto minmax_y = std::minmax_element(qy.begin(), qy.end());
    // Shrink only if the shape cannot fit inside the margins at all.
    double fit_x = (s.width - 2.0 * kMargin) / (*minmax_x.second - *minmax_x.first);
    double fit_y = (s.height - 2.0 * kMargin) / (*minmax_y.second - *minmax_y.first);
    radius = std::min({radius, fit_x, fit_y});
    double xlo = kMargin - radius * *minmax_x.first;
    double xhi = s.width - kMargin - radius * *minmax_x.second;
    double ylo = kMargin - radius * *minmax_y.first;
    double yhi = s.height - kMargin - radius * *minmax_y.second;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      double cx = xlo + rng.uniform01() * (xhi - xlo);
      double cy = ylo + rng.uniform01() * (yhi - ylo);
      inst.ring.clear();
      inst.bx1 = 1e30;
      inst.by1 = 1e30;
      inst.bx2 = -1e30;
      inst.by2 = -1e30;
      for (int i = 0; i < n; ++i) {
        double px = round2(cx + radius * qx[static_cast<std::size_t>(i)]);
        double py = round2(cy + radius * qy[static_cast<std::size_t>(i)]);
        inst.ring.push_back(Point{px, py});
        inst.bx1 = std::min(inst.bx1, px);
        inst.by1 = std::min(inst.by1, py);
        inst.bx2 = std::max(inst.bx2, px);
        inst.by2 = std::max(inst.by2, py);
      }
      bool ok = true;
      for (const PendingInstance& other : placed)
        if (rect_overlap_ratio(inst, other) >= kMaxOverlap) {
          ok = false;
          break;
        }
      if (ok) break; // the last attempt is kept regardless
    }
    placed.push_back(std::move(inst));
  }
  return placed;
}

char digit(int v) { return static_cast<char>('0' + v); }

std::string image_name(int idx1) {
  std::string num(6, '0');
  int v = idx1;
  for (int i = 5; i >= 0 && v > 0; --i, v /= 10) num[static_cast<std::size_t>(i)] = digit(v % 10);
  return "synthetic_" + num + ".png";
}

} // namespace

Dataset generate_corpus(const CorpusSpec& spec, unsigned workers) {
  if (spec.num_images <= 0 || spec.width <= 0 || spec.height <= 0 || spec.instances_min < 0 ||
      spec.instances_max < spec.instances_min || spec.num_categories <= 0)
    throw ValidationError("corpus spec: all dimensions and counts must be positive");
  if (spec.num_supercategories < 1 || spec.num_categories < spec.num_supercategories)
    throw ValidationError("corpus spec: requires categories >= supercategories >= 1");
  if (spec.vertices_min < 3 || spec.vertices_max < spec.vertices_min)
    throw ValidationError("corpus spec: vertex range must satisfy 3 <= min <= max");
  if (spec.size_mix[0] < 0 || spec.size_mix[1] < 0 || spec.size_mix[2] < 0 ||
      spec.size_mix[0] + spec.size_mix[1] + spec.size_mix[2] <= 0)
    throw ValidationError("corpus spec: size mix must be non-negative and not all zero");
  // The shapes of the largest requested size class must fit between the
  // placement margins; 0.8 bounds the unit-ring area from below for typical
  // draws, making this a conservative radius estimate.
  int largest = spec.size_mix[2] > 0 ? 2 : (spec.size_mix[1] > 0 ? 1 : 0);
  double need = 2.0 * std::sqrt(kAreaHi[largest] / 0.8) + 2.0 * kMargin;
  if (spec.width < need || spec.height < need)
    throw ValidationError("corpus spec: image too small for the requested shape sizes");

  Dataset d;
  for (int c = 1; c <= spec.num_categories; ++c) {
    Category cat;
    cat.id = c;
    cat.name = "object_" + std::to_string(c);
    cat.supercategory = "group_" + std::to_string(c % spec.num_supercategories);
    d.categories.push_back(std::move(cat));
  }
  std::vector<std::vector<PendingInstance>> per_image(static_cast<std::size_t>(spec.num_images));
  parallel_for(per_image.size(), workers, [&](std::size_t i) {
    SeededRng rng(sub_seed(spec.seed, static_cast<std::uint64_t>(i) + 1));
    per_image[i] = make_image_instances(spec, rng);
  });
  long long next_ann = 1;
  for (int i = 0; i < spec.num_images; ++i) {
    ImageInfo img;
    img.id = i + 1;
    img.width = spec.width;
    img.height = spec.height;
    img.file_name = image_name(i + 1);
    img.has_file_name = true;
    d.images.push_back(std::move(img));
    for (PendingInstance& inst : per_image[static_cast<std::size_t>(i)]) {
      Annotation ann;
      ann.id = next_ann++;
      ann.image_id = i + 1;
      ann.category_id = inst.category_id;
      ann.segmentation = PolygonSet{std::move(inst.ring)};
      ann.iscrowd = 0;
      ann.area = segmentation_area(ann, spec.height, spec.width);
      ann.bbox = segmentation_bbox(ann, spec.height, spec.width);
      d.annotations.push_back(std::move(ann));
    }
  }
  return d;
}

namespace {

std::array<unsigned char, 3> category_color(long long id) {
  double hue = std::fmod(static_cast<double>(id) * 0.61803398875, 1.0) * 6.0;
  double s = 0.65, v = 0.95;
  int i = static_cast<int>(hue) % 6;
  double f = hue - std::floor(hue);
  double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r, g, b;
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  auto u8 = [](double x) { return static_cast<unsigned char>(std::lround(x * 255.0)); };
  return {u8(r), u8(g), u8(b)};
}

} // namespace

void render_ppm(const Dataset& d, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const ImageInfo& img : d.images) {
    std::vector<unsigned char> pix(static_cast<std::size_t>(img.width) *
                                       static_cast<std::size_t>(img.height) * 3,
                                   255);
    for (const Annotation& ann : d.annotations) {
      if (ann.image_id != img.id) continue;
      InstanceMask m = annotation_mask(ann, img.height, img.width);
      auto col = category_color(ann.category_id);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          if (m.get(x, y)) {
            std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) +
                             static_cast<std::size_t>(x)) *
                            3;
            pix[o] = col[0];
            pix[o + 1] = col[1];
            pix[o + 2] = col[2];
          }
    }
    std::string name = img.has_file_name ? img.file_name : ("image_" + std::to_string(img.id));
    auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name.resize(dot);
    std::filesystem::path out = std::filesystem::path(dir) / (name + ".ppm");
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write " + out.string());
    f << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    if (!f) throw IoError("short write to " + out.string());
  }
}

} // namespace segnoise
