#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "segnoise/coco_io.hpp"

namespace segnoise {

// Star-convex polygon corpus. Instances are drawn per image from a
// per-image random stream, so generation is reproducible for any worker
// count. Size classes target the three standard COCO area buckets with a
// safety margin so rasterized areas stay inside their bucket.
struct CorpusSpec {
  int num_images = 200;
  int width = 640;
  int height = 512;
  int instances_min = 6;
  int instances_max = 10;
  int num_categories = 8;
  int num_supercategories = 3;
  int vertices_min = 8;
  int vertices_max = 16;
  // Target fractions of small / medium / large instances (normalized).
  std::array<double, 3> size_mix = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::uint64_t seed = 1;
};

Dataset generate_corpus(const CorpusSpec& spec, unsigned workers = 1);

// Flat-color overlay of every annotation, one binary PPM per image, written
// as <dir>/<file_name with .ppm extension>.
void render_ppm(const Dataset& d, const std::string& dir);

} // namespace segnoise
