#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "segnoise/geometry.hpp"
#include "segnoise/mask.hpp"

namespace segnoise {

using ordered_json = nlohmann::ordered_json;

struct ImageInfo {
    long long id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;
    bool has_file_name = false;
    ordered_json extra; // unknown keys, original order, re-emitted verbatim
};

struct Category {
    long long id = 0;
    std::string name;
    std::string supercategory; // equals name for flat taxonomies
    ordered_json extra;
};

// Column-major (Fortran) run lengths over the pixel grid, first run counting
// background. sum(counts) == height * width.
struct Rle {
    int height = 0;
    int width = 0;
    std::vector<std::uint64_t> counts;
};

struct Annotation {
    long long id = 0;
    long long image_id = 0;
    long long category_id = 0;
    std::variant<PolygonSet, Rle> segmentation;
    // bbox and area are derived fields: recomputed from the segmentation on
    // serialization, never trusted from input.
    std::array<double, 4> bbox{};
    double area = 0.0;
    int iscrowd = 0;
    ordered_json extra;

    bool is_rle() const { return std::holds_alternative<Rle>(segmentation); }
    const PolygonSet& polygons() const { return std::get<PolygonSet>(segmentation); }
    PolygonSet& polygons() { return std::get<PolygonSet>(segmentation); }
    const Rle& rle() const { return std::get<Rle>(segmentation); }
    Rle& rle() { return std::get<Rle>(segmentation); }
};

struct Dataset {
    std::vector<ImageInfo> images;
    std::vector<Category> categories;
    std::vector<Annotation> annotations;
    ordered_json extra; // unknown top-level keys (info, licenses, ...)
};

// Id -> index maps. Parsing guarantees uniqueness and referential integrity.
std::unordered_map<long long, std::size_t> image_index(const Dataset& d);
std::unordered_map<long long, std::size_t> category_index(const Dataset& d);

// Parses and validates a COCO JSON document. Throws ValidationError on
// malformed JSON (with byte offset), duplicate or dangling ids, degenerate
// polygon rings, or RLE codec violations.
Dataset parse_dataset(const std::string& text);

// Canonical serialization: fixed key order, arrays sorted by id, shortest
// round-trip float rendering, derived fields recomputed, unknown keys passed
// through. Identical Dataset values produce identical bytes.
std::string serialize_dataset(const Dataset& d);

// Column-major RLE codec. decode throws when sum(counts) != height * width.
Rle rle_encode(const InstanceMask& m);
InstanceMask rle_decode(const Rle& r);

// COCO compressed counts-string codec, bit-exact with the reference
// implementation shipped with the COCO API.
std::string rle_compress(const std::vector<std::uint64_t>& counts);
std::vector<std::uint64_t> rle_decompress(const std::string& text);

// Full-image binary mask for an annotation (rasterized polygons or decoded
// RLE). RLE dimensions must match the image.
InstanceMask annotation_mask(const Annotation& a, int height, int width);

// Foreground pixel count of the segmentation, the value serialized as
// `area`. Polygons are rasterized over a window covering their hull.
double segmentation_area(const Annotation& a, int height, int width);

// Tight hull as (x, y, w, h): float vertex hull clamped to the image for
// polygons, pixel hull for RLE.
std::array<double, 4> segmentation_bbox(const Annotation& a, int height, int width);

// Shortest round-trip decimal rendering of a double, byte-identical to the
// JSON serializer's output. Shared by the CSV writers.
std::string number_repr(double v);

} // namespace segnoise
