#include <doctest.h>

#include <string>

#include "oracles.hpp"
#include "segnoise/coco_io.hpp"
#include "segnoise/errors.hpp"
#include "segnoise/rng.hpp"

using namespace segnoise;

namespace {

const char* kMinimal = R"({
  "images": [{"id": 1, "width": 8, "height": 8, "file_name": "a.png"}],
  "categories": [{"id": 3, "name": "cat", "supercategory": "animal"}],
  "annotations": [{
    "id": 7, "image_id": 1, "category_id": 3,
    "segmentation": [[0, 0, 4, 0, 4, 4, 0, 4]],
    "bbox": [0, 0, 4, 4], "area": 16, "iscrowd": 0
  }]
})";

std::string with_annotation(const std::string& ann_fields) {
  return std::string(R"({
    "images": [{"id": 1, "width": 8, "height": 8}],
    "categories": [{"id": 3, "name": "cat"}],
    "annotations": [{)") +
         ann_fields + "}]}";
}

} // namespace

TEST_CASE("a minimal document parses into the expected structures") {
  Dataset d = parse_dataset(kMinimal);
  REQUIRE(d.images.size() == 1);
  CHECK(d.images[0].id == 1);
  CHECK(d.images[0].width == 8);
  CHECK(d.images[0].height == 8);
  CHECK(d.images[0].file_name == "a.png");
  REQUIRE(d.categories.size() == 1);
  CHECK(d.categories[0].name == "cat");
  CHECK(d.categories[0].supercategory == "animal");
  REQUIRE(d.annotations.size() == 1);
  const Annotation& a = d.annotations[0];
  CHECK(a.id == 7);
  CHECK_FALSE(a.is_rle());
  REQUIRE(a.polygons().size() == 1);
  CHECK(a.polygons()[0].size() == 4);
  CHECK(a.area == 16.0);
}

TEST_CASE("missing supercategory falls back to the category name") {
  Dataset d = parse_dataset(with_annotation(
      R"("id": 1, "image_id": 1, "category_id": 3,
         "segmentation": [[0,0,2,0,2,2,0,2]], "iscrowd": 0)"));
  CHECK(d.categories[0].supercategory == "cat");
}

TEST_CASE("unknown keys survive a parse-serialize round trip") {
  const char* doc = R"({
    "info": {"year": 2024, "version": "1.0"},
    "licenses": [{"id": 1, "name": "none"}],
    "images": [{"id": 1, "width": 8, "height": 8, "coco_url": "http://x", "flickr_url": "y"}],
    "categories": [{"id": 3, "name": "cat", "keypoints": ["nose"]}],
    "annotations": [{
      "id": 7, "image_id": 1, "category_id": 3,
      "segmentation": [[0, 0, 4, 0, 4, 4, 0, 4]], "iscrowd": 0,
      "score": 0.75, "tags": ["hard"]
    }]
  })";
  Dataset d = parse_dataset(doc);
  std::string out = serialize_dataset(d);
  auto j = ordered_json::parse(out);
  CHECK(j["info"]["year"] == 2024);
  CHECK(j["licenses"][0]["name"] == "none");
  CHECK(j["images"][0]["coco_url"] == "http://x");
  CHECK(j["categories"][0]["keypoints"][0] == "nose");
  CHECK(j["annotations"][0]["score"] == 0.75);
  CHECK(j["annotations"][0]["tags"][0] == "hard");
}

TEST_CASE("serialization is canonical: sorted ids, fixed key order, stable bytes") {
  const char* shuffled = R"({
    "annotations": [
      {"id": 9, "image_id": 2, "category_id": 3, "segmentation": [[0,0,2,0,2,2]], "iscrowd": 0},
      {"id": 4, "image_id": 1, "category_id": 3, "segmentation": [[1,1,3,1,3,3]], "iscrowd": 0}
    ],
    "categories": [{"id": 3, "name": "cat"}],
    "images": [
      {"id": 2, "width": 8, "height": 8},
      {"id": 1, "width": 8, "height": 8}
    ]
  })";
  Dataset d = parse_dataset(shuffled);
  std::string a = serialize_dataset(d);
  std::string b = serialize_dataset(parse_dataset(a));
  CHECK(a == b);
  auto j = ordered_json::parse(a);
  CHECK(j["images"][0]["id"] == 1);
  CHECK(j["images"][1]["id"] == 2);
  CHECK(j["annotations"][0]["id"] == 4);
  CHECK(j["annotations"][1]["id"] == 9);
  // Key order inside an annotation is fixed regardless of input order.
  std::vector<std::string> keys;
  for (auto it = j["annotations"][0].begin(); it != j["annotations"][0].end(); ++it)
    keys.push_back(it.key());
  REQUIRE(keys.size() >= 7);
  CHECK(keys[0] == "id");
  CHECK(keys[1] == "image_id");
  CHECK(keys[2] == "category_id");
}

TEST_CASE("derived area and bbox are recomputed, not trusted") {
  Dataset d = parse_dataset(with_annotation(
      R"("id": 1, "image_id": 1, "category_id": 3,
         "segmentation": [[0,0,4,0,4,4,0,4]],
         "bbox": [99, 99, 1, 1], "area": 12345, "iscrowd": 0)"));
  auto j = ordered_json::parse(serialize_dataset(d));
  CHECK(j["annotations"][0]["area"] == 16.0);
  CHECK(j["annotations"][0]["bbox"][0] == 0.0);
  CHECK(j["annotations"][0]["bbox"][2] == 4.0);
}

TEST_CASE("duplicate ids are rejected") {
  CHECK_THROWS_AS(parse_dataset(R"({
    "images": [{"id": 1, "width": 4, "height": 4}, {"id": 1, "width": 4, "height": 4}],
    "categories": [{"id": 1, "name": "c"}], "annotations": []})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(R"({
    "images": [{"id": 1, "width": 4, "height": 4}],
    "categories": [{"id": 1, "name": "c"}, {"id": 1, "name": "d"}], "annotations": []})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(R"({
    "images": [{"id": 1, "width": 4, "height": 4}],
    "categories": [{"id": 1, "name": "c"}],
    "annotations": [
      {"id": 2, "image_id": 1, "category_id": 1, "segmentation": [[0,0,2,0,2,2]], "iscrowd": 0},
      {"id": 2, "image_id": 1, "category_id": 1, "segmentation": [[0,0,2,0,2,2]], "iscrowd": 0}
    ]})"),
                  ValidationError);
}

TEST_CASE("dangling references are rejected") {
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 99, "category_id": 3,
                         "segmentation": [[0,0,2,0,2,2]], "iscrowd": 0)")),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 99,
                         "segmentation": [[0,0,2,0,2,2]], "iscrowd": 0)")),
                  ValidationError);
}

TEST_CASE("degenerate polygon payloads are rejected") {
  // Odd number of coordinates.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": [[0,0,2,0,2]], "iscrowd": 0)")),
                  ValidationError);
  // Fewer than three vertices.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": [[0,0,2,0]], "iscrowd": 0)")),
                  ValidationError);
}

TEST_CASE("iscrowd values are validated against the segmentation form") {
  // Polygons with iscrowd=1 contradict the format.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": [[0,0,2,0,2,2]], "iscrowd": 1)")),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": [[0,0,2,0,2,2]], "iscrowd": 2)")),
                  ValidationError);
}

TEST_CASE("RLE payloads are validated") {
  // Interior zero run.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": {"size": [8, 8], "counts": [3, 0, 2, 59]},
                         "iscrowd": 1)")),
                  ValidationError);
  // Counts do not cover the grid.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": {"size": [8, 8], "counts": [3, 2]},
                         "iscrowd": 1)")),
                  ValidationError);
  // Size disagrees with the referenced image.
  CHECK_THROWS_AS(parse_dataset(with_annotation(
                      R"("id": 1, "image_id": 1, "category_id": 3,
                         "segmentation": {"size": [4, 4], "counts": [12, 4]},
                         "iscrowd": 1)")),
                  ValidationError);
}

TEST_CASE("RLE counts parse from both array and compressed-string form") {
  Dataset da = parse_dataset(with_annotation(
      R"("id": 1, "image_id": 1, "category_id": 3,
         "segmentation": {"size": [8, 8], "counts": [3, 2, 59]}, "iscrowd": 1)"));
  REQUIRE(da.annotations[0].is_rle());
  CHECK(da.annotations[0].rle().counts == std::vector<std::uint64_t>{3, 2, 59});

  std::string compressed = rle_compress({3, 2, 59});
  Dataset ds = parse_dataset(with_annotation(
      R"("id": 1, "image_id": 1, "category_id": 3,
         "segmentation": {"size": [8, 8], "counts": ")" +
      compressed + R"("}, "iscrowd": 1)"));
  CHECK(ds.annotations[0].rle().counts == std::vector<std::uint64_t>{3, 2, 59});
  // Compressed annotations serialize back to a compressed string.
  auto j = ordered_json::parse(serialize_dataset(ds));
  CHECK(j["annotations"][0]["segmentation"]["counts"] == compressed);
}

TEST_CASE("malformed JSON reports the byte offset") {
  try {
    parse_dataset("{\"images\": [");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("rle_encode walks columns top to bottom, background first") {
  InstanceMask m(2, 2);
  m.set(0, 1, true); // column 0, row 1 -> linear index 1
  m.set(1, 0, true); // column 1, row 0 -> linear index 2
  Rle r = rle_encode(m);
  CHECK(r.counts == std::vector<std::uint64_t>{1, 2, 1});
  CHECK(rle_decode(r) == m);
}

TEST_CASE("rle_encode of empty and full masks") {
  InstanceMask empty(3, 5);
  CHECK(rle_encode(empty).counts == std::vector<std::uint64_t>{15});
  InstanceMask full(3, 5);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) full.set(x, y, true);
  CHECK(rle_encode(full).counts == std::vector<std::uint64_t>{0, 15});
}

TEST_CASE("compressed counts match frozen reference strings") {
  CHECK(rle_compress({4}) == "4");
  CHECK(rle_compress({0, 1, 3}) == "013");
  CHECK(rle_compress({0, 4}) == "04");
  CHECK(rle_compress({0, 1}) == "01");
  CHECK(rle_compress({2, 3, 4, 5, 6}) == "23422");
  CHECK(rle_compress({1000000}) == "Pb`n0");
}

TEST_CASE("compressed counts round-trip against an independent codec") {
  SeededRng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> counts;
    int n = 1 + static_cast<int>(rng.uniform_below(12));
    for (int i = 0; i < n; ++i) {
      std::uint64_t v = rng.uniform_below(1 + rng.uniform_below(3000));
      if (i > 0 && v == 0) v = 1; // interior zeros are not representable intent
      counts.push_back(v);
    }
    std::vector<long long> signed_counts(counts.begin(), counts.end());
    std::string lib = rle_compress(counts);
    std::string ref = oracle::rle_to_string(signed_counts);
    CHECK(lib == ref);
    CHECK(rle_decompress(ref) == counts);
    CHECK(oracle::rle_from_string(lib) == signed_counts);
  }
}

TEST_CASE("annotation_mask rasterizes polygons and decodes RLE") {
  Dataset d = parse_dataset(kMinimal);
  InstanceMask m = annotation_mask(d.annotations[0], 8, 8);
  CHECK(m.count() == 16);
  CHECK(segmentation_area(d.annotations[0], 8, 8) == 16.0);
  auto b = segmentation_bbox(d.annotations[0], 8, 8);
  CHECK(b == std::array<double, 4>{0, 0, 4, 4});

  Annotation r;
  r.segmentation = rle_encode(m);
  r.iscrowd = 1;
  CHECK(annotation_mask(r, 8, 8) == m);
  CHECK(segmentation_area(r, 8, 8) == 16.0);
  // RLE bbox is the pixel hull.
  CHECK(segmentation_bbox(r, 8, 8) == std::array<double, 4>{0, 0, 4, 4});
}

TEST_CASE("number_repr renders shortest round-trip decimals") {
  CHECK(number_repr(0.1) == "0.1");
  CHECK(number_repr(1.0) == "1.0");
  CHECK(number_repr(16.0) == "16.0");
  CHECK(number_repr(0.5) == "0.5");
  CHECK(number_repr(1e10) == "10000000000.0");
}
