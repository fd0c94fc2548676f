#include "segnoise/coco_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segnoise/errors.hpp"

namespace segnoise {

namespace {

std::string describe(const char* what, long long id) {
    return std::string(what) + " (annotation " + std::to_string(id) + ")";
}

long long require_int(const ordered_json& obj, const char* key, const char* ctx) {
    auto it = obj.find(key);
    if (it == obj.end() || !(it->is_number_integer() || it->is_number_unsigned()))
        throw ValidationError(std::string(ctx) + ": missing or non-integer '" + key + "'");
    return it->get<long long>();
}

double to_coord(const ordered_json& v, const char* ctx) {
    if (!v.is_number())
        throw ValidationError(std::string(ctx) + ": non-numeric coordinate");
    return v.get<double>();
}

// Keys consumed by the typed fields; everything else is pass-through.
bool known_image_key(const std::string& k) {
    return k == "id" || k == "width" || k == "height" || k == "file_name";
}
bool known_category_key(const std::string& k) {
    return k == "id" || k == "name" || k == "supercategory";
}
bool known_annotation_key(const std::string& k) {
    return k == "id" || k == "image_id" || k == "category_id" || k == "segmentation" ||
           k == "bbox" || k == "area" || k == "iscrowd";
}

ordered_json collect_extra(const ordered_json& obj, bool (*known)(const std::string&)) {
    ordered_json extra = ordered_json::object();
    for (const auto& [k, v] : obj.items())
        if (!known(k))
            extra[k] = v;
    return extra;
}

void validate_rle(const Rle& r, long long ann_id) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
        if (i > 0 && r.counts[i] == 0)
            throw ValidationError(describe("RLE zero run at interior index", ann_id));
        total += r.counts[i];
    }
    const std::uint64_t expect =
        static_cast<std::uint64_t>(r.height) * static_cast<std::uint64_t>(r.width);
    if (total != expect)
        throw ValidationError(describe("RLE counts do not sum to height*width", ann_id));
}

Rle parse_rle_object(const ordered_json& seg, long long ann_id) {
    auto size_it = seg.find("size");
    auto counts_it = seg.find("counts");
    if (size_it == seg.end() || counts_it == seg.end() || !size_it->is_array() ||
        size_it->size() != 2)
        throw ValidationError(describe("RLE segmentation needs size [h,w] and counts", ann_id));
    Rle r;
    r.height = static_cast<int>((*size_it)[0].get<long long>());
    r.width = static_cast<int>((*size_it)[1].get<long long>());
    if (r.height < 1 || r.width < 1)
        throw ValidationError(describe("RLE size must be positive", ann_id));
    if (counts_it->is_string()) {
        r.counts = rle_decompress(counts_it->get<std::string>());
    } else if (counts_it->is_array()) {
        for (const auto& c : *counts_it) {
            if (!(c.is_number_integer() || c.is_number_unsigned()) || c.get<long long>() < 0)
                throw ValidationError(describe("RLE counts must be non-negative integers", ann_id));
            r.counts.push_back(c.get<std::uint64_t>());
        }
    } else {
        throw ValidationError(describe("RLE counts must be a string or an array", ann_id));
    }
    validate_rle(r, ann_id);
    return r;
}

PolygonSet parse_polygons(const ordered_json& seg, long long ann_id) {
    PolygonSet polys;
    for (const auto& flat : seg) {
        if (!flat.is_array())
            throw ValidationError(describe("polygon entry is not an array", ann_id));
        if (flat.size() % 2 != 0 || flat.size() < 6)
            throw ValidationError(describe("polygon ring with fewer than 3 points", ann_id));
        Ring ring;
        ring.reserve(flat.size() / 2);
        for (std::size_t i = 0; i < flat.size(); i += 2)
            ring.push_back({to_coord(flat[i], "polygon"), to_coord(flat[i + 1], "polygon")});
        polys.push_back(std::move(ring));
    }
    if (polys.empty())
        throw ValidationError(describe("empty polygon segmentation", ann_id));
    return polys;
}

} // namespace

std::unordered_map<long long, std::size_t> image_index(const Dataset& d) {
    std::unordered_map<long long, std::size_t> idx;
    idx.reserve(d.images.size());
    for (std::size_t i = 0; i < d.images.size(); ++i)
        idx.emplace(d.images[i].id, i);
    return idx;
}

std::unordered_map<long long, std::size_t> category_index(const Dataset& d) {
    std::unordered_map<long long, std::size_t> idx;
    idx.reserve(d.categories.size());
    for (std::size_t i = 0; i < d.categories.size(); ++i)
        idx.emplace(d.categories[i].id, i);
    return idx;
}

Dataset parse_dataset(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("JSON parse error at byte " + std::to_string(e.byte) + ": " +
                              e.what());
    }
    if (!root.is_object())
        throw ValidationError("top level is not a JSON object");
    for (const char* key : {"images", "categories", "annotations"}) {
        auto it = root.find(key);
        if (it == root.end() || !it->is_array())
            throw ValidationError(std::string("missing top-level array '") + key + "'");
    }

    Dataset d;
    d.extra = ordered_json::object();
    for (const auto& [k, v] : root.items())
        if (k != "images" && k != "categories" && k != "annotations")
            d.extra[k] = v;

    for (const auto& obj : root["images"]) {
        if (!obj.is_object())
            throw ValidationError("image entry is not an object");
        ImageInfo img;
        img.id = require_int(obj, "id", "image");
        img.width = static_cast<int>(require_int(obj, "width", "image"));
        img.height = static_cast<int>(require_int(obj, "height", "image"));
        if (img.width < 1 || img.height < 1)
            throw ValidationError("image " + std::to_string(img.id) +
                                  ": width and height must be >= 1");
        if (auto it = obj.find("file_name"); it != obj.end()) {
            if (!it->is_string())
                throw ValidationError("image " + std::to_string(img.id) +
                                      ": file_name must be a string");
            img.file_name = it->get<std::string>();
            img.has_file_name = true;
        }
        img.extra = collect_extra(obj, known_image_key);
        d.images.push_back(std::move(img));
    }

    for (const auto& obj : root["categories"]) {
        if (!obj.is_object())
            throw ValidationError("category entry is not an object");
        Category cat;
        cat.id = require_int(obj, "id", "category");
        auto name_it = obj.find("name");
        if (name_it == obj.end() || !name_it->is_string() || name_it->get<std::string>().empty())
            throw ValidationError("category " + std::to_string(cat.id) +
                                  ": missing or empty name");
        cat.name = name_it->get<std::string>();
        if (auto it = obj.find("supercategory"); it != obj.end() && it->is_string())
            cat.supercategory = it->get<std::string>();
        else
            cat.supercategory = cat.name; // flat taxonomy
        cat.extra = collect_extra(obj, known_category_key);
        d.categories.push_back(std::move(cat));
    }

    auto img_idx = image_index(d);
    auto cat_idx = category_index(d);
    if (img_idx.size() != d.images.size())
        throw ValidationError("duplicate image id");
    if (cat_idx.size() != d.categories.size())
        throw ValidationError("duplicate category id");

    std::unordered_map<long long, bool> ann_ids;
    for (const auto& obj : root["annotations"]) {
        if (!obj.is_object())
            throw ValidationError("annotation entry is not an object");
        Annotation ann;
        ann.id = require_int(obj, "id", "annotation");
        if (!ann_ids.emplace(ann.id, true).second)
            throw ValidationError(describe("duplicate annotation id", ann.id));
        ann.image_id = require_int(obj, "image_id", "annotation");
        ann.category_id = require_int(obj, "category_id", "annotation");
        auto img_it = img_idx.find(ann.image_id);
        if (img_it == img_idx.end())
            throw ValidationError(describe("image_id does not resolve", ann.id));
        if (!cat_idx.count(ann.category_id))
            throw ValidationError(describe("category_id does not resolve", ann.id));
        if (auto it = obj.find("iscrowd"); it != obj.end()) {
            long long v = require_int(obj, "iscrowd", "annotation");
            if (v != 0 && v != 1)
                throw ValidationError(describe("iscrowd must be 0 or 1", ann.id));
            ann.iscrowd = static_cast<int>(v);
        }

        auto seg_it = obj.find("segmentation");
        if (seg_it == obj.end())
            throw ValidationError(describe("missing segmentation", ann.id));
        if (seg_it->is_array()) {
            ann.segmentation = parse_polygons(*seg_it, ann.id);
        } else if (seg_it->is_object()) {
            Rle r = parse_rle_object(*seg_it, ann.id);
            const ImageInfo& img = d.images[img_it->second];
            if (r.height != img.height || r.width != img.width)
                throw ValidationError(describe("RLE size does not match its image", ann.id));
            ann.segmentation = std::move(r);
        } else {
            throw ValidationError(describe("segmentation is neither polygons nor RLE", ann.id));
        }
        if (ann.iscrowd == 1 && !ann.is_rle())
            throw ValidationError(describe("iscrowd=1 requires RLE segmentation", ann.id));

        // bbox and area are derived; input values are intentionally ignored.
        const ImageInfo& img = d.images[img_it->second];
        ann.area = segmentation_area(ann, img.height, img.width);
        ann.bbox = segmentation_bbox(ann, img.height, img.width);
        ann.extra = collect_extra(obj, known_annotation_key);
        d.annotations.push_back(std::move(ann));
    }
    return d;
}

namespace {

ordered_json segmentation_json(const Annotation& a) {
    if (a.is_rle()) {
        ordered_json seg = ordered_json::object();
        seg["size"] = {a.rle().height, a.rle().width};
        seg["counts"] = rle_compress(a.rle().counts);
        return seg;
    }
    ordered_json seg = ordered_json::array();
    for (const Ring& ring : a.polygons()) {
        ordered_json flat = ordered_json::array();
        for (const Point& v : ring) {
            flat.push_back(v.x);
            flat.push_back(v.y);
        }
        seg.push_back(std::move(flat));
    }
    return seg;
}

template <typename T>
std::vector<std::size_t> order_by_id(const std::vector<T>& items) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return items[a].id < items[b].id; });
    return order;
}

void append_extra(ordered_json& obj, const ordered_json& extra) {
    if (!extra.is_object())
        return;
    for (const auto& [k, v] : extra.items())
        obj[k] = v;
}

} // namespace

std::string serialize_dataset(const Dataset& d) {
    auto img_idx = image_index(d);

    ordered_json root = ordered_json::object();
    ordered_json images = ordered_json::array();
    for (std::size_t i : order_by_id(d.images)) {
        const ImageInfo& img = d.images[i];
        ordered_json obj = ordered_json::object();
        obj["id"] = img.id;
        obj["width"] = img.width;
        obj["height"] = img.height;
        if (img.has_file_name)
            obj["file_name"] = img.file_name;
        append_extra(obj, img.extra);
        images.push_back(std::move(obj));
    }
    root["images"] = std::move(images);

    ordered_json categories = ordered_json::array();
    for (std::size_t i : order_by_id(d.categories)) {
        const Category& cat = d.categories[i];
        ordered_json obj = ordered_json::object();
        obj["id"] = cat.id;
        obj["name"] = cat.name;
        obj["supercategory"] = cat.supercategory;
        append_extra(obj, cat.extra);
        categories.push_back(std::move(obj));
    }
    root["categories"] = std::move(categories);

    ordered_json annotations = ordered_json::array();
    for (std::size_t i : order_by_id(d.annotations)) {
        const Annotation& ann = d.annotations[i];
        auto it = img_idx.find(ann.image_id);
        if (it == img_idx.end())
            throw ValidationError(describe("image_id does not resolve", ann.id));
        const ImageInfo& img = d.images[it->second];
        ordered_json obj = ordered_json::object();
        obj["id"] = ann.id;
        obj["image_id"] = ann.image_id;
        obj["category_id"] = ann.category_id;
        obj["segmentation"] = segmentation_json(ann);
        auto bbox = segmentation_bbox(ann, img.height, img.width);
        obj["bbox"] = {bbox[0], bbox[1], bbox[2], bbox[3]};
        obj["area"] = segmentation_area(ann, img.height, img.width);
        obj["iscrowd"] = ann.iscrowd;
        append_extra(obj, ann.extra);
        annotations.push_back(std::move(obj));
    }
    root["annotations"] = std::move(annotations);
    append_extra(root, d.extra);
    return root.dump();
}

Rle rle_encode(const InstanceMask& m) {
    Rle r;
    r.height = m.height();
    r.width = m.width();
    std::uint64_t run = 0;
    bool current = false; // first run counts background
    for (int x = 0; x < m.width(); ++x)
        for (int y = 0; y < m.height(); ++y) {
            bool v = m.get(x, y);
            if (v == current) {
                ++run;
            } else {
                r.counts.push_back(run);
                current = v;
                run = 1;
            }
        }
    r.counts.push_back(run);
    return r;
}

InstanceMask rle_decode(const Rle& r) {
    std::uint64_t total = 0;
    for (std::uint64_t c : r.counts)
        total += c;
    const std::uint64_t expect =
        static_cast<std::uint64_t>(r.height) * static_cast<std::uint64_t>(r.width);
    if (total != expect)
        throw ValidationError("RLE counts do not sum to height*width");
    InstanceMask m(r.height, r.width);
    std::uint64_t pos = 0;
    bool value = false;
    for (std::uint64_t c : r.counts) {
        if (value)
            for (std::uint64_t i = pos; i < pos + c; ++i)
                m.set(static_cast<int>(i / r.height), static_cast<int>(i % r.height), true);
        pos += c;
        value = !value;
    }
    return m;
}

std::string rle_compress(const std::vector<std::uint64_t>& counts) {
    std::string s;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        long long x = static_cast<long long>(counts[i]);
        if (i > 2)
            x -= static_cast<long long>(counts[i - 2]); // delta from index 3 on
        bool more = true;
        while (more) {
            long long c = x & 0x1f;
            x >>= 5; // arithmetic shift: sign propagates
            more = (c & 0x10) ? (x != -1) : (x != 0);
            if (more)
                c |= 0x20;
            s.push_back(static_cast<char>(c + 48));
        }
    }
    return s;
}

std::vector<std::uint64_t> rle_decompress(const std::string& text) {
    std::vector<long long> cnts;
    std::size_t p = 0;
    while (p < text.size()) {
        long long x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= text.size())
                throw ValidationError("RLE string: truncated continuation chain");
            long long c = static_cast<long long>(static_cast<unsigned char>(text[p])) - 48;
            if (c < 0 || c > 63)
                throw ValidationError("RLE string: character outside [48, 111]");
            if (k > 11)
                throw ValidationError("RLE string: continuation chain too long");
            x |= (c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10))
                x |= -1ll << (5 * k); // sign-extend the final chunk
        }
        if (cnts.size() > 2)
            x += cnts[cnts.size() - 2];
        if (x < 0)
            throw ValidationError("RLE string: negative run length");
        cnts.push_back(x);
    }
    return std::vector<std::uint64_t>(cnts.begin(), cnts.end());
}

InstanceMask annotation_mask(const Annotation& a, int height, int width) {
    if (a.is_rle()) {
        if (a.rle().height != height || a.rle().width != width)
            throw ValidationError(describe("RLE size does not match its image", a.id));
        return rle_decode(a.rle());
    }
    return rasterize(a.polygons(), height, width);
}

namespace {

std::uint64_t windowed_raster_count(const PolygonSet& p, int height, int width) {
    auto bb = polygon_bbox(p);
    int x0 = std::max(0, static_cast<int>(std::floor(bb[0])) - 1);
    int y0 = std::max(0, static_cast<int>(std::floor(bb[1])) - 1);
    int x1 = std::min(width, static_cast<int>(std::ceil(bb[0] + bb[2])) + 1);
    int y1 = std::min(height, static_cast<int>(std::ceil(bb[1] + bb[3])) + 1);
    if (x1 <= x0 || y1 <= y0)
        return 0;
    PolygonSet local;
    local.reserve(p.size());
    for (const Ring& ring : p)
        local.push_back(shift(ring, -x0, -y0));
    return rasterize(local, y1 - y0, x1 - x0).count();
}

} // namespace

double segmentation_area(const Annotation& a, int height, int width) {
    if (a.is_rle()) {
        std::uint64_t fg = 0;
        for (std::size_t i = 1; i < a.rle().counts.size(); i += 2)
            fg += a.rle().counts[i];
        return static_cast<double>(fg);
    }
    return static_cast<double>(windowed_raster_count(a.polygons(), height, width));
}

std::array<double, 4> segmentation_bbox(const Annotation& a, int height, int width) {
    if (a.is_rle()) {
        const Rle& r = a.rle();
        long long minx = r.width, maxx = -1, miny = r.height, maxy = -1;
        std::uint64_t pos = 0;
        bool value = false;
        for (std::uint64_t c : r.counts) {
            if (value && c > 0) {
                std::uint64_t first = pos, last = pos + c - 1;
                long long c0 = static_cast<long long>(first / r.height);
                long long c1 = static_cast<long long>(last / r.height);
                minx = std::min(minx, c0);
                maxx = std::max(maxx, c1);
                if (c0 == c1) {
                    miny = std::min(miny, static_cast<long long>(first % r.height));
                    maxy = std::max(maxy, static_cast<long long>(last % r.height));
                } else { // run spans a column boundary, so it touches both ends
                    miny = 0;
                    maxy = r.height - 1;
                }
            }
            pos += c;
            value = !value;
        }
        if (maxx < 0)
            return {0.0, 0.0, 0.0, 0.0};
        return {static_cast<double>(minx), static_cast<double>(miny),
                static_cast<double>(maxx - minx + 1), static_cast<double>(maxy - miny + 1)};
    }
    auto bb = polygon_bbox(a.polygons());
    double x0 = std::clamp(bb[0], 0.0, static_cast<double>(width));
    double y0 = std::clamp(bb[1], 0.0, static_cast<double>(height));
    double x1 = std::clamp(bb[0] + bb[2], 0.0, static_cast<double>(width));
    double y1 = std::clamp(bb[1] + bb[3], 0.0, static_cast<double>(height));
    return {x0, y0, x1 - x0, y1 - y0};
}

std::string number_repr(double v) {
    return ordered_json(v).dump();
}

} // namespace segnoise
