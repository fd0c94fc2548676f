#include "segnoise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "segnoise/errors.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/rng.hpp"

namespace segnoise {

const char* noise_mode_name(NoiseMode m) {
    switch (m) {
    case NoiseMode::composite: return "composite";
    case NoiseMode::dilation: return "dilation";
    case NoiseMode::erosion: return "erosion";
    case NoiseMode::opening: return "opening";
    case NoiseMode::random_scale: return "random_scale";
    case NoiseMode::shifting: return "shifting";
    case NoiseMode::localization: return "localization";
    case NoiseMode::approximation: return "approximation";
    }
    return "composite";
}

NoiseMode noise_mode_from_name(const std::string& name) {
    for (NoiseMode m : {NoiseMode::composite, NoiseMode::dilation, NoiseMode::erosion,
                        NoiseMode::opening, NoiseMode::random_scale, NoiseMode::shifting,
                        NoiseMode::localization, NoiseMode::approximation})
        if (name == noise_mode_name(m))
            return m;
    throw ValidationError("unknown mode '" + name + "'");
}

void NoiseConfig::validate() const {
    if (sigma_approx < 0 || sigma_loc < 0 || sigma_scale < 0)
        throw ValidationError("config: sigmas must be >= 0");
    if (p_class < 0 || p_class > 1 || p_delete < 0 || p_delete > 1)
        throw ValidationError("config: probabilities must be in [0, 1]");
}

NoiseConfig preset(const std::string& tier) {
    NoiseConfig c;
    if (tier == "low") {
        c.mu_approx = 5; c.sigma_approx = 2.5;
        c.mu_loc = 2; c.sigma_loc = 0.5;
        c.mu_scale = 3; c.sigma_scale = 1;
    } else if (tier == "medium") {
        c.mu_approx = 10; c.sigma_approx = 2.5;
        c.mu_loc = 3; c.sigma_loc = 0.5;
        c.mu_scale = 5; c.sigma_scale = 1;
    } else if (tier == "high") {
        c.mu_approx = 15; c.sigma_approx = 10;
        c.mu_loc = 4; c.sigma_loc = 2;
        c.mu_scale = 7; c.sigma_scale = 4;
    } else {
        throw ValidationError("unknown preset '" + tier + "'");
    }
    c.p_class = 0.05;
    c.p_delete = 0.05;
    return c;
}

namespace {

void parse_mu_sigma(const ordered_json& v, const char* key, double& mu, double& sigma) {
    if (!v.is_object())
        throw ValidationError(std::string("config: '") + key + "' must be {mu, sigma}");
    for (const auto& [k, val] : v.items()) {
        if (k == "mu")
            mu = val.get<double>();
        else if (k == "sigma")
            sigma = val.get<double>();
        else
            throw ValidationError(std::string("config: unknown key '") + k + "' in '" + key +
                                  "'");
    }
}

} // namespace

NoiseConfig parse_noise_config(const ordered_json& doc, NoiseConfig base) {
    if (!doc.is_object())
        throw ValidationError("config: top level must be an object");
    NoiseConfig c = base;
    if (auto it = doc.find("preset"); it != doc.end()) {
        if (!it->is_string())
            throw ValidationError("config: 'preset' must be a string");
        std::uint64_t seed = c.master_seed;
        NoiseMode mode = c.mode;
        c = preset(it->get<std::string>());
        c.master_seed = seed;
        c.mode = mode;
    }
    for (const auto& [k, v] : doc.items()) {
        if (k == "preset") {
            continue; // applied above, before overrides
        } else if (k == "mode") {
            c.mode = noise_mode_from_name(v.get<std::string>());
        } else if (k == "seed") {
            if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)))
                throw ValidationError("config: 'seed' must be a non-negative integer");
            c.master_seed = v.get<std::uint64_t>();
        } else if (k == "approx") {
            parse_mu_sigma(v, "approx", c.mu_approx, c.sigma_approx);
        } else if (k == "loc") {
            parse_mu_sigma(v, "loc", c.mu_loc, c.sigma_loc);
        } else if (k == "scale") {
            parse_mu_sigma(v, "scale", c.mu_scale, c.sigma_scale);
        } else if (k == "p_class") {
            c.p_class = v.get<double>();
        } else if (k == "p_delete") {
            c.p_delete = v.get<double>();
        } else if (k == "enabled") {
            if (!v.is_array())
                throw ValidationError("config: 'enabled' must be an array of noise names");
            c.enable_delete = c.enable_class = c.enable_approx = c.enable_loc =
                c.enable_scale = false;
            for (const auto& name : v) {
                std::string n = name.get<std::string>();
                if (n == "deletion")
                    c.enable_delete = true;
                else if (n == "class_confusion")
                    c.enable_class = true;
                else if (n == "approximation")
                    c.enable_approx = true;
                else if (n == "localization")
                    c.enable_loc = true;
                else if (n == "scale")
                    c.enable_scale = true;
                else
                    throw ValidationError("config: unknown noise type '" + n + "' in 'enabled'");
            }
        } else if (k == "loc_shared_sign") {
            if (!v.is_boolean())
                throw ValidationError("config: 'loc_shared_sign' must be a boolean");
            c.loc_shared_sign = v.get<bool>();
        } else {
            throw ValidationError("config: unknown key '" + k + "'");
        }
    }
    c.validate();
    return c;
}

namespace {

// Swap candidates per category: other categories sharing the supercategory,
// or every other category when the supercategory is a singleton. Sorted by
// id so draws are reproducible.
std::unordered_map<long long, std::vector<long long>> swap_candidates(const Dataset& d) {
    std::unordered_map<long long, std::vector<long long>> result;
    for (const Category& cat : d.categories) {
        std::vector<long long> same, all;
        for (const Category& other : d.categories) {
            if (other.id == cat.id)
                continue;
            all.push_back(other.id);
            if (other.supercategory == cat.supercategory)
                same.push_back(other.id);
        }
        std::vector<long long>& chosen = same.empty() ? all : same;
        std::sort(chosen.begin(), chosen.end());
        result.emplace(cat.id, std::move(chosen));
    }
    return result;
}

struct PerAnnResult {
    std::optional<Annotation> out;
    ChangeRecord rec;
};

void clamp_rings(PolygonSet& polys, int width, int height) {
    for (Ring& ring : polys)
        for (Point& v : ring) {
            v.x = std::clamp(v.x, 0.0, static_cast<double>(width));
            v.y = std::clamp(v.y, 0.0, static_cast<double>(height));
        }
}

// Simplifies every ring with one epsilon; false means a ring collapsed.
bool approx_step(Annotation& ann, double eps) {
    if (eps <= 0)
        return true; // drawn but truncated to zero: identity
    PolygonSet out;
    out.reserve(ann.polygons().size());
    for (const Ring& ring : ann.polygons()) {
        auto s = simplify(ring, eps);
        if (!s)
            return false;
        out.push_back(std::move(*s));
    }
    ann.polygons() = std::move(out);
    return true;
}

void loc_step(Annotation& ann, const NoiseConfig& c, const ImageInfo& img, SeededRng& rng,
              ChangeRecord& rec) {
    double sum_dx = 0, sum_dy = 0;
    std::size_t n = 0;
    for (Ring& ring : ann.polygons()) {
        Ring moved = perturb_vertices(ring, c.mu_loc, c.sigma_loc, rng, c.loc_shared_sign);
        for (std::size_t i = 0; i < ring.size(); ++i) {
            sum_dx += std::fabs(moved[i].x - ring[i].x);
            sum_dy += std::fabs(moved[i].y - ring[i].y);
        }
        n += ring.size();
        ring = std::move(moved);
    }
    clamp_rings(ann.polygons(), img.width, img.height);
    rec.has_loc = true;
    rec.loc_mean_abs_dx = n ? sum_dx / static_cast<double>(n) : 0.0;
    rec.loc_mean_abs_dy = n ? sum_dy / static_cast<double>(n) : 0.0;
}

// Rasterize -> morph -> trace contours, over a window covering the polygon
// hull plus the kernel reach, clamped to the image. Out-of-window pixels are
// background in the full image too, so the crop is exact. Returns false when
// the mask empties.
bool morph_polygons(Annotation& ann, char op, int k, const ImageInfo& img, ChangeRecord& rec) {
    auto bb = polygon_bbox(ann.polygons());
    const int margin = k + 1;
    int x0 = std::max(0, static_cast<int>(std::floor(bb[0])) - margin);
    int y0 = std::max(0, static_cast<int>(std::floor(bb[1])) - margin);
    int x1 = std::min(img.width, static_cast<int>(std::ceil(bb[0] + bb[2])) + margin);
    int y1 = std::min(img.height, static_cast<int>(std::ceil(bb[1] + bb[3])) + margin);
    if (x1 <= x0 || y1 <= y0)
        return false;

    PolygonSet local;
    local.reserve(ann.polygons().size());
    for (const Ring& ring : ann.polygons())
        local.push_back(shift(ring, -x0, -y0));
    InstanceMask mask = rasterize(local, y1 - y0, x1 - x0);
    InstanceMask morphed = op == 'e'   ? erode(mask, k)
                           : op == 'd' ? dilate(mask, k)
                                       : opening(mask, k);
    std::uint64_t pixels = morphed.count();
    if (pixels == 0)
        return false;

    PolygonSet contours = extract_contours(morphed);
    if (contours.empty())
        return false;
    // Exterior rings of the traced boundary enclose any interior holes; the
    // shoelace total vs. the pixel count measures what got filled.
    double filled = polygon_area(contours);
    if (filled > static_cast<double>(pixels) * 1.01)
        rec.holes_filled = true;

    PolygonSet back;
    back.reserve(contours.size());
    for (const Ring& ring : contours)
        back.push_back(shift(ring, x0, y0));
    ann.polygons() = std::move(back);
    return true;
}

bool morph_rle(Annotation& ann, char op, int k) {
    InstanceMask mask = rle_decode(ann.rle());
    InstanceMask morphed = op == 'e'   ? erode(mask, k)
                           : op == 'd' ? dilate(mask, k)
                                       : opening(mask, k);
    if (morphed.count() == 0)
        return false;
    ann.rle() = rle_encode(morphed);
    return true;
}

// Scale noise: draw the op coin (when not forced) and K, then apply when
// K > 1. Draw order within the stream is coin first, K second.
bool scale_step(Annotation& ann, const NoiseConfig& c, const ImageInfo& img, SeededRng& rng,
                ChangeRecord& rec, char forced_op) {
    char op = forced_op;
    if (op == 0)
        op = rng.bernoulli(0.5) ? 'e' : 'd';
    long long k = static_cast<long long>(std::floor(rng.normal(c.mu_scale, c.sigma_scale)));
    if (k < 0)
        k = 0;
    rec.scale_op = op;
    rec.has_scale_k = true;
    rec.scale_k = k;
    if (k <= 1)
        return true; // drawn but an identity kernel
    if (ann.is_rle())
        return morph_rle(ann, op, static_cast<int>(k));
    return morph_polygons(ann, op, static_cast<int>(k), img, rec);
}

void finalize(Annotation& ann, const ImageInfo& img) {
    ann.area = segmentation_area(ann, img.height, img.width);
    ann.bbox = segmentation_bbox(ann, img.height, img.width);
}

void composite_one(const Annotation& in, const ImageInfo& img, const NoiseConfig& c,
                   const std::unordered_map<long long, std::vector<long long>>& candidates,
                   PerAnnResult& slot) {
    ChangeRecord& rec = slot.rec;
    rec.annotation_id = in.id;
    const std::uint64_t seed = sub_seed(c.master_seed, static_cast<std::uint64_t>(in.id));
    rec.sub_seed = seed;

    if (c.enable_delete) {
        SeededRng rng(sub_seed(seed, kStreamDelete));
        if (rng.bernoulli(c.p_delete)) {
            rec.deleted = true;
            return;
        }
    }

    Annotation ann = in;
    if (c.enable_class) {
        SeededRng rng(sub_seed(seed, kStreamClass));
        if (rng.bernoulli(c.p_class)) {
            const auto& cands = candidates.at(ann.category_id);
            if (!cands.empty()) {
                long long target = cands[rng.uniform_below(cands.size())];
                rec.class_swapped = true;
                rec.class_from = ann.category_id;
                rec.class_to = target;
                ann.category_id = target;
            }
        }
    }

    if (ann.is_rle())
        rec.rle_domain = true; // polygon-domain noises do not apply

    if (c.enable_approx && !ann.is_rle()) {
        SeededRng rng(sub_seed(seed, kStreamApprox));
        double eps = std::max(0.0, rng.normal(c.mu_approx, c.sigma_approx));
        rec.has_epsilon = true;
        rec.epsilon = eps;
        if (!approx_step(ann, eps)) {
            rec.collapsed = true;
            return;
        }
    }

    if (c.enable_loc && !ann.is_rle()) {
        SeededRng rng(sub_seed(seed, kStreamLoc));
        loc_step(ann, c, img, rng, rec);
    }

    if (c.enable_scale) {
        SeededRng rng(sub_seed(seed, kStreamScale));
        if (!scale_step(ann, c, img, rng, rec, 0)) {
            rec.collapsed = true;
            return;
        }
    }

    finalize(ann, img);
    slot.out = std::move(ann);
}

void single_operator_one(const Annotation& in, const ImageInfo& img, const NoiseConfig& c,
                         PerAnnResult& slot) {
    ChangeRecord& rec = slot.rec;
    rec.annotation_id = in.id;
    const std::uint64_t seed = sub_seed(c.master_seed, static_cast<std::uint64_t>(in.id));
    rec.sub_seed = seed;

    Annotation ann = in;
    if (ann.is_rle())
        rec.rle_domain = true;

    bool alive = true;
    switch (c.mode) {
    case NoiseMode::dilation:
    case NoiseMode::erosion:
    case NoiseMode::opening: {
        SeededRng rng(sub_seed(seed, kStreamScale));
        char op = c.mode == NoiseMode::dilation ? 'd' : c.mode == NoiseMode::erosion ? 'e' : 'o';
        alive = scale_step(ann, c, img, rng, rec, op);
        break;
    }
    case NoiseMode::random_scale: {
        SeededRng rng(sub_seed(seed, kStreamScale));
        alive = scale_step(ann, c, img, rng, rec, 0);
        break;
    }
    case NoiseMode::shifting: {
        if (!ann.is_rle()) {
            SeededRng rng(sub_seed(seed, kStreamShift));
            double dx, dy;
            if (c.loc_shared_sign) {
                double b = rng.rademacher();
                dx = b * std::fabs(rng.normal(c.mu_loc, c.sigma_loc));
                dy = b * std::fabs(rng.normal(c.mu_loc, c.sigma_loc));
            } else {
                double bx = rng.rademacher();
                double mx = std::fabs(rng.normal(c.mu_loc, c.sigma_loc));
                double by = rng.rademacher();
                double my = std::fabs(rng.normal(c.mu_loc, c.sigma_loc));
                dx = bx * mx;
                dy = by * my;
            }
            rec.has_shift = true;
            rec.shift_dx = dx;
            rec.shift_dy = dy;
            PolygonSet moved;
            moved.reserve(ann.polygons().size());
            for (const Ring& ring : ann.polygons())
                moved.push_back(shift(ring, dx, dy));
            ann.polygons() = std::move(moved);
            clamp_rings(ann.polygons(), img.width, img.height);
        }
        break;
    }
    case NoiseMode::localization: {
        if (!ann.is_rle()) {
            SeededRng rng(sub_seed(seed, kStreamLoc));
            loc_step(ann, c, img, rng, rec);
        }
        break;
    }
    case NoiseMode::approximation: {
        if (!ann.is_rle()) {
            SeededRng rng(sub_seed(seed, kStreamApprox));
            double eps = std::max(0.0, rng.normal(c.mu_approx, c.sigma_approx));
            rec.has_epsilon = true;
            rec.epsilon = eps;
            alive = approx_step(ann, eps);
        }
        break;
    }
    case NoiseMode::composite:
        throw ValidationError("apply_single_operator requires a single-operator mode");
    }

    if (!alive) {
        rec.collapsed = true;
        return;
    }
    finalize(ann, img);
    slot.out = std::move(ann);
}

std::pair<Dataset, ChangeLog> run_per_annotation(const Dataset& d, const NoiseConfig& c,
                                                 unsigned workers, bool composite) {
    c.validate();
    auto img_idx = image_index(d);
    auto candidates = composite ? swap_candidates(d)
                                : std::unordered_map<long long, std::vector<long long>>{};

    std::vector<PerAnnResult> slots(d.annotations.size());
    parallel_for(d.annotations.size(), workers, [&](std::size_t i) {
        const Annotation& ann = d.annotations[i];
        const ImageInfo& img = d.images[img_idx.at(ann.image_id)];
        if (composite)
            composite_one(ann, img, c, candidates, slots[i]);
        else
            single_operator_one(ann, img, c, slots[i]);
    });

    Dataset out;
    out.images = d.images;
    out.categories = d.categories;
    out.extra = d.extra;
    ChangeLog log;
    log.reserve(slots.size());
    for (PerAnnResult& slot : slots) {
        if (slot.out)
            out.annotations.push_back(std::move(*slot.out));
        log.push_back(slot.rec);
    }
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::sort(out.annotations.begin(), out.annotations.end(), by_id);
    std::sort(log.begin(), log.end(), [](const ChangeRecord& a, const ChangeRecord& b) {
        return a.annotation_id < b.annotation_id;
    });
    return {std::move(out), std::move(log)};
}

} // namespace

std::pair<Dataset, ChangeLog> apply_noise(const Dataset& d, const NoiseConfig& c,
                                          unsigned workers) {
    if (c.mode != NoiseMode::composite)
        throw ValidationError("apply_noise requires mode == composite");
    return run_per_annotation(d, c, workers, true);
}

std::pair<Dataset, ChangeLog> apply_single_operator(const Dataset& d, const NoiseConfig& c,
                                                    unsigned workers) {
    if (c.mode == NoiseMode::composite)
        throw ValidationError("apply_single_operator requires a single-operator mode");
    return run_per_annotation(d, c, workers, false);
}

std::pair<Dataset, ChangeLog> run_noise(const Dataset& d, const NoiseConfig& c,
                                        unsigned workers) {
    if (c.mode == NoiseMode::composite)
        return apply_noise(d, c, workers);
    return apply_single_operator(d, c, workers);
}

std::string changelog_jsonl(const ChangeLog& log) {
    std::string out;
    for (const ChangeRecord& r : log) {
        ordered_json line = ordered_json::object();
        line["annotation_id"] = r.annotation_id;
        line["sub_seed"] = r.sub_seed;
        line["deleted"] = r.deleted;
        line["collapsed"] = r.collapsed;
        line["rle_domain"] = r.rle_domain;
        line["class_from"] = r.class_swapped ? ordered_json(r.class_from) : ordered_json(nullptr);
        line["class_to"] = r.class_swapped ? ordered_json(r.class_to) : ordered_json(nullptr);
        line["epsilon"] = r.has_epsilon ? ordered_json(r.epsilon) : ordered_json(nullptr);
        line["loc_mean_abs_dx"] =
            r.has_loc ? ordered_json(r.loc_mean_abs_dx) : ordered_json(nullptr);
        line["loc_mean_abs_dy"] =
            r.has_loc ? ordered_json(r.loc_mean_abs_dy) : ordered_json(nullptr);
        line["shift_dx"] = r.has_shift ? ordered_json(r.shift_dx) : ordered_json(nullptr);
        line["shift_dy"] = r.has_shift ? ordered_json(r.shift_dy) : ordered_json(nullptr);
        const char* op = r.scale_op == 'e'   ? "erode"
                         : r.scale_op == 'd' ? "dilate"
                         : r.scale_op == 'o' ? "opening"
                                             : nullptr;
        line["scale_op"] = op ? ordered_json(op) : ordered_json(nullptr);
        line["scale_k"] = r.has_scale_k ? ordered_json(r.scale_k) : ordered_json(nullptr);
        line["holes_filled"] = r.holes_filled;
        out += line.dump();
        out += '\n';
    }
    return out;
}

} // namespace segnoise
