#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "segnoise/coco_io.hpp"

namespace segnoise {

enum class NoiseMode {
    composite,
    dilation,
    erosion,
    opening,
    random_scale,
    shifting,
    localization,
    approximation,
};

const char* noise_mode_name(NoiseMode m);
NoiseMode noise_mode_from_name(const std::string& name); // throws ValidationError

struct NoiseConfig {
    double mu_approx = 0, sigma_approx = 0;
    double mu_loc = 0, sigma_loc = 0;
    double mu_scale = 0, sigma_scale = 0;
    double p_class = 0;
    double p_delete = 0;
    std::uint64_t master_seed = 0;
    NoiseMode mode = NoiseMode::composite;
    bool enable_delete = true;
    bool enable_class = true;
    bool enable_approx = true;
    bool enable_loc = true;
    bool enable_scale = true;
    // Localization sign mode: independent Rademacher per coordinate by
    // default; true reuses one sign draw for both coordinates of a vertex.
    bool loc_shared_sign = false;

    void validate() const; // sigmas >= 0, probabilities in [0, 1]
};

// Severity presets: the nine spatial parameters per tier plus the two
// probabilities, identical across tiers.
NoiseConfig preset(const std::string& tier); // "low" | "medium" | "high"

// Applies config JSON on top of `base`. Accepts either `preset` or explicit
// keys (`mode`, `seed`, `approx{mu,sigma}`, `loc{mu,sigma}`,
// `scale{mu,sigma}`, `p_class`, `p_delete`, `enabled[...]`), plus the
// optional `loc_shared_sign`. Unknown keys are rejected.
NoiseConfig parse_noise_config(const ordered_json& doc, NoiseConfig base = {});

// Per-annotation audit record. Value fields are only meaningful when their
// `has_` flag (or the op char) says the draw happened.
struct ChangeRecord {
    long long annotation_id = 0;
    std::uint64_t sub_seed = 0; // root of this annotation's draw streams
    bool deleted = false;
    bool collapsed = false;   // simplification or morphology emptied it
    bool rle_domain = false;  // polygon-domain noises skipped (RLE mask)
    bool class_swapped = false;
    long long class_from = 0, class_to = 0;
    bool has_epsilon = false;
    double epsilon = 0;
    bool has_loc = false;
    double loc_mean_abs_dx = 0, loc_mean_abs_dy = 0;
    bool has_shift = false;
    double shift_dx = 0, shift_dy = 0;
    char scale_op = 0; // 'e' erode, 'd' dilate, 'o' opening, 0 none
    bool has_scale_k = false;
    long long scale_k = 0;
    bool holes_filled = false; // contour extraction filled holes (>1% area)
};
using ChangeLog = std::vector<ChangeRecord>;

// Composite five-type pipeline in fixed order: deletion, class confusion,
// approximation, localization, scale. Requires mode == composite.
std::pair<Dataset, ChangeLog> apply_noise(const Dataset& d, const NoiseConfig& c,
                                          unsigned workers = 1);

// Exactly one operator applied to every annotation. Requires a
// single-operator mode.
std::pair<Dataset, ChangeLog> apply_single_operator(const Dataset& d, const NoiseConfig& c,
                                                    unsigned workers = 1);

// Dispatches on c.mode.
std::pair<Dataset, ChangeLog> run_noise(const Dataset& d, const NoiseConfig& c,
                                        unsigned workers = 1);

// One JSON line per input annotation, ascending annotation id.
std::string changelog_jsonl(const ChangeLog& log);

// Tags naming each per-annotation draw stream; streams are independent, so
// enabling or disabling one noise type never shifts another type's draws.
enum : std::uint64_t {
    kStreamDelete = 0,
    kStreamClass = 1,
    kStreamApprox = 2,
    kStreamLoc = 3,
    kStreamScale = 4,
    kStreamShift = 5,
    kStreamRandomPoint = 6,
    kStreamNoisyBox = 7,
};

} // namespace segnoise
