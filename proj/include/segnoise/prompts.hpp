#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>

#include "segnoise/coco_io.hpp"
#include "segnoise/mask.hpp"
#include "segnoise/rng.hpp"

namespace segnoise {

enum class PromptKind { point, box };

// The foreground pixel deepest inside the mask (max Chebyshev distance to
// background, computed by iterated erosion); ties break to the smallest row,
// then the smallest column. Throws ValidationError on an empty mask.
std::pair<int, int> center_point(const InstanceMask& m);

// Uniform draw over foreground pixels. Throws ValidationError on an empty
// mask.
std::pair<int, int> random_point(const InstanceMask& m, SeededRng& rng);

// Tight foreground hull (x1, y1, x2, y2) in the half-open pixel convention.
// Throws ValidationError on an empty mask.
std::array<double, 4> tight_box(const InstanceMask& m);

// Chooses one of the four corners uniformly (order: (x1,y1), (x2,y1),
// (x1,y2), (x2,y2)), adds independent N(0,2) draws to its x and y, re-orders
// so x1<x2 and y1<y2, clamps to the image, and nudges 1px apart if clamping
// made the box degenerate.
std::array<double, 4> noisy_box(const std::array<double, 4>& b, SeededRng& rng, int width,
                                int height);

// JSON-lines prompt stream, one line per annotation in ascending id order:
// {image_id, annotation_id, kind, payload, perturbed, seed}. Clean points
// are center points and clean boxes tight boxes; --noisy switches to uniform
// mask draws and corner-perturbed boxes. Annotations whose masks rasterize
// empty are skipped and counted in *skipped.
std::string prompts_jsonl(const Dataset& d, PromptKind kind, bool noisy,
                          std::uint64_t master_seed, unsigned workers,
                          std::size_t* skipped = nullptr);

} // namespace segnoise
