#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eccnet/ops.hpp"
#include "eccnet/tensor.hpp"

namespace eccnet {

inline constexpr double kPxPerDva = 30.0;

/// dva to whole pixels, rounding halves up.
inline Index dva_to_px(double dva) { return static_cast<Index>(std::floor(dva * kPxPerDva + 0.5)); }

/// Axis-aligned rectangle with inclusive edges.
struct Box {
    Index top = 0, left = 0, bottom = 0, right = 0;

    Index height() const { return bottom - top + 1; }
    Index width() const { return right - left + 1; }
    GridPoint centre() const { return {(top + bottom) / 2, (left + right) / 2}; }
    bool contains(GridPoint p) const { return p.row >= top && p.row <= bottom && p.col >= left && p.col <= right; }
    bool overlaps(const Box& o) const {
        return !(o.left > right || o.right < left || o.top > bottom || o.bottom < top);
    }
    bool inside(Index h, Index w) const { return top >= 0 && left >= 0 && bottom < h && right < w; }
    friend bool operator==(const Box&, const Box&) = default;
};

struct ConditionInfo {
    std::string_view key;
    int experiment;
    char label;
    bool hard;
    int bottom_up_scheme;  // blend scheme used when bottom-up saliency is enabled
};

/// Hard condition first, then easy, per experiment.
inline constexpr std::array<ConditionInfo, 12> kConditions{{
    {"line_among_curves", 1, 'a', true, 1},
    {"curve_among_lines", 1, 'b', false, 1},
    {"left_right", 2, 'a', true, 3},
    {"top_down", 2, 'b', false, 3},
    {"cross_among_noncross", 3, 'a', true, 1},
    {"noncross_among_cross", 3, 'b', false, 1},
    {"L_among_T", 4, 'c', true, 2},
    {"T_among_L", 4, 'd', false, 2},
    {"vertical_among_20", 5, 'a', true, 3},
    {"20_among_vertical", 5, 'b', false, 3},
    {"hetero_T20", 6, 'c', true, 2},
    {"hetero_Tvert", 6, 'd', false, 3},
}};

/// Accepts a condition key ("T_among_L") or its letter ("d").
const ConditionInfo& find_condition(int experiment, std::string_view name);
std::array<const ConditionInfo*, 2> experiment_conditions(int experiment);

struct ExperimentPlan {
    int experiment = 0;
    double image_dva = 0.0;
    Index image_px = 0;
    int grid = 0;
    Index item_px = 0;
    std::vector<int> set_sizes;
    int trials_per_condition = 0;
};

ExperimentPlan plan_for(int experiment);

/// Equal split of `total` trials over the set sizes; any remainder goes to the first sizes.
std::vector<int> allocate_trials(int total, std::span<const int> set_sizes);

struct TrialSpec {
    int experiment = 0;
    std::string condition;
    int set_size = 0;
    std::uint64_t seed = 0;
    Tensorf search_image;
    Tensorf target_image;
    Box target_box;
    std::vector<Box> item_boxes;
    std::vector<double> item_angles;  // clockwise from canonical, degrees; 0 for unrotated items
    std::size_t target_index = 0;
};

TrialSpec gen_curvature(std::string_view condition, int set_size, std::uint64_t seed);
TrialSpec gen_lighting(std::string_view condition, int set_size, std::uint64_t seed);
TrialSpec gen_intersections(std::string_view condition, int set_size, std::uint64_t seed);
TrialSpec gen_orientation(std::string_view condition, int set_size, std::uint64_t seed);

/// Dispatches to the generator of `experiment`.
TrialSpec generate_trial(int experiment, std::string_view condition, int set_size, std::uint64_t seed);

/// Per-trial seed derived from the master seed and the trial's identity.
std::uint64_t trial_seed(std::uint64_t master, int experiment, std::string_view condition, int index);

// Canonical (unrotated, item_px square) renderings, exposed for inspection and tests.
enum class Glyph { Cross, NonCross, L, T };
Tensorf render_glyph(Glyph glyph, Index square, Index stroke);
Tensorf render_bar(Index square, double length, double thickness, double angle_deg);
Tensorf render_arc(Index square, double radius, double chord, double stroke, double angle_deg);
Tensorf render_ramp_disc(Index diameter, bool bright_top, bool rotate_cw, float background);

/// Tight crop around pixels differing from `background`.
Tensorf crop_to_content(const Tensorf& image, float background);

/// Number of separate foreground runs along the border of a single-channel square.
int border_runs(const Tensorf& image, float background);

} // namespace eccnet
