#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "eccnet/attention.hpp"
#include "eccnet/backbone.hpp"
#include "eccnet/stimuli.hpp"

namespace eccnet {

inline constexpr double kRtSlopeMs = 252.36;
inline constexpr double kRtInterceptMs = 376.27;
inline constexpr Index kAttentionCell = 16;
inline constexpr int kFixationCap = 500;

inline double rt_ms(int n_fixations) { return kRtSlopeMs * n_fixations + kRtInterceptMs; }

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Attention-map dims for an image: four ceil-halvings, i.e. the layer-17 grid.
GridPoint attention_dims(Index image_h, Index image_w);

/// Argmax over unmasked cells; ties go to the smallest row, then column.
GridPoint winner_take_all(const Tensorf& map, const Mask& ior);

/// Centre of the cell's image patch, clamped into the image.
GridPoint to_image_coords(GridPoint cell, GridPoint map_dims, GridPoint image_dims);
GridPoint to_cell(GridPoint pixel, GridPoint map_dims, GridPoint image_dims);

inline bool oracle_check(GridPoint fixation, const Box& target_box) { return target_box.contains(fixation); }

enum class Searcher { EccNet, Chance, PixelMatch };
enum class ChanceMode { Items, Cells };

std::string_view searcher_name(Searcher s);
Searcher parse_searcher(std::string_view name);

struct SearchOptions {
    Searcher searcher = Searcher::EccNet;
    PoolMode pool_mode = PoolMode::Eccentric;
    bool single_layer_topdown = false;
    std::optional<int> saliency_scheme;  // blend bottom-up saliency with this scheme
    std::optional<int> max_fixations;    // default: min(attention cells, 500)
    ChanceMode chance_mode = ChanceMode::Items;
};

struct FixationState {
    std::vector<GridPoint> history;
    Mask ior;
    int n = 0;

    void fixate(GridPoint pixel, GridPoint cell);
};

struct TrialResult {
    bool found = false;
    bool capped = false;
    int n_fixations = 0;
    double rt_ms = 0.0;  // only meaningful when found
    std::vector<GridPoint> scanpath;
};

/// Correlation of raw target pixels over the search image ("same" padding),
/// reduced to the attention grid by the maximum over each cell's patch.
Tensorf pixel_match_map(const Tensorf& search_image, const Tensorf& target_image);

/// Per-fixation attention map of the eccNET searcher, with reusable state.
class TopDownAttention {
public:
    TopDownAttention(const Backbone& backbone, const Tensorf& search_image, const Tensorf& target_image,
                     const SearchOptions& options);

    /// Map used to pick fixation n+1 while fixating `fixation` (image pixels).
    FusionResult compute(GridPoint fixation, int n);

    const std::array<Tensorf, 3>& last_modulation_maps() const { return maps_; }

private:
    const Backbone& backbone_;
    SearchOptions options_;
    Tensorf search_input_;
    std::array<Tensorf, 3> target_maps_;  // layers 10, 14, 18
    std::optional<Tensorf> layer9_;
    std::optional<Tensorf> a9_;
    std::optional<FusionResult> static_result_;
    std::array<Tensorf, 3> maps_;
};

/// One target-present trial. `backbone` may be null for the chance and
/// pixel-match searchers.
TrialResult run_trial(const Backbone* backbone, const TrialSpec& trial, const SearchOptions& options);

} // namespace eccnet
