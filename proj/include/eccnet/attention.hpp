#pragma once

#include <array>
#include <utility>
#include <vector>

#include "eccnet/backbone.hpp"
#include "eccnet/tensor.hpp"

namespace eccnet {

/// Fused attention map at layer-17 resolution for fixation index n.
struct AttentionMap {
    Tensorf values;
    int fixation_index = 0;
};

/// Weights for the layer 9, 13 and 17 modulation maps, in that order.
struct FusionWeights {
    std::array<double, 3> w{0.0, 0.0, 0.0};
    double sum() const { return w[0] + w[1] + w[2]; }
};

struct FusionResult {
    AttentionMap map;
    FusionWeights weights;
    std::array<double, 3> maxima{};
    std::array<double, 3> minima{};
};

/// Correlates the whole target map (C x th x tw) over the search map (C x H x W)
/// with zero "same" padding; single-channel H x W output, no rectification.
Tensorf modulation_map(const Tensorf& target_map, const Tensorf& search_map);

/// w_l = max_l / sum(max). Falls back to equal weights when every maximum is zero.
FusionWeights fusion_weights(const std::array<double, 3>& maxima);

/// (v - lo) / (hi - lo), or 0 for a degenerate range.
inline double normalized_value(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

/// Maps for layers 9, 13, 17. Lower layers are min-max normalised, then
/// nearest-neighbour resized to the layer-17 map's dims.
FusionResult fuse(const std::array<Tensorf, 3>& maps, int fixation_index = 0);

/// p_j = F(y_j) / sum_i F(y_i) for every unit of a single-channel plane, with F
/// the count of the unit's histogram bin. Empty for a constant plane.
std::vector<double> unit_probabilities(const Tensorf& channel_plane, int bins = 256);

/// Self-information of one channel: 256-bin (by default) histogram over the
/// channel's range, p_j = F(y_j) / sum_i F(y_i), -log p scaled by the range of -log p.
/// A constant channel gives zeros.
Tensorf channel_self_information(const Tensorf& channel_plane, int bins = 256);

/// Sum of channel self-information over layers 9, 13 and 17 at layer-17 dims.
Tensorf saliency_map(const FeatureStack& stack, int bins = 256);

struct BlendScheme {
    int id = 1;

    /// (w_S, w_A) for fixation index n.
    std::pair<double, double> weights(int n) const;
};

/// O_n = w_S * S + w_A * A. Both inputs are expected in [0, 1].
AttentionMap blend(const AttentionMap& topdown, const Tensorf& saliency, BlendScheme scheme, int n);

} // namespace eccnet
