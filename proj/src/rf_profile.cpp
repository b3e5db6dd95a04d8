#include "eccnet/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace eccnet {

std::vector<RfSample> estimate_rf_profile(const BackboneConfig& config, int layer_id, Index image_size) {
    if (pool_index(layer_id) < 0)
        throw InputError("estimate_rf_profile: layer " + std::to_string(layer_id) + " is not a pooling layer");
    const EccPoolConfig cfg = config.pool_config(layer_id);
    const Index grid = image_size / pool_input_stride(layer_id);
    if (grid < 8)
        throw InputError("estimate_rf_profile: image too small for layer " + std::to_string(layer_id));

    // Units on the fixation row only need a horizontal strip tall enough to hold
    // their windows; distances are measured on the output grid either way.
    const Index fix_col = 2 * (grid / 4);
    const Index out_cols = ceil_half(grid);
    int max_r = cfg.foveal_rf;
    for (Index j = 0; j < out_cols; ++j)
        max_r = std::max(max_r, ecc_rf_size(cfg, std::abs(static_cast<double>(j - fix_col / 2))));
    const Index strip = std::min<Index>(grid, 2 * ((max_r + 3) / 2) + 4);
    const GridPoint fixation{2 * (strip / 4), fix_col};
    const Index unit_row = fixation.row / 2;

    const Tensorf black(1, strip, grid);
    const Tensorf white = Tensorf::Constant(1, strip, grid, 1.0f);
    const Tensorf black_out = ecc_avg_pool(black, cfg, fixation);
    const Tensorf white_out = ecc_avg_pool(white, cfg, fixation);

    std::vector<Index> first(static_cast<std::size_t>(out_cols), -1);
    std::vector<Index> last(static_cast<std::size_t>(out_cols), -1);
    Tensorf probe(1, strip, grid);
    for (Index c = 0; c < grid; ++c) {
        probe(0, fixation.row, c) = 1.0f;
        const Tensorf response = ecc_avg_pool(probe, cfg, fixation);
        probe(0, fixation.row, c) = 0.0f;
        for (Index j = 0; j < out_cols; ++j) {
            if (!(white_out(0, unit_row, j) > black_out(0, unit_row, j)))
                continue;
            if (response(0, unit_row, j) > black_out(0, unit_row, j)) {
                auto idx = static_cast<std::size_t>(j);
                if (first[idx] < 0)
                    first[idx] = c;
                last[idx] = c;
            }
        }
    }

    const double px_per_dva_in = 2.0 * cfg.eta;
    std::vector<RfSample> samples;
    for (Index j = fixation.col / 2; j < out_cols; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        if (first[idx] < 0)
            continue;
        const double distance = static_cast<double>(j - fixation.col / 2);
        const int predicted = ecc_rf_size(cfg, distance);
        const Index lead = (predicted - 1) / 2;
        const Index x0 = 2 * j - lead;
        if (x0 < 0 || x0 + predicted > grid || 2 * unit_row - lead + predicted > strip)
            continue;  // clipped window
        RfSample s;
        s.distance = distance;
        s.rf_px = static_cast<int>(last[idx] - first[idx] + 1);
        s.predicted_px = predicted;
        const double centre = 0.5 * static_cast<double>(first[idx] + last[idx]);
        s.eccentricity_dva = std::abs(centre - static_cast<double>(fixation.col)) / px_per_dva_in;
        s.rf_dva = s.rf_px / px_per_dva_in;
        samples.push_back(s);
    }
    return samples;
}

} // namespace eccnet
