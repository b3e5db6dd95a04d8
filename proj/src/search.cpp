#include "eccnet/search.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace eccnet {

GridPoint attention_dims(Index image_h, Index image_w) {
    for (int i = 0; i < 4; ++i) {
        image_h = ceil_half(image_h);
        image_w = ceil_half(image_w);
    }
    return {image_h, image_w};
}

GridPoint winner_take_all(const Tensorf& map, const Mask& ior) {
    if (map.channels() != 1 || ior.rows() != map.height() || ior.cols() != map.width())
        throw ShapeError("winner_take_all: map " + map.dims() + " vs mask " + std::to_string(ior.rows()) + "x" +
                         std::to_string(ior.cols()));
    const auto values = map.plane(0);
    GridPoint best{-1, -1};
    float best_value = -std::numeric_limits<float>::infinity();
    for (Index y = 0; y < map.height(); ++y) {
        for (Index x = 0; x < map.width(); ++x) {
            if (ior(y, x))
                continue;
            const float v = values(y, x);
            if (best.row < 0 || v > best_value) {
                best = {y, x};
                best_value = v;
            }
        }
    }
    if (best.row < 0)
        throw InputError("winner_take_all: every cell is inhibited");
    return best;
}

GridPoint to_image_coords(GridPoint cell, GridPoint map_dims, GridPoint image_dims) {
    if (cell.row < 0 || cell.col < 0 || cell.row >= map_dims.row || cell.col >= map_dims.col)
        throw InputError("to_image_coords: cell outside map");
    return {std::min(cell.row * kAttentionCell + kAttentionCell / 2, image_dims.row - 1),
            std::min(cell.col * kAttentionCell + kAttentionCell / 2, image_dims.col - 1)};
}

GridPoint to_cell(GridPoint pixel, GridPoint map_dims, GridPoint) {
    return {std::clamp<Index>(pixel.row / kAttentionCell, 0, map_dims.row - 1),
            std::clamp<Index>(pixel.col / kAttentionCell, 0, map_dims.col - 1)};
}

std::string_view searcher_name(Searcher s) {
    switch (s) {
    case Searcher::EccNet:
        return "eccnet";
    case Searcher::Chance:
        return "chance";
    case Searcher::PixelMatch:
        return "pixelmatch";
    }
    return "?";
}

Searcher parse_searcher(std::string_view name) {
    if (name == "eccnet")
        return Searcher::EccNet;
    if (name == "chance")
        return Searcher::Chance;
    if (name == "pixelmatch" || name == "pixel_match")
        return Searcher::PixelMatch;
    throw InputError("unknown searcher " + std::string(name));
}

void FixationState::fixate(GridPoint pixel, GridPoint cell) {
    history.push_back(pixel);
    ior(cell.row, cell.col) = true;
    n = static_cast<int>(history.size());
}

Tensorf pixel_match_map(const Tensorf& search_image, const Tensorf& target_image) {
    if (search_image.channels() != 1 || target_image.channels() != 1)
        throw ShapeError("pixel_match_map: expected single-channel images");
    const Index h = search_image.height(), w = search_image.width();
    const Index th = target_image.height(), tw = target_image.width();
    const Index pad_top = (th - 1) / 2, pad_left = (tw - 1) / 2;

    Eigen::MatrixXf corr = Eigen::MatrixXf::Zero(h, w);
    const auto src = search_image.plane(0);
    for (Index dy = 0; dy < th; ++dy) {
        for (Index dx = 0; dx < tw; ++dx) {
            const float t = target_image(0, dy, dx);
            if (t == 0.0f)
                continue;
            const Index y0 = std::max<Index>(0, pad_top - dy), y1 = std::min<Index>(h, h + pad_top - dy);
            const Index x0 = std::max<Index>(0, pad_left - dx), x1 = std::min<Index>(w, w + pad_left - dx);
            if (y0 >= y1 || x0 >= x1)
                continue;
            corr.block(y0, x0, y1 - y0, x1 - x0) +=
                t * src.block(y0 + dy - pad_top, x0 + dx - pad_left, y1 - y0, x1 - x0);
        }
    }

    const GridPoint dims = attention_dims(h, w);
    Tensorf out(1, dims.row, dims.col);
    for (Index r = 0; r < dims.row; ++r) {
        for (Index c = 0; c < dims.col; ++c) {
            const Index y0 = r * kAttentionCell, x0 = c * kAttentionCell;
            const Index ny = std::min(kAttentionCell, h - y0), nx = std::min(kAttentionCell, w - x0);
            out(0, r, c) = corr.block(y0, x0, ny, nx).maxCoeff();
        }
    }
    return out;
}

TopDownAttention::TopDownAttention(const Backbone& backbone, const Tensorf& search_image,
                                   const Tensorf& target_image, const SearchOptions& options)
    : backbone_(backbone), options_(options) {
    const GridPoint target_centre{target_image.height() / 2, target_image.width() / 2};
    const FeatureStack target = backbone.extract(target_image, target_centre, PoolMode::Uniform);
    target_maps_ = {target.at(10), target.at(14), target.at(18)};
    search_input_ = backbone.preprocess(search_image);
    const GridPoint centre{search_image.height() / 2, search_image.width() / 2};
    if (options_.pool_mode == PoolMode::Uniform || backbone.layer9_fixation_invariant())
        layer9_ = backbone.forward_to_layer9(search_input_, centre, options_.pool_mode);
}

FusionResult TopDownAttention::compute(GridPoint fixation, int n) {
    const bool uniform = options_.pool_mode == PoolMode::Uniform;
    const auto saliency_weights =
        options_.saliency_scheme ? BlendScheme{*options_.saliency_scheme}.weights(n) : std::pair{0.0, 1.0};

    FusionResult result;
    std::optional<FeatureStack> stack;
    auto features = [&]() -> const FeatureStack& {
        if (!stack) {
            const Tensorf l9 = layer9_ ? *layer9_ : backbone_.forward_to_layer9(search_input_, fixation, options_.pool_mode);
            stack = backbone_.forward_from_layer9(l9, fixation, options_.pool_mode);
        }
        return *stack;
    };

    if (uniform && static_result_) {
        result = *static_result_;
    } else if (options_.single_layer_topdown) {
        maps_[2] = modulation_map(target_maps_[2], features().at(17));
        maps_[0] = maps_[1] = Tensorf();
        result.maxima = {0.0, 0.0, maps_[2].data().maxCoeff()};
        result.minima = {0.0, 0.0, maps_[2].data().minCoeff()};
        result.weights.w = {0.0, 0.0, 1.0};
        result.map.values = minmax_normalize(maps_[2]);
    } else {
        if (a9_) {
            maps_[0] = *a9_;
        } else {
            maps_[0] = modulation_map(target_maps_[0], features().at(9));
            if (layer9_)
                a9_ = maps_[0];
        }
        maps_[1] = modulation_map(target_maps_[1], features().at(13));
        maps_[2] = modulation_map(target_maps_[2], features().at(17));
        result = fuse(maps_);
    }
    if (uniform && !static_result_)
        static_result_ = result;
    result.map.fixation_index = n;

    if (saliency_weights.first > 0.0) {
        const Tensorf saliency = minmax_normalize(saliency_map(features()));
        result.map = blend(result.map, saliency, BlendScheme{*options_.saliency_scheme}, n);
    }
    return result;
}

TrialResult run_trial(const Backbone* backbone, const TrialSpec& trial, const SearchOptions& options) {
    const Tensorf& image = trial.search_image;
    const GridPoint image_dims{image.height(), image.width()};
    const GridPoint map_dims = attention_dims(image.height(), image.width());
    const int cells = static_cast<int>(map_dims.row * map_dims.col);
    const int cap = std::min(cells, options.max_fixations.value_or(std::min(cells, kFixationCap)));
    if (cap < 1)
        throw InputError("run_trial: max_fixations must be positive");
    if (!trial.target_box.inside(image.height(), image.width()))
        throw InputError("run_trial: target box outside the image");

    FixationState state;
    state.ior = Mask::Constant(map_dims.row, map_dims.col, false);
    TrialResult result;
    auto finish = [&](bool found) {
        result.found = found;
        result.capped = !found;
        result.n_fixations = state.n;
        result.rt_ms = found ? rt_ms(state.n) : 0.0;
        result.scanpath = state.history;
        return result;
    };
    auto step = [&](GridPoint pixel, GridPoint cell) {
        state.fixate(pixel, cell);
        return oracle_check(pixel, trial.target_box);
    };

    switch (options.searcher) {
    case Searcher::Chance: {
        std::mt19937_64 rng(trial.seed ^ 0x5bd1e995c0ffee11ull);
        if (options.chance_mode == ChanceMode::Items) {
            std::vector<std::size_t> order(trial.item_boxes.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t i : order) {
                if (state.n >= cap)
                    break;
                const GridPoint pixel = trial.item_boxes[i].centre();
                const GridPoint cell = to_cell(pixel, map_dims, image_dims);
                if (state.ior(cell.row, cell.col))
                    continue;
                if (step(pixel, cell))
                    return finish(true);
            }
            return finish(false);
        }
        std::vector<Index> free(static_cast<std::size_t>(cells));
        std::iota(free.begin(), free.end(), Index{0});
        std::shuffle(free.begin(), free.end(), rng);
        for (Index k : free) {
            if (state.n >= cap)
                break;
            const GridPoint cell{k / map_dims.col, k % map_dims.col};
            if (step(to_image_coords(cell, map_dims, image_dims), cell))
                return finish(true);
        }
        return finish(false);
    }
    case Searcher::PixelMatch: {
        const Tensorf map = pixel_match_map(image, trial.target_image);
        while (state.n < cap) {
            const GridPoint cell = winner_take_all(map, state.ior);
            if (step(to_image_coords(cell, map_dims, image_dims), cell))
                return finish(true);
        }
        return finish(false);
    }
    case Searcher::EccNet: {
        if (!backbone)
            throw InputError("run_trial: the eccnet searcher needs loaded weights");
        TopDownAttention attention(*backbone, image, trial.target_image, options);
        GridPoint fixation{image.height() / 2, image.width() / 2};
        while (state.n < cap) {
            const FusionResult fused = attention.compute(fixation, state.n + 1);
            if (fused.map.values.height() != map_dims.row || fused.map.values.width() != map_dims.col)
                throw ShapeError("run_trial: attention map " + fused.map.values.dims() + " does not match grid");
            const GridPoint cell = winner_take_all(fused.map.values, state.ior);
            fixation = to_image_coords(cell, map_dims, image_dims);
            if (step(fixation, cell))
                return finish(true);
        }
        return finish(false);
    }
    }
    return finish(false);
}

} // namespace eccnet
