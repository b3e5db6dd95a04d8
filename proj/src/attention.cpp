#include "eccnet/attention.hpp"

#include <cmath>
#include <vector>

namespace eccnet {

Tensorf modulation_map(const Tensorf& target_map, const Tensorf& search_map) {
    if (target_map.channels() != search_map.channels())
        throw ShapeError("modulation_map: target " + target_map.dims() + " and search " + search_map.dims() +
                         " differ in channel count");
    if (target_map.empty() || search_map.empty())
        throw ShapeError("modulation_map: empty map");

    const Index th = target_map.height(), tw = target_map.width();
    const Index h = search_map.height(), w = search_map.width();
    const Index pad_top = (th - 1) / 2, pad_left = (tw - 1) / 2;
    const Index taps = th * tw;

    // per-tap channel dot products, then shift-and-add
    using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    constexpr Index kBudget = Index{1} << 24;
    const Index chunk = std::clamp<Index>(kBudget / std::max<Index>(1, h * w), 1, taps);
    const auto tmat = target_map.matrix();
    const auto smat = search_map.matrix();

    Tensorf out(1, h, w);
    auto dst = out.plane(0);
    RowMat products(chunk, h * w);
    for (Index k0 = 0; k0 < taps; k0 += chunk) {
        const Index n = std::min(chunk, taps - k0);
        products.topRows(n).noalias() = tmat.middleCols(k0, n).transpose() * smat;
        for (Index i = 0; i < n; ++i) {
            const Index dy = (k0 + i) / tw, dx = (k0 + i) % tw;
            const Index y0 = std::max<Index>(0, pad_top - dy), y1 = std::min<Index>(h, h + pad_top - dy);
            const Index x0 = std::max<Index>(0, pad_left - dx), x1 = std::min<Index>(w, w + pad_left - dx);
            if (y0 >= y1 || x0 >= x1)
                continue;
            Eigen::Map<const RowMat> src(products.row(i).data(), h, w);
            dst.block(y0, x0, y1 - y0, x1 - x0) +=
                src.block(y0 + dy - pad_top, x0 + dx - pad_left, y1 - y0, x1 - x0);
        }
    }
    return out;
}

FusionWeights fusion_weights(const std::array<double, 3>& maxima) {
    FusionWeights fw;
    const double total = maxima[0] + maxima[1] + maxima[2];
    if (total == 0.0) {
        fw.w = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        return fw;
    }
    for (std::size_t i = 0; i < 3; ++i)
        fw.w[i] = maxima[i] / total;
    return fw;
}

FusionResult fuse(const std::array<Tensorf, 3>& maps, int fixation_index) {
    const Tensorf& top = maps[2];
    if (top.empty())
        throw ShapeError("fuse: empty layer-17 map");
    FusionResult result;
    for (std::size_t i = 0; i < 3; ++i) {
        if (maps[i].channels() != 1 || maps[i].empty())
            throw ShapeError("fuse: expected single-channel maps, got " + maps[i].dims());
        result.maxima[i] = maps[i].data().maxCoeff();
        result.minima[i] = maps[i].data().minCoeff();
    }
    result.weights = fusion_weights(result.maxima);

    Tensorf fused(1, top.height(), top.width());
    for (std::size_t i = 0; i < 3; ++i) {
        const Tensorf normed = resize_nn(minmax_normalize(maps[i]), top.height(), top.width());
        fused.data() += static_cast<float>(result.weights.w[i]) * normed.data();
    }
    result.map = {std::move(fused), fixation_index};
    return result;
}

std::vector<double> unit_probabilities(const Tensorf& plane, int bins) {
    if (bins < 2)
        throw InputError("unit_probabilities: need at least 2 bins");
    if (plane.empty())
        return {};
    const double lo = plane.data().minCoeff();
    const double hi = plane.data().maxCoeff();
    if (!(hi > lo))
        return {};

    const Index n = plane.size();
    std::vector<Index> bin_of(static_cast<std::size_t>(n));
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (Index i = 0; i < n; ++i) {
        const double t = (static_cast<double>(plane.data()[i]) - lo) / (hi - lo);
        const Index b = std::min<Index>(bins - 1, static_cast<Index>(t * bins));
        bin_of[static_cast<std::size_t>(i)] = b;
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    double total = 0.0;
    for (double c : counts)
        total += c * c;  // sum over units of their bin's count

    std::vector<double> p(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        p[static_cast<std::size_t>(i)] = counts[static_cast<std::size_t>(bin_of[static_cast<std::size_t>(i)])] / total;
    return p;
}

Tensorf channel_self_information(const Tensorf& plane, int bins) {
    Tensorf out(1, plane.height(), plane.width());
    const std::vector<double> p = unit_probabilities(plane, bins);
    if (p.empty())
        return out;
    std::vector<double> info(p.size());
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < p.size(); ++i) {
        info[i] = -std::log(p[i]);
        lo = std::min(lo, info[i]);
        hi = std::max(hi, info[i]);
    }
    if (!(hi > lo))
        return out;
    for (std::size_t i = 0; i < info.size(); ++i)
        out.data()[static_cast<Index>(i)] = static_cast<float>(info[i] / (hi - lo));
    return out;
}

Tensorf saliency_map(const FeatureStack& stack, int bins) {
    const Tensorf& l17 = stack.at(17);
    Tensorf total(1, l17.height(), l17.width());
    for (int layer : kTapLayers) {
        const Tensorf& maps = stack.at(layer);
        Tensorf layer_sum(1, maps.height(), maps.width());
        for (Index c = 0; c < maps.channels(); ++c)
            layer_sum.data() += channel_self_information(Tensorf::FromPlane(maps.plane(c)), bins).data();
        total.data() += resize_nn(layer_sum, l17.height(), l17.width()).data();
    }
    return total;
}

std::pair<double, double> BlendScheme::weights(int n) const {
    if (id < 1 || id > 3)
        throw InputError("blend scheme must be 1, 2 or 3, got " + std::to_string(id));
    if (n > 2 || id == 1)
        return {0.0, 1.0};
    if (id == 2)
        return n == 1 ? std::pair{0.5, 0.5} : std::pair{0.37, 0.63};
    return n == 1 ? std::pair{1.0, 0.0} : std::pair{0.37, 0.63};
}

AttentionMap blend(const AttentionMap& topdown, const Tensorf& saliency, BlendScheme scheme, int n) {
    if (!topdown.values.same_shape(saliency))
        throw ShapeError("blend: top-down " + topdown.values.dims() + " vs saliency " + saliency.dims());
    const auto [ws, wa] = scheme.weights(n);
    AttentionMap out{Tensorf(1, saliency.height(), saliency.width()), n};
    out.values.data() = static_cast<float>(ws) * saliency.data() + static_cast<float>(wa) * topdown.values.data();
    return out;
}

} // namespace eccnet
