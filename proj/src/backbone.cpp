#include "eccnet/backbone.hpp"

#include <algorithm>
#include <cmath>

namespace eccnet {

int pool_index(int layer_id) {
    const auto it = std::find(kPoolLayers.begin(), kPoolLayers.end(), layer_id);
    return it == kPoolLayers.end() ? -1 : static_cast<int>(it - kPoolLayers.begin());
}

Index pool_input_stride(int layer_id) {
    const int k = pool_index(layer_id);
    if (k < 0)
        throw InputError("layer " + std::to_string(layer_id) + " is not a pooling layer");
    return Index{1} << k;
}

double BackboneConfig::eta(int layer_id) const {
    const int k = pool_index(layer_id);
    if (k < 0)
        throw InputError("layer " + std::to_string(layer_id) + " is not a pooling layer");
    return px_per_dva / std::ldexp(1.0, k + 1);
}

EccPoolConfig BackboneConfig::pool_config(int layer_id) const {
    EccPoolConfig cfg;
    cfg.eta = eta(layer_id);
    cfg.delta = delta;
    const auto it = gammas.find(layer_id);
    cfg.gamma = it == gammas.end() ? 0.0 : it->second;
    return cfg;
}

const Tensorf& FeatureStack::at(int layer_id) const {
    const auto it = maps.find(layer_id);
    if (it == maps.end())
        throw InputError("feature stack has no layer " + std::to_string(layer_id));
    return it->second;
}

std::uint64_t Backbone::parameter_count() const {
    std::uint64_t n = 0;
    for (const auto& layer : layers_)
        n += static_cast<std::uint64_t>(layer.kernel.size() + layer.bias.size());
    return n;
}

Tensorf Backbone::preprocess(const Tensorf& image) const {
    if (image.channels() != 1 && image.channels() != 3)
        throw InputError("preprocess: expected 1 or 3 channels, got " + image.dims());
    if (image.empty())
        throw InputError("preprocess: empty image");
    if (!image.all_finite() || image.data().minCoeff() < 0.0f || image.data().maxCoeff() > 255.0f)
        throw InputError("preprocess: pixel values must lie in [0, 255]");

    Tensorf out(3, image.height(), image.width());
    for (Index c = 0; c < 3; ++c) {
        // source images are RGB; reorder when the weights expect BGR
        Index src = image.channels() == 1 ? 0 : c;
        if (image.channels() == 3 && preprocessing_.channel_order == ChannelOrder::BGR)
            src = 2 - c;
        const auto& p = preprocessing_;
        const auto cu = static_cast<std::size_t>(c);
        out.plane(c) = ((image.plane(src).array() * p.scale - p.mean[cu]) / p.std[cu]).matrix();
    }
    return out;
}

Tensorf Backbone::conv_block(Tensorf x, std::size_t first, std::size_t last) const {
    for (std::size_t i = first; i < last; ++i) {
        const auto& layer = layers_[i];
        x = relu(conv2d(x, layer.kernel, layer.bias, Padding::Same));
    }
    return x;
}

Tensorf Backbone::pool(const Tensorf& input, int layer_id, GridPoint image_fixation, PoolMode mode) const {
    if (mode == PoolMode::Uniform)
        return avg_pool_2x2(input);
    const Index stride = pool_input_stride(layer_id);
    GridPoint f{image_fixation.row / stride, image_fixation.col / stride};
    f.row = std::clamp<Index>(f.row, 0, input.height() - 1);
    f.col = std::clamp<Index>(f.col, 0, input.width() - 1);
    return ecc_avg_pool(input, config_.pool_config(layer_id), f);
}

bool Backbone::layer9_fixation_invariant() const {
    return config_.pool_config(3).gamma == 0.0 && config_.pool_config(6).gamma == 0.0;
}

Tensorf Backbone::forward_to_layer9(const Tensorf& input, GridPoint fixation, PoolMode mode) const {
    if (layers_.size() != kVgg16Convs.size())
        throw InputError("backbone has no weights loaded");
    Tensorf x = conv_block(input, 0, 2);
    x = pool(x, 3, fixation, mode);
    x = conv_block(std::move(x), 2, 4);
    x = pool(x, 6, fixation, mode);
    return conv_block(std::move(x), 4, 7);
}

FeatureStack Backbone::forward_from_layer9(const Tensorf& layer9, GridPoint fixation, PoolMode mode) const {
    FeatureStack stack;
    stack.maps[9] = layer9;
    Tensorf x = pool(layer9, 10, fixation, mode);
    stack.maps[10] = x;
    x = conv_block(std::move(x), 7, 10);
    stack.maps[13] = x;
    x = pool(x, 14, fixation, mode);
    stack.maps[14] = x;
    x = conv_block(std::move(x), 10, 13);
    stack.maps[17] = x;
    stack.maps[18] = pool(x, 18, fixation, mode);
    return stack;
}

FeatureStack Backbone::extract(const Tensorf& image, GridPoint fixation, PoolMode mode) const {
    if (fixation.row < 0 || fixation.row >= image.height() || fixation.col < 0 || fixation.col >= image.width())
        throw InputError("extract: fixation outside image " + image.dims());
    const Tensorf input = preprocess(image);
    return forward_from_layer9(forward_to_layer9(input, fixation, mode), fixation, mode);
}

} // namespace eccnet
