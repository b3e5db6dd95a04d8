#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <string>

#include "eccnet/backbone.hpp"

namespace testing {

inline std::array<int, 13> narrow_widths() {
    return {4, 4, 6, 6, 8, 8, 8, 8, 8, 8, 8, 8, 8};
}

inline eccnet::Backbone narrow_backbone(std::uint64_t seed = 7, eccnet::Preprocessing pre = {}) {
    const auto w = narrow_widths();
    return eccnet::Backbone::from_layers(eccnet::random_vgg16_layers(w, seed), pre);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("eccnet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing
