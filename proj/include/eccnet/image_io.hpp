#pragma once

#include <filesystem>

#include "eccnet/attention.hpp"
#include "eccnet/stimuli.hpp"
#include "eccnet/tensor.hpp"

namespace eccnet {

/// Binary 8-bit PGM. Values are clamped to [0, 255] and rounded.
void write_pgm(const std::filesystem::path& path, const Tensorf& image);

/// Like write_pgm, after min-max stretching to [0, 255].
void write_pgm_normalized(const std::filesystem::path& path, const Tensorf& map);

Tensorf read_pgm(const std::filesystem::path& path);

/// Search and target images plus a JSON sidecar of boxes and condition.
void dump_trial(const std::filesystem::path& dir, const std::string& stem, const TrialSpec& trial);

/// Per-layer modulation maps, the fused map, and a JSON sidecar of maxima, minima and weights.
void dump_attention(const std::filesystem::path& dir, const std::string& stem,
                    const std::array<Tensorf, 3>& modulation, const FusionResult& fused);

} // namespace eccnet
