#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eccnet/ops.hpp"
#include "eccnet/tensor.hpp"

namespace eccnet {

// ---------------------------------------------------------------------------
// VGG16 topology, Keras layer numbering (0 = input).

struct ConvSpec {
    int layer_id;
    std::string_view name;
    int standard_width;
};

inline constexpr std::array<ConvSpec, 13> kVgg16Convs{{
    {1, "block1_conv1", 64},   {2, "block1_conv2", 64},   {4, "block2_conv1", 128},
    {5, "block2_conv2", 128},  {7, "block3_conv1", 256},  {8, "block3_conv2", 256},
    {9, "block3_conv3", 256},  {11, "block4_conv1", 512}, {12, "block4_conv2", 512},
    {13, "block4_conv3", 512}, {15, "block5_conv1", 512}, {16, "block5_conv2", 512},
    {17, "block5_conv3", 512},
}};

inline constexpr std::array<int, 5> kPoolLayers{3, 6, 10, 14, 18};
inline constexpr std::array<int, 3> kTapLayers{9, 13, 17};

/// Index (0..4) of a pooling layer id, or -1.
int pool_index(int layer_id);

/// Cumulative stride of the grid feeding pooling layer `layer_id` (1, 2, 4, 8, 16).
Index pool_input_stride(int layer_id);

enum class PoolMode { Eccentric, Uniform };

struct BackboneConfig {
    double px_per_dva = 30.0;
    double delta = 4.3;
    std::map<int, double> gammas{{3, 0.0}, {6, 0.0}, {10, 0.14}, {14, 0.32}, {18, 0.64}};

    /// eta = px_per_dva / 2^(k+1) for the k-th pooling layer (15, 7.5, 3.75, 1.875, 0.9375).
    double eta(int layer_id) const;
    EccPoolConfig pool_config(int layer_id) const;
};

// ---------------------------------------------------------------------------
// Weight manifest

enum class ChannelOrder { RGB, BGR };

/// Input conversion recorded alongside the weights: (x * scale - mean[c]) / std[c],
/// after arranging channels in `channel_order`.
struct Preprocessing {
    ChannelOrder channel_order = ChannelOrder::BGR;
    std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
    float scale = 1.0f;
    std::array<float, 3> std{1.0f, 1.0f, 1.0f};
};

struct ManifestEntry {
    std::string name;
    std::vector<Index> shape;
    std::string dtype = "f32le";
    std::uint64_t offset = 0;

    std::uint64_t element_count() const;
    std::uint64_t byte_length() const { return element_count() * 4; }
};

struct WeightManifest {
    std::vector<ManifestEntry> entries;
    Preprocessing preprocessing;
    std::string source_note;

    const ManifestEntry* find(std::string_view name) const;
};

WeightManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const WeightManifest& manifest);

struct ConvLayer {
    int layer_id = 0;
    std::string name;
    Kernel4<float> kernel;
    Eigen::VectorXf bias;
};

/// Feature maps keyed by layer id: pre-pool taps 9, 13, 17 and pooled 10, 14, 18.
struct FeatureStack {
    std::map<int, Tensorf> maps;

    const Tensorf& at(int layer_id) const;
    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

// ---------------------------------------------------------------------------

class Backbone {
public:
    /// Builds a backbone from a manifest and its blob; throws LoadError on any
    /// missing entry, shape inconsistency, overlap or truncation.
    static Backbone load(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path);
    static Backbone from_manifest(const WeightManifest& manifest, std::span<const std::byte> blob);
    static Backbone from_layers(std::vector<ConvLayer> layers, Preprocessing preprocessing,
                                BackboneConfig config = {});

    const std::vector<ConvLayer>& layers() const { return layers_; }
    const Preprocessing& preprocessing() const { return preprocessing_; }
    const BackboneConfig& config() const { return config_; }
    void set_config(const BackboneConfig& config) { config_ = config; }
    std::uint64_t parameter_count() const;

    /// Grayscale or RGB image with values in [0, 255] -> 3-channel network input.
    Tensorf preprocess(const Tensorf& image) const;

    /// Full forward pass on a raw image; `fixation` is in image pixels.
    FeatureStack extract(const Tensorf& image, GridPoint fixation, PoolMode mode) const;

    /// Forward pass through layer 9 on an already preprocessed input.
    Tensorf forward_to_layer9(const Tensorf& input, GridPoint fixation, PoolMode mode) const;

    /// Layers 10..18 given the layer-9 activations.
    FeatureStack forward_from_layer9(const Tensorf& layer9, GridPoint fixation, PoolMode mode) const;

    /// True when pools 3 and 6 ignore the fixation, so layer 9 can be reused across fixations.
    bool layer9_fixation_invariant() const;

private:
    Tensorf pool(const Tensorf& input, int layer_id, GridPoint image_fixation, PoolMode mode) const;
    Tensorf conv_block(Tensorf x, std::size_t first, std::size_t last) const;

    std::vector<ConvLayer> layers_;
    Preprocessing preprocessing_;
    BackboneConfig config_;
};

/// Writes manifest.json + weights.bin (contiguous entries in layer order) into `dir`.
void write_weight_bundle(const std::filesystem::path& dir, const std::vector<ConvLayer>& layers,
                         const Preprocessing& preprocessing, const std::string& source_note);

/// Deterministic He-initialised VGG16-shaped layers with the given 13 widths.
/// Not pretrained; only for exercising the pipeline.
std::vector<ConvLayer> random_vgg16_layers(std::span<const int> widths, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reference activations shipped with an export

struct ReferenceCheck {
    double preprocess_max_abs = 0.0;
    double layer17_max_rel = 0.0;
    bool preprocess_ok = false;
    bool layer17_ok = false;
    bool ok() const { return preprocess_ok && layer17_ok; }
};

struct ReferenceFixture {
    Tensorf image;
    Tensorf preprocessed;
    Tensorf layer17;
};

ReferenceFixture read_reference(const std::filesystem::path& path);
void write_reference(const std::filesystem::path& path, const ReferenceFixture& fixture);

/// Preprocessed tensor within 1e-6 absolute; layer-17 (uniform mode, centre fixation)
/// within 1e-4 of max|reference|.
ReferenceCheck check_reference(const Backbone& backbone, const ReferenceFixture& fixture);

/// FNV-1a 64 over the little-endian float32 serialisation, "fnv1a64:<hex>".
std::string float_digest(std::span<const float> values);

/// float_digest over every kernel and bias, in layer order.
std::string weights_digest(const Backbone& backbone);

// ---------------------------------------------------------------------------
// Receptive-field probe

struct RfSample {
    double eccentricity_dva = 0.0;  // centre of the activating probe span
    double rf_dva = 0.0;
    double distance = 0.0;          // unit-to-fixation distance, output-grid pixels
    int rf_px = 0;                  // measured span, input-grid pixels
    int predicted_px = 0;           // ecc_rf_size at `distance`
};

/// Probes the pooling-only copy of layer `layer_id`: black and white baselines
/// select responsive units, then a white dot is translated outwards from the
/// fixation along its row. Units whose window is clipped by the border are skipped.
std::vector<RfSample> estimate_rf_profile(const BackboneConfig& config, int layer_id, Index image_size = 1200);

inline std::vector<RfSample> estimate_rf_profile(const Backbone& backbone, int layer_id, Index image_size = 1200) {
    return estimate_rf_profile(backbone.config(), layer_id, image_size);
}

} // namespace eccnet
