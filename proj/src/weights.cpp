#include "eccnet/backbone.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace eccnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string layer_label(const ConvSpec& spec) {
    return std::string(spec.name) + " (layer " + std::to_string(spec.layer_id) + ")";
}

float read_f32le(const std::byte* p) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, p, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap32(bits);
    float v = 0.0f;
    std::memcpy(&v, &bits, 4);
    return v;
}

void append_f32le(std::vector<char>& out, float v) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = __builtin_bswap32(bits);
    char buf[4];
    std::memcpy(buf, &bits, 4);
    out.insert(out.end(), buf, buf + 4);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void validate_chain(const std::vector<ConvLayer>& layers) {
    if (layers.size() != kVgg16Convs.size())
        throw LoadError("expected 13 conv layers, got " + std::to_string(layers.size()));
    Index expected_in = 3;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& k = layers[i].kernel;
        const auto label = layer_label(kVgg16Convs[i]);
        if (k.in_channels() != expected_in)
            throw LoadError(label + ": kernel expects " + std::to_string(k.in_channels()) +
                            " input channels, previous layer produces " + std::to_string(expected_in));
        if (k.kernel_height() != 3 || k.kernel_width() != 3)
            throw LoadError(label + ": expected 3x3 kernels");
        if (layers[i].bias.size() != k.out_channels())
            throw LoadError(label + ": bias length " + std::to_string(layers[i].bias.size()) +
                            " does not match " + std::to_string(k.out_channels()) + " output channels");
        expected_in = k.out_channels();
    }
}

json tensor_json(const Tensorf& t) {
    return json{{"shape", {t.channels(), t.height(), t.width()}},
                {"values", std::vector<float>(t.values().begin(), t.values().end())}};
}

Tensorf tensor_from_json(const json& j, const std::string& what) {
    const auto shape = j.at("shape").get<std::vector<Index>>();
    if (shape.size() != 3)
        throw LoadError(what + ": expected a rank-3 shape");
    Tensorf t(shape[0], shape[1], shape[2]);
    const auto values = j.at("values").get<std::vector<float>>();
    if (static_cast<Index>(values.size()) != t.size())
        throw LoadError(what + ": " + std::to_string(values.size()) + " values for shape " + t.dims());
    std::copy(values.begin(), values.end(), t.data().data());
    return t;
}

} // namespace

std::uint64_t ManifestEntry::element_count() const {
    std::uint64_t n = 1;
    for (Index d : shape)
        n *= static_cast<std::uint64_t>(d);
    return n;
}

const ManifestEntry* WeightManifest::find(std::string_view name) const {
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
    return it == entries.end() ? nullptr : &*it;
}

WeightManifest read_manifest(const fs::path& path) {
    WeightManifest m;
    try {
        const json j = json::parse(read_text(path));
        m.source_note = j.value("source_note", "");
        const auto& pre = j.at("preprocessing");
        const auto order = pre.at("channel_order").get<std::string>();
        if (order != "RGB" && order != "BGR")
            throw LoadError("preprocessing.channel_order must be RGB or BGR, got " + order);
        m.preprocessing.channel_order = order == "RGB" ? ChannelOrder::RGB : ChannelOrder::BGR;
        m.preprocessing.mean = pre.at("per_channel_mean").get<std::array<float, 3>>();
        m.preprocessing.scale = pre.value("scale", 1.0f);
        if (pre.contains("per_channel_std"))
            m.preprocessing.std = pre.at("per_channel_std").get<std::array<float, 3>>();
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.shape = e.at("shape").get<std::vector<Index>>();
            entry.dtype = e.value("dtype", "f32le");
            entry.offset = e.at("offset").get<std::uint64_t>();
            m.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw LoadError("malformed manifest " + path.string() + ": " + e.what());
    }
    return m;
}

void write_manifest(const fs::path& path, const WeightManifest& m) {
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back({{"name", e.name}, {"shape", e.shape}, {"dtype", e.dtype}, {"offset", e.offset}});
    const auto& p = m.preprocessing;
    json j{{"format", "eccnet-vgg16"},
           {"version", 1},
           {"source_note", m.source_note},
           {"preprocessing",
            {{"channel_order", p.channel_order == ChannelOrder::RGB ? "RGB" : "BGR"},
             {"per_channel_mean", p.mean},
             {"scale", p.scale},
             {"per_channel_std", p.std}}},
           {"entries", entries}};
    std::ofstream out(path);
    if (!out)
        throw LoadError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Backbone Backbone::from_manifest(const WeightManifest& manifest, std::span<const std::byte> blob) {
    // extents and overlaps across every entry, known or not
    std::vector<const ManifestEntry*> sorted;
    for (const auto& e : manifest.entries) {
        if (e.dtype != "f32le")
            throw LoadError("entry " + e.name + ": unsupported dtype " + e.dtype);
        if (e.offset + e.byte_length() > blob.size())
            throw LoadError("blob truncated: entry " + e.name + " needs bytes [" + std::to_string(e.offset) +
                            ", " + std::to_string(e.offset + e.byte_length()) + ") but blob has " +
                            std::to_string(blob.size()));
        sorted.push_back(&e);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->offset < b->offset; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i - 1]->offset + sorted[i - 1]->byte_length() > sorted[i]->offset)
            throw LoadError("entries " + sorted[i - 1]->name + " and " + sorted[i]->name + " overlap");
    }

    std::vector<ConvLayer> layers;
    for (const auto& spec : kVgg16Convs) {
        const std::string base(spec.name);
        const auto* w = manifest.find(base + ".weight");
        const auto* b = manifest.find(base + ".bias");
        if (!w)
            throw LoadError("manifest missing entry " + base + ".weight for " + layer_label(spec));
        if (!b)
            throw LoadError("manifest missing entry " + base + ".bias for " + layer_label(spec));
        if (w->shape.size() != 4)
            throw LoadError(layer_label(spec) + ": kernel shape must be [out, in, kh, kw]");
        if (b->shape.size() != 1)
            throw LoadError(layer_label(spec) + ": bias shape must be [out]");

        ConvLayer layer;
        layer.layer_id = spec.layer_id;
        layer.name = base;
        layer.kernel = Kernel4<float>(w->shape[0], w->shape[1], w->shape[2], w->shape[3]);
        const std::byte* wp = blob.data() + w->offset;
        for (Index i = 0; i < layer.kernel.size(); ++i)
            layer.kernel.data()[i] = read_f32le(wp + 4 * i);
        layer.bias.resize(b->shape[0]);
        const std::byte* bp = blob.data() + b->offset;
        for (Index i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] = read_f32le(bp + 4 * i);
        layers.push_back(std::move(layer));
    }
    return from_layers(std::move(layers), manifest.preprocessing);
}

Backbone Backbone::load(const fs::path& manifest_path, const fs::path& blob_path) {
    const WeightManifest manifest = read_manifest(manifest_path);
    std::ifstream in(blob_path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open weight blob " + blob_path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_manifest(manifest, std::as_bytes(std::span<const char>(raw)));
}

Backbone Backbone::from_layers(std::vector<ConvLayer> layers, Preprocessing preprocessing, BackboneConfig config) {
    validate_chain(layers);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].layer_id = kVgg16Convs[i].layer_id;
        layers[i].name = std::string(kVgg16Convs[i].name);
        if (!layers[i].kernel.data().allFinite() || !layers[i].bias.allFinite())
            throw LoadError(layer_label(kVgg16Convs[i]) + ": non-finite weights");
    }
    Backbone b;
    b.layers_ = std::move(layers);
    b.preprocessing_ = preprocessing;
    b.config_ = config;
    return b;
}

void write_weight_bundle(const fs::path& dir, const std::vector<ConvLayer>& layers,
                         const Preprocessing& preprocessing, const std::string& source_note) {
    validate_chain(layers);
    fs::create_directories(dir);
    WeightManifest m;
    m.preprocessing = preprocessing;
    m.source_note = source_note;
    std::vector<char> blob;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string base(kVgg16Convs[i].name);
        const auto& k = layers[i].kernel;
        m.entries.push_back({base + ".weight",
                             {k.out_channels(), k.in_channels(), k.kernel_height(), k.kernel_width()},
                             "f32le",
                             blob.size()});
        for (Index j = 0; j < k.size(); ++j)
            append_f32le(blob, k.data()[j]);
        m.entries.push_back({base + ".bias", {layers[i].bias.size()}, "f32le", blob.size()});
        for (Index j = 0; j < layers[i].bias.size(); ++j)
            append_f32le(blob, layers[i].bias[j]);
    }
    write_manifest(dir / "manifest.json", m);
    std::ofstream out(dir / "weights.bin", std::ios::binary);
    if (!out)
        throw LoadError("cannot write " + (dir / "weights.bin").string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

std::vector<ConvLayer> random_vgg16_layers(std::span<const int> widths, std::uint64_t seed) {
    if (widths.size() != kVgg16Convs.size())
        throw InputError("random_vgg16_layers: need 13 widths");
    std::mt19937_64 rng(seed);
    std::vector<ConvLayer> layers;
    Index in = 3;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        ConvLayer layer;
        layer.layer_id = kVgg16Convs[i].layer_id;
        layer.name = std::string(kVgg16Convs[i].name);
        layer.kernel = Kernel4<float>(widths[i], in, 3, 3);
        std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(in * 9)));
        for (Index j = 0; j < layer.kernel.size(); ++j)
            layer.kernel.data()[j] = dist(rng);
        layer.bias = Eigen::VectorXf::Zero(widths[i]);
        in = widths[i];
        layers.push_back(std::move(layer));
    }
    return layers;
}

std::string float_digest(std::span<const float> values) {
    std::vector<char> bytes;
    bytes.reserve(values.size() * 4);
    for (float v : values)
        append_f32le(bytes, v);
    std::uint64_t h = 14695981039346656037ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::ostringstream ss;
    ss << "fnv1a64:" << std::hex;
    ss.width(16);
    ss.fill('0');
    ss << h;
    return ss.str();
}

std::string weights_digest(const Backbone& backbone) {
    std::vector<float> all;
    for (const auto& layer : backbone.layers()) {
        all.insert(all.end(), layer.kernel.data().data(), layer.kernel.data().data() + layer.kernel.size());
        all.insert(all.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
    }
    return float_digest(all);
}

ReferenceFixture read_reference(const fs::path& path) {
    try {
        const json j = json::parse(read_text(path));
        ReferenceFixture f{tensor_from_json(j.at("image"), "image"),
                           tensor_from_json(j.at("preprocessed"), "preprocessed"),
                           tensor_from_json(j.at("layer17"), "layer17")};
        if (j.contains("preprocessed_digest") &&
            j.at("preprocessed_digest").get<std::string>() != float_digest(f.preprocessed.values()))
            throw LoadError("reference: preprocessed digest mismatch");
        if (j.contains("layer17_digest") &&
            j.at("layer17_digest").get<std::string>() != float_digest(f.layer17.values()))
            throw LoadError("reference: layer17 digest mismatch");
        return f;
    } catch (const json::exception& e) {
        throw LoadError("malformed reference " + path.string() + ": " + e.what());
    }
}

void write_reference(const fs::path& path, const ReferenceFixture& f) {
    json j{{"image", tensor_json(f.image)},
           {"preprocessed", tensor_json(f.preprocessed)},
           {"preprocessed_digest", float_digest(f.preprocessed.values())},
           {"layer17", tensor_json(f.layer17)},
           {"layer17_digest", float_digest(f.layer17.values())}};
    std::ofstream out(path);
    if (!out)
        throw LoadError("cannot write " + path.string());
    out << j.dump() << '\n';
}

ReferenceCheck check_reference(const Backbone& backbone, const ReferenceFixture& f) {
    ReferenceCheck check;
    const Tensorf pre = backbone.preprocess(f.image);
    if (pre.same_shape(f.preprocessed)) {
        check.preprocess_max_abs = (pre.data() - f.preprocessed.data()).cwiseAbs().maxCoeff();
        check.preprocess_ok = check.preprocess_max_abs <= 1e-6;
    }
    const GridPoint centre{f.image.height() / 2, f.image.width() / 2};
    const Tensorf l17 = backbone.extract(f.image, centre, PoolMode::Uniform).at(17);
    if (l17.same_shape(f.layer17) && !f.layer17.empty()) {
        const double scale = std::max(1e-12, static_cast<double>(f.layer17.data().cwiseAbs().maxCoeff()));
        check.layer17_max_rel = (l17.data() - f.layer17.data()).cwiseAbs().maxCoeff() / scale;
        check.layer17_ok = check.layer17_max_rel <= 1e-4;
    }
    return check;
}

} // namespace eccnet
