#include "eccnet/image_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <vector>

namespace eccnet {

namespace fs = std::filesystem;
using nlohmann::json;

void write_pgm(const fs::path& path, const Tensorf& image) {
    if (image.channels() != 1)
        throw ShapeError("write_pgm: expected a single-channel image, got " + image.dims());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<std::size_t>(image.size()));
    for (Index i = 0; i < image.size(); ++i)
        bytes[static_cast<std::size_t>(i)] =
            static_cast<unsigned char>(std::clamp(std::lround(image.data()[i]), 0L, 255L));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_pgm_normalized(const fs::path& path, const Tensorf& map) {
    Tensorf scaled = minmax_normalize(map);
    scaled.data() *= 255.0f;
    write_pgm(path, scaled);
}

Tensorf read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open " + path.string());
    std::string magic;
    Index w = 0, h = 0;
    int maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
        throw LoadError(path.string() + ": only 8-bit binary PGM is supported");
    in.get();
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w * h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw LoadError(path.string() + ": truncated pixel data");
    Tensorf image(1, h, w);
    for (Index i = 0; i < image.size(); ++i)
        image.data()[i] = bytes[static_cast<std::size_t>(i)];
    return image;
}

namespace {

json box_json(const Box& b) { return {{"top", b.top}, {"left", b.left}, {"bottom", b.bottom}, {"right", b.right}}; }

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace

void dump_trial(const fs::path& dir, const std::string& stem, const TrialSpec& trial) {
    fs::create_directories(dir);
    write_pgm(dir / (stem + "_search.pgm"), trial.search_image);
    write_pgm(dir / (stem + "_target.pgm"), trial.target_image);
    json boxes = json::array();
    for (const auto& b : trial.item_boxes)
        boxes.push_back(box_json(b));
    write_json(dir / (stem + ".json"), {{"experiment", trial.experiment},
                                        {"condition", trial.condition},
                                        {"set_size", trial.set_size},
                                        {"seed", trial.seed},
                                        {"image", {trial.search_image.height(), trial.search_image.width()}},
                                        {"target_index", trial.target_index},
                                        {"target_box", box_json(trial.target_box)},
                                        {"item_boxes", boxes}});
}

void dump_attention(const fs::path& dir, const std::string& stem, const std::array<Tensorf, 3>& modulation,
                    const FusionResult& fused) {
    fs::create_directories(dir);
    json layers = json::array();
    for (std::size_t i = 0; i < 3; ++i) {
        const int layer = kTapLayers[i];
        json entry{{"layer", layer},
                   {"max", fused.maxima[i]},
                   {"min", fused.minima[i]},
                   {"weight", fused.weights.w[i]}};
        if (!modulation[i].empty()) {
            const std::string file = stem + "_A" + std::to_string(layer) + ".pgm";
            write_pgm_normalized(dir / file, modulation[i]);
            entry["image"] = file;
            entry["dims"] = {modulation[i].height(), modulation[i].width()};
        }
        layers.push_back(entry);
    }
    const std::string fused_file = stem + "_fused.pgm";
    write_pgm_normalized(dir / fused_file, fused.map.values);
    write_json(dir / (stem + ".json"), {{"fixation_index", fused.map.fixation_index},
                                        {"fused", {{"image", fused_file},
                                                   {"dims", {fused.map.values.height(), fused.map.values.width()}}}},
                                        {"layers", layers}});
}

} // namespace eccnet
