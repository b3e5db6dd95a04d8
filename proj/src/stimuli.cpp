#include "eccnet/stimuli.hpp"

#include <algorithm>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

namespace eccnet {

namespace {

constexpr float kInk = 255.0f;
constexpr float kDark = 0.0f;
constexpr float kLightingBackground = 27.0f;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// Pixel-centre coordinates relative to the canvas centre, rotated back by
// `angle_deg` (clockwise on screen) into the shape's canonical frame.
template <typename Inside>
Tensorf rasterize(Index square, double angle_deg, Inside inside) {
    Tensorf canvas(1, square, square);
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double mid = static_cast<double>(square) / 2.0;
    for (Index y = 0; y < square; ++y) {
        for (Index x = 0; x < square; ++x) {
            const double px = static_cast<double>(x) + 0.5 - mid;
            const double py = static_cast<double>(y) + 0.5 - mid;
            if (inside(px * c + py * s, -px * s + py * c))
                canvas(0, y, x) = kInk;
        }
    }
    return canvas;
}

Tensorf rotate_quarter_turns(const Tensorf& img, int turns) {
    Tensorf out = img;
    for (int t = 0; t < ((turns % 4) + 4) % 4; ++t) {
        Tensorf next(1, out.width(), out.height());
        for (Index y = 0; y < next.height(); ++y)
            for (Index x = 0; x < next.width(); ++x)
                next(0, y, x) = out(0, out.height() - 1 - x, y);  // clockwise
        out = std::move(next);
    }
    return out;
}

struct Layout {
    std::vector<Box> boxes;
    std::size_t target_index = 0;
};

Layout place_items(const ExperimentPlan& plan, int set_size, std::mt19937_64& rng) {
    const int cells = plan.grid * plan.grid;
    if (set_size < 1 || set_size > cells)
        throw InputError("set size " + std::to_string(set_size) + " does not fit a " + std::to_string(plan.grid) +
                         "x" + std::to_string(plan.grid) + " grid");
    std::vector<int> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    auto bound = [&](int k) { return static_cast<Index>(k) * plan.image_px / plan.grid; };
    Layout layout;
    for (int i = 0; i < set_size; ++i) {
        const int cell = order[static_cast<std::size_t>(i)];
        const int gr = cell / plan.grid, gc = cell % plan.grid;
        const Index y0 = bound(gr), y1 = bound(gr + 1), x0 = bound(gc), x1 = bound(gc + 1);
        std::uniform_int_distribution<Index> jy(y0, y1 - plan.item_px);
        std::uniform_int_distribution<Index> jx(x0, x1 - plan.item_px);
        const Index top = jy(rng), left = jx(rng);
        layout.boxes.push_back({top, left, top + plan.item_px - 1, left + plan.item_px - 1});
    }
    layout.target_index = std::uniform_int_distribution<std::size_t>(0, layout.boxes.size() - 1)(rng);
    return layout;
}

struct Drawn {
    Tensorf image;
    double angle = 0.0;
};

void stamp(Tensorf& image, const Tensorf& item, const Box& box) {
    image.plane(0).block(box.top, box.left, item.height(), item.width()) = item.plane(0);
}

TrialSpec assemble(const ExperimentPlan& plan, const ConditionInfo& info, int set_size, std::uint64_t seed,
                   std::mt19937_64& rng, float background, const std::function<Drawn(bool, std::size_t)>& item,
                   const Tensorf& canonical_target) {
    TrialSpec spec;
    spec.experiment = plan.experiment;
    spec.condition = std::string(info.key);
    spec.set_size = set_size;
    spec.seed = seed;
    Layout layout = place_items(plan, set_size, rng);
    spec.search_image = Tensorf::Constant(1, plan.image_px, plan.image_px, background);
    std::size_t distractor = 0;
    for (std::size_t i = 0; i < layout.boxes.size(); ++i) {
        const bool is_target = i == layout.target_index;
        const Drawn drawn = item(is_target, is_target ? 0 : distractor++);
        stamp(spec.search_image, drawn.image, layout.boxes[i]);
        spec.item_angles.push_back(drawn.angle);
    }
    spec.item_boxes = std::move(layout.boxes);
    spec.target_index = layout.target_index;
    spec.target_box = spec.item_boxes[spec.target_index];
    spec.target_image = crop_to_content(canonical_target, background);
    return spec;
}

void check_set_size(const ExperimentPlan& plan, int set_size) {
    if (std::find(plan.set_sizes.begin(), plan.set_sizes.end(), set_size) == plan.set_sizes.end())
        throw InputError("experiment " + std::to_string(plan.experiment) + " has no set size " +
                         std::to_string(set_size));
}

const ConditionInfo& condition_in(std::initializer_list<int> experiments, std::string_view name) {
    for (int e : experiments) {
        for (const auto& c : kConditions) {
            if (c.experiment == e && c.key == name)
                return c;
        }
    }
    throw InputError("unknown condition " + std::string(name));
}

// Exp 1 geometry, pixels
constexpr double kLineLength = 1.2 * kPxPerDva;
constexpr double kStroke1 = 0.18 * kPxPerDva;
constexpr double kArcRadius = 1.0 * kPxPerDva;
constexpr double kArcChord = 1.3 * kPxPerDva;

} // namespace

const ConditionInfo& find_condition(int experiment, std::string_view name) {
    for (const auto& c : kConditions) {
        if (c.experiment == experiment && (c.key == name || (name.size() == 1 && name[0] == c.label)))
            return c;
    }
    throw InputError("experiment " + std::to_string(experiment) + " has no condition " + std::string(name));
}

std::array<const ConditionInfo*, 2> experiment_conditions(int experiment) {
    std::array<const ConditionInfo*, 2> out{nullptr, nullptr};
    for (const auto& c : kConditions) {
        if (c.experiment == experiment)
            out[c.hard ? 0 : 1] = &c;
    }
    if (!out[0] || !out[1])
        throw InputError("no experiment " + std::to_string(experiment));
    return out;
}

ExperimentPlan plan_for(int experiment) {
    ExperimentPlan p;
    p.experiment = experiment;
    switch (experiment) {
    case 1:
        p.image_dva = 11.3;
        p.grid = 6;
        p.item_px = 46;
        p.set_sizes = {8, 16, 32};
        p.trials_per_condition = 90;
        break;
    case 2:
        p.image_dva = 6.6;
        p.grid = 4;
        p.item_px = dva_to_px(1.04);
        p.set_sizes = {1, 6, 12};
        p.trials_per_condition = 90;
        break;
    case 3:
    case 4:
        p.image_dva = 20.5;
        p.grid = 3;
        p.item_px = dva_to_px(5.5);
        p.set_sizes = {3, 6, 9};
        p.trials_per_condition = 108;
        break;
    case 5:
    case 6:
        p.image_dva = 11.3;
        p.grid = 4;
        p.item_px = dva_to_px(2.3);
        p.set_sizes = {1, 4, 8, 12};
        p.trials_per_condition = 120;
        break;
    default:
        throw InputError("experiment must be 1..6, got " + std::to_string(experiment));
    }
    p.image_px = dva_to_px(p.image_dva);
    return p;
}

std::vector<int> allocate_trials(int total, std::span<const int> set_sizes) {
    if (set_sizes.empty() || total < 0)
        throw InputError("allocate_trials: need set sizes and a non-negative total");
    const int k = static_cast<int>(set_sizes.size());
    std::vector<int> counts(set_sizes.size(), total / k);
    for (int i = 0; i < total % k; ++i)
        ++counts[static_cast<std::size_t>(i)];
    return counts;
}

std::uint64_t trial_seed(std::uint64_t master, int experiment, std::string_view condition, int index) {
    std::uint64_t x = splitmix64(master);
    x = splitmix64(x ^ static_cast<std::uint64_t>(experiment));
    x = splitmix64(x ^ fnv1a(condition));
    return splitmix64(x ^ static_cast<std::uint64_t>(index));
}

Tensorf render_glyph(Glyph glyph, Index square, Index stroke) {
    Tensorf g(1, square, square);
    auto p = g.plane(0);
    const Index a = (square - stroke) / 2;  // start of the central stroke
    const Index shift = square / 4;
    switch (glyph) {
    case Glyph::Cross:
        p.block(a, 0, stroke, square).setConstant(kInk);
        p.block(0, a, square, stroke).setConstant(kInk);
        break;
    case Glyph::NonCross:
        p.block(0, a, square, stroke).setConstant(kInk);
        p.block(a, 0, stroke, a).setConstant(kInk);
        p.block(a + shift, a + stroke, stroke, square - a - stroke).setConstant(kInk);
        break;
    case Glyph::L:
        p.block(0, a, a + stroke, stroke).setConstant(kInk);
        p.block(a, a, stroke, square - a).setConstant(kInk);
        break;
    case Glyph::T:
        p.block(a, 0, stroke, square).setConstant(kInk);
        p.block(a, a, square - a, stroke).setConstant(kInk);
        break;
    }
    return g;
}

Tensorf render_bar(Index square, double length, double thickness, double angle_deg) {
    return rasterize(square, angle_deg, [&](double u, double v) {
        return std::abs(u) <= thickness / 2.0 && std::abs(v) <= length / 2.0;
    });
}

Tensorf render_arc(Index square, double radius, double chord, double stroke, double angle_deg) {
    // Canonical arc: vertical chord, bulging to the right, bounding box centred.
    const double half = std::asin(std::min(1.0, chord / (2.0 * radius)));
    const double centre_x = -radius * (1.0 + std::cos(half)) / 2.0;
    const auto steps = static_cast<int>(std::ceil(2.0 * half * radius / 0.1));
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i <= steps; ++i) {
        const double t = -half + 2.0 * half * i / steps;
        samples.emplace_back(centre_x + radius * std::cos(t), radius * std::sin(t));
    }
    const double r2 = stroke * stroke / 4.0;
    return rasterize(square, angle_deg, [&](double u, double v) {
        for (const auto& [sx, sy] : samples) {
            if ((u - sx) * (u - sx) + (v - sy) * (v - sy) <= r2)
                return true;
        }
        return false;
    });
}

Tensorf render_ramp_disc(Index diameter, bool bright_top, bool rotate_cw, float background) {
    Tensorf disc = Tensorf::Constant(1, diameter, diameter, background);
    const double r = static_cast<double>(diameter) / 2.0;
    for (Index y = 0; y < diameter; ++y) {
        const double frac = (static_cast<double>(y) + 0.5) / static_cast<double>(diameter);
        const double from_bright = bright_top ? frac : 1.0 - frac;
        const int level = std::clamp(static_cast<int>(std::floor((1.0 - from_bright) * 16.0)), 0, 15);
        for (Index x = 0; x < diameter; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - r, dy = static_cast<double>(y) + 0.5 - r;
            if (dx * dx + dy * dy <= r * r)
                disc(0, y, x) = static_cast<float>(level * 17);
        }
    }
    return rotate_cw ? rotate_quarter_turns(disc, 1) : disc;
}

Tensorf crop_to_content(const Tensorf& image, float background) {
    Index top = image.height(), bottom = -1, left = image.width(), right = -1;
    for (Index y = 0; y < image.height(); ++y) {
        for (Index x = 0; x < image.width(); ++x) {
            if (image(0, y, x) != background) {
                top = std::min(top, y);
                bottom = std::max(bottom, y);
                left = std::min(left, x);
                right = std::max(right, x);
            }
        }
    }
    if (bottom < 0)
        return image;
    return Tensorf::FromPlane(image.plane(0).block(top, left, bottom - top + 1, right - left + 1));
}

int border_runs(const Tensorf& image, float background) {
    const Index h = image.height(), w = image.width();
    std::vector<bool> ring;
    for (Index x = 0; x < w; ++x)
        ring.push_back(image(0, 0, x) != background);
    for (Index y = 1; y < h; ++y)
        ring.push_back(image(0, y, w - 1) != background);
    for (Index x = w - 2; x >= 0; --x)
        ring.push_back(image(0, h - 1, x) != background);
    for (Index y = h - 2; y >= 1; --y)
        ring.push_back(image(0, y, 0) != background);
    int runs = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const bool prev = ring[(i + ring.size() - 1) % ring.size()];
        if (ring[i] && !prev)
            ++runs;
    }
    if (runs == 0 && !ring.empty() && ring[0])
        runs = 1;
    return runs;
}

TrialSpec gen_curvature(std::string_view condition, int set_size, std::uint64_t seed) {
    const auto& info = condition_in({1}, condition);
    const ExperimentPlan plan = plan_for(1);
    check_set_size(plan, set_size);
    std::mt19937_64 rng(seed);
    constexpr std::array<double, 4> kAngles{-45.0, 0.0, 45.0, 90.0};
    const bool target_is_line = info.key == "line_among_curves";
    auto draw = [&](bool line, double angle) {
        return line ? render_bar(plan.item_px, kLineLength, kStroke1, angle)
                    : render_arc(plan.item_px, kArcRadius, kArcChord, kStroke1, angle);
    };
    auto item = [&](bool is_target, std::size_t) {
        const double angle = kAngles[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
        return Drawn{draw(is_target == target_is_line, angle), angle};
    };
    return assemble(plan, info, set_size, seed, rng, kDark, item, draw(target_is_line, 0.0));
}

TrialSpec gen_lighting(std::string_view condition, int set_size, std::uint64_t seed) {
    const auto& info = condition_in({2}, condition);
    const ExperimentPlan plan = plan_for(2);
    check_set_size(plan, set_size);
    std::mt19937_64 rng(seed);
    const bool rotate = info.key == "left_right";
    auto item = [&](bool is_target, std::size_t) {
        return Drawn{render_ramp_disc(plan.item_px, is_target, rotate, kLightingBackground), 0.0};
    };
    return assemble(plan, info, set_size, seed, rng, kLightingBackground, item,
                    render_ramp_disc(plan.item_px, true, rotate, kLightingBackground));
}

TrialSpec gen_intersections(std::string_view condition, int set_size, std::uint64_t seed) {
    const auto& info = condition_in({3, 4}, condition);
    const ExperimentPlan plan = plan_for(info.experiment);
    check_set_size(plan, set_size);
    std::mt19937_64 rng(seed);
    Glyph target = Glyph::Cross, distractor = Glyph::NonCross;
    if (info.key == "noncross_among_cross")
        std::swap(target, distractor);
    else if (info.key == "L_among_T")
        target = Glyph::L, distractor = Glyph::T;
    else if (info.key == "T_among_L")
        target = Glyph::T, distractor = Glyph::L;
    const Index stroke = dva_to_px(0.55);
    const Tensorf target_glyph = render_glyph(target, plan.item_px, stroke);
    const Tensorf distractor_glyph = render_glyph(distractor, plan.item_px, stroke);
    auto item = [&](bool is_target, std::size_t) {
        const int turns = std::uniform_int_distribution<int>(0, 3)(rng);
        return Drawn{rotate_quarter_turns(is_target ? target_glyph : distractor_glyph, turns), 90.0 * turns};
    };
    return assemble(plan, info, set_size, seed, rng, kDark, item, target_glyph);
}

TrialSpec gen_orientation(std::string_view condition, int set_size, std::uint64_t seed) {
    const auto& info = condition_in({5, 6}, condition);
    const ExperimentPlan plan = plan_for(info.experiment);
    check_set_size(plan, set_size);
    std::mt19937_64 rng(seed);

    double target_angle = 0.0;
    std::vector<double> pool;
    if (info.key == "vertical_among_20") {
        pool = {20.0};
    } else if (info.key == "20_among_vertical") {
        target_angle = 20.0;
        pool = {0.0};
    } else if (info.key == "hetero_T20") {
        target_angle = 20.0;
        pool = {-80.0, -60.0, -40.0, -20.0, 0.0, 40.0, 60.0, 80.0};
    } else {
        pool = {-80.0, -60.0, -40.0, -20.0, 20.0, 40.0, 60.0, 80.0};
    }
    std::shuffle(pool.begin(), pool.end(), rng);

    const double length = 2.0 * kPxPerDva, thickness = 0.3 * kPxPerDva;
    auto item = [&](bool is_target, std::size_t k) {
        const double angle = is_target ? target_angle : pool[k % pool.size()];
        return Drawn{render_bar(plan.item_px, length, thickness, angle), angle};
    };
    return assemble(plan, info, set_size, seed, rng, kDark, item,
                    render_bar(plan.item_px, length, thickness, target_angle));
}

TrialSpec generate_trial(int experiment, std::string_view condition, int set_size, std::uint64_t seed) {
    const std::string key(find_condition(experiment, condition).key);
    switch (experiment) {
    case 1:
        return gen_curvature(key, set_size, seed);
    case 2:
        return gen_lighting(key, set_size, seed);
    case 3:
    case 4:
        return gen_intersections(key, set_size, seed);
    default:
        return gen_orientation(key, set_size, seed);
    }
}

} // namespace eccnet
