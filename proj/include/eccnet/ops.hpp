#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "eccnet/tensor.hpp"

namespace eccnet {

/// Integer (row, col) location on some pixel grid.
struct GridPoint {
    Index row = 0;
    Index col = 0;
    friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

enum class Padding { Same, Valid };

/// Parameters of one eccentricity-dependent pooling layer.
struct EccPoolConfig {
    double gamma = 0.0;   // window growth per output-grid pixel of eccentricity
    double eta = 1.0;     // output-grid pixels per degree of visual angle
    double delta = 4.3;   // fovea radius, dva
    int stride = 2;
    int foveal_rf = 2;

    void validate() const {
        if (!(gamma >= 0.0) || !(eta > 0.0) || !(delta > 0.0) || stride != 2 || foveal_rf != 2)
            throw InputError("invalid eccentricity pooling config");
    }
};

// ---------------------------------------------------------------------------
// Convolution

/// Stride-1 cross-correlation. Kernel is [out, in, kh, kw]; "same" pads with zeros,
/// placing the extra row/column of an even kernel at the bottom/right.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Kernel4<Scalar>& kernel,
                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& bias, Padding padding) {
    const Index in_ch = input.channels(), h = input.height(), w = input.width();
    const Index out_ch = kernel.out_channels(), kh = kernel.kernel_height(), kw = kernel.kernel_width();
    if (kernel.in_channels() != in_ch)
        throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.in_channels()) +
                         " input channels, got " + input.dims());
    if (bias.size() != out_ch)
        throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries, expected " +
                         std::to_string(out_ch));
    if (kh < 1 || kw < 1)
        throw ShapeError("conv2d: empty kernel");

    const bool same = padding == Padding::Same;
    const Index pad_top = same ? (kh - 1) / 2 : 0;
    const Index pad_left = same ? (kw - 1) / 2 : 0;
    const Index out_h = same ? h : h - kh + 1;
    const Index out_w = same ? w : w - kw + 1;
    if (out_h < 1 || out_w < 1)
        throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " larger than valid input " + input.dims());

    Tensor<Scalar> out(out_ch, out_h, out_w);
    const Index depth = in_ch * kh * kw;
    constexpr Index kBudget = Index{1} << 22;
    const Index tile_rows = std::clamp<Index>(kBudget / std::max<Index>(1, depth * out_w), 1, out_h);

    using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat cols(depth, tile_rows * out_w);
    const auto weights = kernel.matrix();

    for (Index y0 = 0; y0 < out_h; y0 += tile_rows) {
        const Index rows = std::min(tile_rows, out_h - y0);
        const Index n = rows * out_w;
        auto block = cols.leftCols(n);
        for (Index c = 0; c < in_ch; ++c) {
            const auto src = input.plane(c);
            for (Index dy = 0; dy < kh; ++dy) {
                for (Index dx = 0; dx < kw; ++dx) {
                    Scalar* dst = block.row((c * kh + dy) * kw + dx).data();
                    // x range whose source column lies inside the input
                    const Index x_lo = std::clamp<Index>(pad_left - dx, 0, out_w);
                    const Index x_hi = std::clamp<Index>(w + pad_left - dx, 0, out_w);
                    for (Index r = 0; r < rows; ++r) {
                        Scalar* row_dst = dst + r * out_w;
                        const Index sy = y0 + r + dy - pad_top;
                        if (sy < 0 || sy >= h || x_lo >= x_hi) {
                            std::fill(row_dst, row_dst + out_w, Scalar(0));
                            continue;
                        }
                        std::fill(row_dst, row_dst + x_lo, Scalar(0));
                        const Scalar* s = src.data() + sy * w + (x_lo + dx - pad_left);
                        std::copy(s, s + (x_hi - x_lo), row_dst + x_lo);
                        std::fill(row_dst + x_hi, row_dst + out_w, Scalar(0));
                    }
                }
            }
        }
        Eigen::Map<RowMat, 0, Eigen::OuterStride<>> dst(out.data().data() + y0 * out_w, out_ch, n,
                                                        Eigen::OuterStride<>(out_h * out_w));
        dst.noalias() = weights * block;
        dst.colwise() += bias;
    }
    return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
    Tensor<Scalar> out(input.channels(), input.height(), input.width());
    out.data() = input.data().cwiseMax(Scalar(0));
    return out;
}

// ---------------------------------------------------------------------------
// Pooling

/// Pooling window size (input-grid pixels) for a unit `distance` output-grid
/// pixels away from the fixation.
inline int ecc_rf_size(const EccPoolConfig& cfg, double distance) {
    const double ecc_dva = distance / cfg.eta;
    if (ecc_dva <= cfg.delta)
        return cfg.foveal_rf;
    const double r = std::floor(cfg.eta * cfg.gamma * (ecc_dva - cfg.delta) + 2.5);
    return std::max(cfg.foveal_rf, static_cast<int>(r));
}

/// Half-open input-grid rectangle covered by one pooling unit.
struct PoolWindow {
    Index y0, y1, x0, x1;
    Index area() const { return (y1 - y0) * (x1 - x0); }
};

inline Index ceil_half(Index n) { return (n + 1) / 2; }

/// Window of the output unit (i, j) for an r x r pool anchored at (2i, 2j),
/// clipped to an h x w input.
inline PoolWindow pool_window(Index i, Index j, int r, Index h, Index w) {
    const Index lead = (r - 1) / 2;
    const Index y0 = 2 * i - lead, x0 = 2 * j - lead;
    return {std::max<Index>(y0, 0), std::min<Index>(y0 + r, h), std::max<Index>(x0, 0),
            std::min<Index>(x0 + r, w)};
}

/// Windows for every output unit of an eccentricity-dependent pool over an
/// h x w input with the fixation at `fixation` (input-grid pixels).
inline std::vector<PoolWindow> ecc_pool_windows(Index h, Index w, const EccPoolConfig& cfg,
                                                GridPoint fixation) {
    const Index oh = ceil_half(h), ow = ceil_half(w);
    const double fr = static_cast<double>(fixation.row / cfg.stride);
    const double fc = static_cast<double>(fixation.col / cfg.stride);
    std::vector<PoolWindow> windows;
    windows.reserve(static_cast<std::size_t>(oh * ow));
    for (Index i = 0; i < oh; ++i) {
        for (Index j = 0; j < ow; ++j) {
            const double d = std::hypot(static_cast<double>(i) - fr, static_cast<double>(j) - fc);
            windows.push_back(pool_window(i, j, ecc_rf_size(cfg, d), h, w));
        }
    }
    return windows;
}

/// Average pooling with eccentricity-dependent windows and stride 2. Clipped
/// windows average only the covered pixels.
template <typename Scalar>
Tensor<Scalar> ecc_avg_pool(const Tensor<Scalar>& input, const EccPoolConfig& cfg, GridPoint fixation) {
    cfg.validate();
    const Index h = input.height(), w = input.width();
    if (fixation.row < 0 || fixation.row >= h || fixation.col < 0 || fixation.col >= w)
        throw InputError("ecc_avg_pool: fixation (" + std::to_string(fixation.row) + ", " +
                         std::to_string(fixation.col) + ") outside " + input.dims());
    const Index oh = ceil_half(h), ow = ceil_half(w);
    const auto windows = ecc_pool_windows(h, w, cfg, fixation);

    Tensor<Scalar> out(input.channels(), oh, ow);
    Eigen::MatrixXd sat(h + 1, w + 1);
    for (Index c = 0; c < input.channels(); ++c) {
        const auto src = input.plane(c);
        sat.setZero();
        for (Index y = 0; y < h; ++y) {
            double run = 0.0;
            for (Index x = 0; x < w; ++x) {
                run += static_cast<double>(src(y, x));
                sat(y + 1, x + 1) = sat(y, x + 1) + run;
            }
        }
        auto dst = out.plane(c);
        for (Index k = 0; k < oh * ow; ++k) {
            const auto& win = windows[static_cast<std::size_t>(k)];
            const double sum = sat(win.y1, win.x1) - sat(win.y0, win.x1) - sat(win.y1, win.x0) +
                               sat(win.y0, win.x0);
            dst(k / ow, k % ow) = static_cast<Scalar>(sum / static_cast<double>(win.area()));
        }
    }
    return out;
}

/// 2x2 average pool, stride 2, border-clipped.
template <typename Scalar>
Tensor<Scalar> avg_pool_2x2(const Tensor<Scalar>& input) {
    const Index h = input.height(), w = input.width();
    const Index oh = ceil_half(h), ow = ceil_half(w);
    Tensor<Scalar> out(input.channels(), oh, ow);
    for (Index c = 0; c < input.channels(); ++c) {
        const auto src = input.plane(c);
        auto dst = out.plane(c);
        for (Index i = 0; i < oh; ++i) {
            const Index y0 = 2 * i, y1 = std::min(y0 + 2, h);
            for (Index j = 0; j < ow; ++j) {
                const Index x0 = 2 * j, x1 = std::min(x0 + 2, w);
                const auto block = src.block(y0, x0, y1 - y0, x1 - x0);
                dst(i, j) = block.sum() / static_cast<Scalar>(block.size());
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Map utilities

/// (x - min) / (max - min) over the whole tensor; a constant tensor maps to zeros.
template <typename Scalar>
Tensor<Scalar> minmax_normalize(const Tensor<Scalar>& input) {
    Tensor<Scalar> out(input.channels(), input.height(), input.width());
    if (input.empty())
        return out;
    const Scalar lo = input.data().minCoeff();
    const Scalar hi = input.data().maxCoeff();
    if (!(hi > lo))
        return out;
    out.data() = (input.data().array() - lo) / (hi - lo);
    return out;
}

/// Nearest-neighbour resampling of every channel to out_h x out_w.
template <typename Scalar>
Tensor<Scalar> resize_nn(const Tensor<Scalar>& input, Index out_h, Index out_w) {
    if (out_h < 1 || out_w < 1)
        throw ShapeError("resize_nn: target dims must be positive, got " + std::to_string(out_h) + "x" +
                         std::to_string(out_w));
    const Index h = input.height(), w = input.width();
    if (h == out_h && w == out_w)
        return input;
    if (h < 1 || w < 1)
        throw ShapeError("resize_nn: empty input " + input.dims());
    Tensor<Scalar> out(input.channels(), out_h, out_w);
    for (Index c = 0; c < input.channels(); ++c) {
        const auto src = input.plane(c);
        auto dst = out.plane(c);
        for (Index y = 0; y < out_h; ++y) {
            const Index sy = std::min(h - 1, (y * h) / out_h);
            for (Index x = 0; x < out_w; ++x)
                dst(y, x) = src(sy, std::min(w - 1, (x * w) / out_w));
        }
    }
    return out;
}

} // namespace eccnet
