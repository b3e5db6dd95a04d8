#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

#include "eccnet/error.hpp"

namespace eccnet {

using Index = Eigen::Index;

inline std::string dims_string(Index c, Index h, Index w) {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

/// Rank-3 dense array laid out channel-major, then row-major (C x H x W).
template <typename Scalar>
class Tensor {
public:
    using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using PlaneMap = Eigen::Map<Plane>;
    using ConstPlaneMap = Eigen::Map<const Plane>;

    Tensor() = default;

    Tensor(Index channels, Index height, Index width)
        : channels_(channels), height_(height), width_(width),
          data_(Storage::Zero(channels * height * width)) {
        if (channels < 0 || height < 0 || width < 0)
            throw ShapeError("negative tensor dimension: " + dims_string(channels, height, width));
    }

    static Tensor Constant(Index channels, Index height, Index width, Scalar value) {
        Tensor t(channels, height, width);
        t.data_.setConstant(value);
        return t;
    }

    /// Single-channel tensor holding a copy of `plane`.
    template <typename Derived>
    static Tensor FromPlane(const Eigen::MatrixBase<Derived>& plane) {
        Tensor t(1, plane.rows(), plane.cols());
        t.plane(0) = plane;
        return t;
    }

    Index channels() const { return channels_; }
    Index height() const { return height_; }
    Index width() const { return width_; }
    Index plane_size() const { return height_ * width_; }
    Index size() const { return data_.size(); }
    bool empty() const { return data_.size() == 0; }
    std::string dims() const { return dims_string(channels_, height_, width_); }

    Scalar& operator()(Index c, Index y, Index x) { return data_[(c * height_ + y) * width_ + x]; }
    Scalar operator()(Index c, Index y, Index x) const { return data_[(c * height_ + y) * width_ + x]; }

    PlaneMap plane(Index c) { return PlaneMap(data_.data() + c * plane_size(), height_, width_); }
    ConstPlaneMap plane(Index c) const {
        return ConstPlaneMap(data_.data() + c * plane_size(), height_, width_);
    }

    /// View as a (channels) x (height * width) row-major matrix.
    Eigen::Map<Plane> matrix() { return Eigen::Map<Plane>(data_.data(), channels_, plane_size()); }
    Eigen::Map<const Plane> matrix() const {
        return Eigen::Map<const Plane>(data_.data(), channels_, plane_size());
    }

    Storage& data() { return data_; }
    const Storage& data() const { return data_; }
    std::span<Scalar> values() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
    std::span<const Scalar> values() const {
        return {data_.data(), static_cast<std::size_t>(data_.size())};
    }

    bool same_shape(const Tensor& other) const {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }

    bool all_finite() const { return data_.allFinite(); }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> out(channels_, height_, width_);
        out.data() = data_.template cast<Other>();
        return out;
    }

    /// Bitwise equality of shape and values.
    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.same_shape(b) && (a.data_.array() == b.data_.array()).all();
    }

private:
    Index channels_ = 0;
    Index height_ = 0;
    Index width_ = 0;
    Storage data_;
};

using Tensorf = Tensor<float>;

/// Convolution weights stored [out_ch, in_ch, kh, kw].
template <typename Scalar>
class Kernel4 {
public:
    using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Kernel4() = default;
    Kernel4(Index out_ch, Index in_ch, Index kh, Index kw)
        : out_(out_ch), in_(in_ch), kh_(kh), kw_(kw), data_(Storage::Zero(out_ch * in_ch * kh * kw)) {}

    Index out_channels() const { return out_; }
    Index in_channels() const { return in_; }
    Index kernel_height() const { return kh_; }
    Index kernel_width() const { return kw_; }
    Index size() const { return data_.size(); }

    Scalar& operator()(Index o, Index i, Index y, Index x) { return data_[((o * in_ + i) * kh_ + y) * kw_ + x]; }
    Scalar operator()(Index o, Index i, Index y, Index x) const {
        return data_[((o * in_ + i) * kh_ + y) * kw_ + x];
    }

    /// out_ch x (in_ch * kh * kw) view; each row is one filter in im2col order.
    Eigen::Map<const Matrix> matrix() const {
        return Eigen::Map<const Matrix>(data_.data(), out_, in_ * kh_ * kw_);
    }

    Storage& data() { return data_; }
    const Storage& data() const { return data_; }

private:
    Index out_ = 0;
    Index in_ = 0;
    Index kh_ = 0;
    Index kw_ = 0;
    Storage data_;
};

} // namespace eccnet
