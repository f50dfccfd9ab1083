// SPDX-License-Identifier: MIT
#pragma once

#include "tfsisr/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tfsisr {

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

[[nodiscard]] inline std::size_t voxel_count(const Dims& d) { return d[0] * d[1] * d[2]; }

[[nodiscard]] inline std::string dims_string(const Dims& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

/// Dense real-valued 3D volume. Voxel (i, j, k) lives at i + I*j + I*J*k
/// (first index fastest). Immutable once constructed: every voxel is finite
/// and every spacing component (millimeters) is strictly positive.
class Volume {
public:
    Volume(Dims dims, std::vector<double> data, Spacing spacing = {1.0, 1.0, 1.0})
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        require(dims_[0] > 0 && dims_[1] > 0 && dims_[2] > 0, ErrorCode::invalid_argument,
                "volume dimensions must be positive, got " + dims_string(dims_));
        require(data_.size() == voxel_count(dims_), ErrorCode::size_mismatch,
                "volume " + dims_string(dims_) + " needs " + std::to_string(voxel_count(dims_)) +
                    " values, got " + std::to_string(data_.size()));
        for (double s : spacing_)
            require(std::isfinite(s) && s > 0.0, ErrorCode::invalid_argument,
                    "voxel spacing must be finite and positive");
        for (double v : data_)
            require(std::isfinite(v), ErrorCode::non_finite, "volume contains a non-finite voxel");
    }

    [[nodiscard]] static Volume filled(Dims dims, double value, Spacing spacing = {1.0, 1.0, 1.0}) {
        return Volume(dims, std::vector<double>(voxel_count(dims), value), spacing);
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + dims_[0] * (j + dims_[1] * k);
    }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[index(i, j, k)];
    }
    [[nodiscard]] double operator[](std::size_t flat) const noexcept { return data_[flat]; }

    [[nodiscard]] Volume with_spacing(Spacing spacing) const { return Volume(dims_, data_, spacing); }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<double> data_;
};

}  // namespace tfsisr
