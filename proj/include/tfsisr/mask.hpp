// SPDX-License-Identifier: MIT
#pragma once

#include "tfsisr/error.hpp"
#include "tfsisr/volume.hpp"

#include <cstdint>
#include <numeric>
#include <vector>

namespace tfsisr {

/// Boolean voxel grid with the same layout and spacing convention as Volume.
class BinaryMask {
public:
    BinaryMask(Dims dims, std::vector<std::uint8_t> values, Spacing spacing = {1.0, 1.0, 1.0})
        : dims_(dims), spacing_(spacing), values_(std::move(values)) {
        require(values_.size() == voxel_count(dims_), ErrorCode::size_mismatch,
                "mask " + dims_string(dims_) + " has " + std::to_string(values_.size()) + " values");
        for (auto& v : values_) v = v ? 1 : 0;
    }

    [[nodiscard]] static BinaryMask empty(Dims dims, Spacing spacing = {1.0, 1.0, 1.0}) {
        return BinaryMask(dims, std::vector<std::uint8_t>(voxel_count(dims), 0), spacing);
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] const std::vector<std::uint8_t>& values() const noexcept { return values_; }

    [[nodiscard]] bool operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return values_[i + dims_[0] * (j + dims_[1] * k)] != 0;
    }
    [[nodiscard]] bool operator[](std::size_t flat) const noexcept { return values_[flat] != 0; }

    [[nodiscard]] std::size_t count() const {
        return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
    }

    /// Converts to a 0/1 volume (for writing with write_volume).
    [[nodiscard]] Volume to_volume() const {
        return Volume(dims_, std::vector<double>(values_.begin(), values_.end()), spacing_);
    }

    [[nodiscard]] static BinaryMask from_volume(const Volume& v, double threshold = 0.5) {
        std::vector<std::uint8_t> values(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) values[n] = v[n] > threshold ? 1 : 0;
        return BinaryMask(v.dims(), std::move(values), v.spacing());
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<std::uint8_t> values_;
};

}  // namespace tfsisr
