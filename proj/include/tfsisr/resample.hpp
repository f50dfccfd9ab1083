// SPDX-License-Identifier: MIT
#pragma once

#include "tfsisr/error.hpp"
#include "tfsisr/tensor_algebra.hpp"
#include "tfsisr/volume.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tfsisr {

/// (rate * size) x size matrix replicating each sample rate times.
[[nodiscard]] inline DenseMatrix replicate_matrix(std::size_t size, std::size_t rate) {
    require(size >= 1 && rate >= 1, ErrorCode::invalid_argument, "replication needs positive size and rate");
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(size * rate), static_cast<Eigen::Index>(size));
    for (std::size_t h = 0; h < size * rate; ++h) m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h / rate)) = 1.0;
    return m;
}

/// (rate * size) x size linear interpolation matrix. High-resolution sample h
/// sits at low-resolution coordinate (h + 0.5) / rate - 0.5, the centre of the
/// block it was averaged into; coordinates outside [0, size - 1] are clamped.
[[nodiscard]] inline DenseMatrix linear_interp_matrix(std::size_t size, std::size_t rate) {
    require(size >= 1 && rate >= 1, ErrorCode::invalid_argument, "interpolation needs positive size and rate");
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(size * rate), static_cast<Eigen::Index>(size));
    const double last = static_cast<double>(size - 1);
    for (std::size_t h = 0; h < size * rate; ++h) {
        const double c = std::clamp((static_cast<double>(h) + 0.5) / static_cast<double>(rate) - 0.5, 0.0, last);
        const auto lo = static_cast<std::size_t>(std::floor(c));
        const std::size_t hi = std::min(lo + 1, size - 1);
        const double w = c - static_cast<double>(lo);
        m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(lo)) += 1.0 - w;
        m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(hi)) += w;
    }
    return m;
}

namespace detail {

template <typename MatrixFactory>
Volume upsample_separable(const Volume& v, std::size_t rate, MatrixFactory make) {
    Volume out = v;
    for (std::size_t a = 0; a < 3; ++a) out = mode_n_product(out, make(v.dim(a), rate), a);
    Spacing s = v.spacing();
    for (double& x : s) x /= static_cast<double>(rate);
    return out.with_spacing(s);
}

}  // namespace detail

/// Zero-order (block replicate) upsampling.
[[nodiscard]] inline Volume upsample_nearest(const Volume& v, std::size_t rate) {
    return detail::upsample_separable(v, rate, replicate_matrix);
}

[[nodiscard]] inline Volume upsample_trilinear(const Volume& v, std::size_t rate) {
    return detail::upsample_separable(v, rate, linear_interp_matrix);
}

[[nodiscard]] inline Volume clamp_below(const Volume& v, double floor) {
    std::vector<double> data(v.data().begin(), v.data().end());
    for (double& x : data) x = std::max(x, floor);
    return Volume(v.dims(), std::move(data), v.spacing());
}

}  // namespace tfsisr
