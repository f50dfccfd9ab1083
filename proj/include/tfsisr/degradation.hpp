// SPDX-License-Identifier: MIT
#pragma once

// Separable forward model: Y = X x0 (D0 H0) x1 (D1 H1) x2 (D2 H2) + N, where
// Hn is the circulant Gaussian blur along axis n and Dn averages blocks of r
// neighbouring samples.

#include "tfsisr/error.hpp"
#include "tfsisr/random.hpp"
#include "tfsisr/tensor_algebra.hpp"
#include "tfsisr/volume.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tfsisr {

/// Standard deviations of the separable Gaussian blur, in high-resolution voxels.
struct GaussianPsf {
    std::array<double, 3> sigma{0.0, 0.0, 0.0};

    void validate() const {
        for (double s : sigma)
            require(std::isfinite(s) && s >= 0.0, ErrorCode::invalid_argument,
                    "PSF standard deviations must be finite and non-negative");
    }
};

/// D_n H_n for one axis: a (size / rate) x size matrix.
struct AxisOperator {
    DenseMatrix matrix;
    std::size_t axis = 0;
    std::size_t rate = 1;
};

using AxisOperators = std::array<AxisOperator, 3>;

struct DegradationConfig {
    GaussianPsf psf;
    std::size_t rate = 2;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        psf.validate();
        require(rate >= 1, ErrorCode::invalid_argument, "decimation rate must be >= 1");
        require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorCode::invalid_argument,
                "noise standard deviation must be finite and non-negative");
    }
};

/// Circularly centred sampled Gaussian of the given length, normalised to unit
/// sum. Entry n sits at circular distance min(n, length - n) from the origin;
/// sigma = 0 gives the discrete delta.
[[nodiscard]] inline std::vector<double> gaussian_kernel_1d(double sigma, std::size_t length) {
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::invalid_argument, "sigma must be non-negative");
    require(length >= 1, ErrorCode::invalid_argument, "kernel length must be positive");
    std::vector<double> kernel(length, 0.0);
    if (sigma == 0.0) {
        kernel[0] = 1.0;
        return kernel;
    }
    double total = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        const auto d = static_cast<double>(std::min(n, length - n));
        kernel[n] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += kernel[n];
    }
    for (double& w : kernel) w /= total;
    return kernel;
}

/// H(i, l) = kernel[(i - l) mod size], so H x is the circular convolution of x with the kernel.
[[nodiscard]] inline DenseMatrix circulant_blur_matrix(const std::vector<double>& kernel, std::size_t size) {
    require(kernel.size() == size && size > 0, ErrorCode::dimension_mismatch,
            "kernel length " + std::to_string(kernel.size()) + " does not match size " + std::to_string(size));
    const auto n = static_cast<Eigen::Index>(size);
    DenseMatrix h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n; ++l) h(i, l) = kernel[static_cast<std::size_t>(((i - l) % n + n) % n)];
    return h;
}

/// Block-averaging decimation: row b holds 1/r on columns [b r, b r + r).
[[nodiscard]] inline DenseMatrix decimation_matrix(std::size_t size, std::size_t rate) {
    require(rate >= 1 && size >= 1, ErrorCode::invalid_argument, "decimation needs positive size and rate");
    require(size % rate == 0, ErrorCode::invalid_argument,
            "decimation rate " + std::to_string(rate) + " does not divide size " + std::to_string(size));
    const auto rows = static_cast<Eigen::Index>(size / rate);
    const auto r = static_cast<Eigen::Index>(rate);
    DenseMatrix d = DenseMatrix::Zero(rows, static_cast<Eigen::Index>(size));
    for (Eigen::Index b = 0; b < rows; ++b) d.block(b, b * r, 1, r).setConstant(1.0 / static_cast<double>(rate));
    return d;
}

[[nodiscard]] inline AxisOperators make_axis_operators(const Dims& hr_dims, const GaussianPsf& psf, std::size_t rate) {
    psf.validate();
    AxisOperators ops;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t n = hr_dims[axis];
        require(rate >= 1 && n % rate == 0, ErrorCode::invalid_argument,
                "decimation rate " + std::to_string(rate) + " does not divide axis " + std::to_string(axis) +
                    " of size " + std::to_string(n));
        ops[axis].matrix = decimation_matrix(n, rate) * circulant_blur_matrix(gaussian_kernel_1d(psf.sigma[axis], n), n);
        ops[axis].axis = axis;
        ops[axis].rate = rate;
    }
    return ops;
}

[[nodiscard]] inline AxisOperators make_axis_operators(const Dims& hr_dims, const DegradationConfig& cfg) {
    cfg.validate();
    return make_axis_operators(hr_dims, cfg.psf, cfg.rate);
}

/// Noise-free separable forward model.
[[nodiscard]] inline Volume apply_axis_operators(const Volume& x, const AxisOperators& ops) {
    Volume y = mode_n_product(x, ops[0].matrix, 0);
    y = mode_n_product(y, ops[1].matrix, 1);
    return mode_n_product(y, ops[2].matrix, 2);
}

/// Blur, decimate and add seeded Gaussian noise. Noise samples are drawn in
/// voxel order from GaussianSource(cfg.seed). Output spacing is rate times the
/// input spacing.
[[nodiscard]] inline Volume degrade(const Volume& x, const DegradationConfig& cfg) {
    const auto ops = make_axis_operators(x.dims(), cfg);
    const Volume clean = apply_axis_operators(x, ops);
    Spacing spacing = x.spacing();
    for (double& s : spacing) s *= static_cast<double>(cfg.rate);
    std::vector<double> data(clean.data().begin(), clean.data().end());
    if (cfg.noise_sigma > 0.0) {
        GaussianSource gauss(cfg.seed);
        for (double& v : data) v += cfg.noise_sigma * gauss();
    }
    return Volume(clean.dims(), std::move(data), spacing);
}

}  // namespace tfsisr
