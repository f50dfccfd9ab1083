// SPDX-License-Identifier: MIT
#pragma once

// Synthetic tooth: an ellipsoidal dentin body with a dark, tapered and gently
// curved canal running along axis 2. The canal occupies slices whose centre
// lies in the central canal_span fraction of the ellipsoid's axis-2 extent.
// On slice k with root coordinate t in [0, 1] (0 at the crown end), the canal
// is the in-plane disc of radius base_radius_mm * (1 - taper * t) around the
// centreline point (c0 + curvature_mm * sin(pi t / 2), c1).

#include "tfsisr/error.hpp"
#include "tfsisr/mask.hpp"
#include "tfsisr/random.hpp"
#include "tfsisr/volume.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace tfsisr {

struct PhantomSpec {
    Dims dims{64, 64, 64};
    Spacing spacing{0.04, 0.04, 0.04};
    double background = 0.0;
    double canal = 0.35;
    double dentin = 1.0;
    /// Ellipsoid semi-axes as fractions of each dimension.
    std::array<double, 3> body_semi_axes{0.40, 0.36, 0.46};
    double canal_span = 0.7;
    double base_radius_mm = 0.4;
    /// Fractional radius loss from crown end to apex; 0.8 takes 0.8 mm to 0.16 mm diameter.
    double taper = 0.8;
    double curvature_mm = 0.12;
    /// Half-width of the uniform per-voxel texture noise.
    double texture = 0.02;
    std::uint64_t seed = 0;

    void validate() const {
        for (auto d : dims) require(d >= 1, ErrorCode::invalid_argument, "phantom dims must be positive");
        for (double s : spacing)
            require(std::isfinite(s) && s > 0.0, ErrorCode::invalid_argument, "phantom spacing must be positive");
        require(background < canal && canal < dentin, ErrorCode::invalid_argument,
                "phantom intensities must satisfy background < canal < dentin");
        for (double f : body_semi_axes)
            require(f > 0.0 && f <= 0.5, ErrorCode::invalid_argument, "body semi-axes must lie in (0, 0.5]");
        require(canal_span > 0.0 && canal_span < 1.0, ErrorCode::invalid_argument, "canal span must lie in (0, 1)");
        require(base_radius_mm >= 0.0, ErrorCode::invalid_argument, "canal radius must be non-negative");
        require(taper >= 0.0 && taper <= 1.0, ErrorCode::invalid_argument, "taper must lie in [0, 1]");
        require(std::isfinite(curvature_mm), ErrorCode::invalid_argument, "curvature must be finite");
        require(texture >= 0.0, ErrorCode::invalid_argument, "texture amplitude must be non-negative");
    }
};

/// Analytic canal geometry of a phantom, in voxel-centre coordinates.
class CanalGeometry {
public:
    explicit CanalGeometry(const PhantomSpec& spec) : spec_(spec) {
        for (std::size_t a = 0; a < 3; ++a) {
            center_[a] = 0.5 * static_cast<double>(spec.dims[a]) - 0.5;
            semi_[a] = spec.body_semi_axes[a] * static_cast<double>(spec.dims[a]);
        }
        z_start_ = center_[2] - spec.canal_span * semi_[2];
        z_end_ = center_[2] + spec.canal_span * semi_[2];
    }

    /// Root coordinate of slice k, or nullopt when the slice has no canal.
    [[nodiscard]] std::optional<double> root_coordinate(std::size_t k) const {
        const double z = static_cast<double>(k);
        if (z < z_start_ || z > z_end_) return std::nullopt;
        return (z - z_start_) / (z_end_ - z_start_);
    }

    [[nodiscard]] double radius_mm(double t) const { return spec_.base_radius_mm * (1.0 - spec_.taper * t); }

    /// Centreline position (axis 0, axis 1) in voxel coordinates.
    [[nodiscard]] std::pair<double, double> centerline(double t) const {
        const double bend = spec_.curvature_mm / spec_.spacing[0] * std::sin(0.5 * std::numbers::pi * t);
        return {center_[0] + bend, center_[1]};
    }

    /// In-plane distance (mm) from voxel (i, j) on slice k to the centreline, if the slice has a canal.
    [[nodiscard]] std::optional<double> distance_mm(std::size_t i, std::size_t j, std::size_t k) const {
        const auto t = root_coordinate(k);
        if (!t) return std::nullopt;
        const auto [c0, c1] = centerline(*t);
        const double dx = (static_cast<double>(i) - c0) * spec_.spacing[0];
        const double dy = (static_cast<double>(j) - c1) * spec_.spacing[1];
        return std::hypot(dx, dy);
    }

    [[nodiscard]] bool in_canal(std::size_t i, std::size_t j, std::size_t k) const {
        const auto t = root_coordinate(k);
        if (!t) return false;
        const double rho = radius_mm(*t);
        return rho > 0.0 && *distance_mm(i, j, k) <= rho;
    }

    [[nodiscard]] bool in_body(std::size_t i, std::size_t j, std::size_t k) const {
        const std::array<double, 3> p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
        double r2 = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            const double u = (p[a] - center_[a]) / semi_[a];
            r2 += u * u;
        }
        return r2 <= 1.0;
    }

private:
    PhantomSpec spec_;
    std::array<double, 3> center_{};
    std::array<double, 3> semi_{};
    double z_start_ = 0.0;
    double z_end_ = 0.0;
};

struct Phantom {
    Volume volume;
    BinaryMask canal;
};

[[nodiscard]] inline Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const CanalGeometry geometry(spec);
    const auto [ni, nj, nk] = spec.dims;
    std::vector<double> data(voxel_count(spec.dims));
    std::vector<std::uint8_t> mask(data.size(), 0);
    GaussianSource rng(spec.seed);
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t j = 0; j < nj; ++j)
            for (std::size_t i = 0; i < ni; ++i) {
                const std::size_t n = i + ni * (j + nj * k);
                double value = spec.background;
                if (geometry.in_body(i, j, k)) {
                    if (geometry.in_canal(i, j, k)) {
                        value = spec.canal;
                        mask[n] = 1;
                    } else {
                        value = spec.dentin;
                    }
                }
                if (spec.texture > 0.0) value += spec.texture * (2.0 * rng.uniform() - 1.0);
                data[n] = value;
            }
    return Phantom{Volume(spec.dims, std::move(data), spec.spacing), BinaryMask(spec.dims, std::move(mask), spec.spacing)};
}

}  // namespace tfsisr
