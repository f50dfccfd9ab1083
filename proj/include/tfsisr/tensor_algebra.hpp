// SPDX-License-Identifier: MIT
#pragma once

// Tensor operations on 3D volumes and their canonical polyadic (CP) factors.
//
// Axes are numbered 0, 1, 2 for the I, J and K dimensions. Unfoldings follow
// the lexicographic fiber order:
//   axis 0: I x JK, column j + J*k
//   axis 1: J x IK, column i + I*k
//   axis 2: K x IJ, column i + I*j
// which makes X_(0) = U0 (U2 kr U1)^T, X_(1) = U1 (U2 kr U0)^T and
// X_(2) = U2 (U1 kr U0)^T hold for X = [[U0, U1, U2]].

#include "tfsisr/error.hpp"
#include "tfsisr/volume.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tfsisr {

using DenseMatrix = Eigen::MatrixXd;

namespace detail {

inline void check_axis(std::size_t axis) {
    require(axis < 3, ErrorCode::invalid_argument, "axis must be 0, 1 or 2, got " + std::to_string(axis));
}

inline void check_finite(const DenseMatrix& m, const char* what) {
    require(m.allFinite(), ErrorCode::non_finite, std::string(what) + " has non-finite entries");
}

}  // namespace detail

/// CP factor triple {U0 (I x F), U1 (J x F), U2 (K x F)}.
class FactorSet {
public:
    FactorSet(DenseMatrix u0, DenseMatrix u1, DenseMatrix u2) : factors_{std::move(u0), std::move(u1), std::move(u2)} {
        const auto rank = factors_[0].cols();
        require(rank > 0, ErrorCode::invalid_argument, "factor rank must be positive");
        for (const auto& u : factors_) {
            require(u.cols() == rank, ErrorCode::dimension_mismatch, "factor matrices disagree on rank");
            require(u.rows() > 0, ErrorCode::invalid_argument, "factor matrices need at least one row");
            detail::check_finite(u, "factor matrix");
        }
    }

    [[nodiscard]] const DenseMatrix& factor(std::size_t axis) const { return factors_.at(axis); }
    [[nodiscard]] const std::array<DenseMatrix, 3>& factors() const noexcept { return factors_; }
    [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(factors_[0].cols()); }
    [[nodiscard]] Dims dims() const noexcept {
        return {static_cast<std::size_t>(factors_[0].rows()), static_cast<std::size_t>(factors_[1].rows()),
                static_cast<std::size_t>(factors_[2].rows())};
    }

private:
    std::array<DenseMatrix, 3> factors_;
};

/// Column-wise Kronecker product: C(ia * b.rows + ib, f) = a(ia, f) * b(ib, f).
[[nodiscard]] inline DenseMatrix khatri_rao(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols() == b.cols(), ErrorCode::dimension_mismatch,
            "khatri_rao needs equal column counts, got " + std::to_string(a.cols()) + " and " +
                std::to_string(b.cols()));
    const Eigen::Index rb = b.rows();
    DenseMatrix c(a.rows() * rb, a.cols());
    for (Eigen::Index f = 0; f < a.cols(); ++f)
        for (Eigen::Index ia = 0; ia < a.rows(); ++ia)
            c.col(f).segment(ia * rb, rb) = a(ia, f) * b.col(f);
    return c;
}

/// Sum of rank-1 outer products: X(i,j,k) = sum_f U0(i,f) U1(j,f) U2(k,f).
[[nodiscard]] inline Volume build_from_factors(const FactorSet& f, Spacing spacing = {1.0, 1.0, 1.0}) {
    const Dims d = f.dims();
    const auto& u0 = f.factor(0);
    const auto& u1 = f.factor(1);
    const auto& u2 = f.factor(2);
    std::vector<double> data(voxel_count(d));
    const auto plane = static_cast<Eigen::Index>(d[0] * d[1]);
    // Slice k is U0 diag(U2(k, :)) U1^T, an I x J column-major block.
    DenseMatrix scaled(u0.rows(), u0.cols());
    for (std::size_t k = 0; k < d[2]; ++k) {
        scaled = u0 * u2.row(static_cast<Eigen::Index>(k)).asDiagonal();
        Eigen::Map<DenseMatrix> slice(data.data() + k * plane, u0.rows(), u1.rows());
        slice.noalias() = scaled * u1.transpose();
    }
    return Volume(d, std::move(data), spacing);
}

/// Mode-n unfolding with the column order documented at the top of this file.
[[nodiscard]] inline DenseMatrix matricize(const Volume& x, std::size_t axis) {
    detail::check_axis(axis);
    const auto [ni, nj, nk] = x.dims();
    const auto I = static_cast<Eigen::Index>(ni), J = static_cast<Eigen::Index>(nj),
               K = static_cast<Eigen::Index>(nk);
    Eigen::Map<const DenseMatrix> flat(x.data().data(), I, J * K);
    switch (axis) {
        case 0: return flat;
        case 1: {
            DenseMatrix out(J, I * K);
            for (Eigen::Index k = 0; k < K; ++k)
                out.middleCols(k * I, I) = flat.middleCols(k * J, J).transpose();
            return out;
        }
        default: {
            Eigen::Map<const DenseMatrix> by_k(x.data().data(), I * J, K);
            return by_k.transpose();
        }
    }
}

/// Inverse of matricize: rebuilds the volume of the given dims from its unfolding.
[[nodiscard]] inline Volume fold(const DenseMatrix& m, std::size_t axis, Dims dims, Spacing spacing = {1.0, 1.0, 1.0}) {
    detail::check_axis(axis);
    const auto I = static_cast<Eigen::Index>(dims[0]), J = static_cast<Eigen::Index>(dims[1]),
               K = static_cast<Eigen::Index>(dims[2]);
    const std::array<Eigen::Index, 3> rows{I, J, K};
    const std::array<Eigen::Index, 3> cols{J * K, I * K, I * J};
    require(m.rows() == rows[axis] && m.cols() == cols[axis], ErrorCode::dimension_mismatch,
            "unfolding shape does not match dims " + dims_string(dims));
    std::vector<double> data(voxel_count(dims));
    Eigen::Map<DenseMatrix> flat(data.data(), I, J * K);
    switch (axis) {
        case 0: flat = m; break;
        case 1:
            for (Eigen::Index k = 0; k < K; ++k)
                flat.middleCols(k * J, J) = m.middleCols(k * I, I).transpose();
            break;
        default: {
            Eigen::Map<DenseMatrix> by_k(data.data(), I * J, K);
            by_k = m.transpose();
        }
    }
    return Volume(dims, std::move(data), spacing);
}

/// Mode-n product: every axis-n fiber of x is premultiplied by p.
[[nodiscard]] inline Volume mode_n_product(const Volume& x, const DenseMatrix& p, std::size_t axis) {
    detail::check_axis(axis);
    require(static_cast<std::size_t>(p.cols()) == x.dim(axis), ErrorCode::dimension_mismatch,
            "mode product matrix has " + std::to_string(p.cols()) + " columns but axis " +
                std::to_string(axis) + " has size " + std::to_string(x.dim(axis)));
    detail::check_finite(p, "mode product matrix");
    Dims out_dims = x.dims();
    out_dims[axis] = static_cast<std::size_t>(p.rows());
    const auto I = static_cast<Eigen::Index>(x.dim(0)), J = static_cast<Eigen::Index>(x.dim(1)),
               K = static_cast<Eigen::Index>(x.dim(2));
    std::vector<double> data(voxel_count(out_dims));
    switch (axis) {
        case 0: {
            Eigen::Map<const DenseMatrix> in(x.data().data(), I, J * K);
            Eigen::Map<DenseMatrix> out(data.data(), p.rows(), J * K);
            out.noalias() = p * in;
            break;
        }
        case 1: {
            const Eigen::Index Jo = p.rows();
            for (Eigen::Index k = 0; k < K; ++k) {
                Eigen::Map<const DenseMatrix> in(x.data().data() + k * I * J, I, J);
                Eigen::Map<DenseMatrix> out(data.data() + k * I * Jo, I, Jo);
                out.noalias() = in * p.transpose();
            }
            break;
        }
        default: {
            Eigen::Map<const DenseMatrix> in(x.data().data(), I * J, K);
            Eigen::Map<DenseMatrix> out(data.data(), I * J, p.rows());
            out.noalias() = in * p.transpose();
        }
    }
    return Volume(out_dims, std::move(data), x.spacing());
}

/// Unfolding of [[U0, U1, U2]] computed from the factors alone.
[[nodiscard]] inline DenseMatrix factor_matricization(const FactorSet& f, std::size_t axis) {
    detail::check_axis(axis);
    const auto& u = f.factors();
    switch (axis) {
        case 0: return u[0] * khatri_rao(u[2], u[1]).transpose();
        case 1: return u[1] * khatri_rao(u[2], u[0]).transpose();
        default: return u[2] * khatri_rao(u[1], u[0]).transpose();
    }
}

/// Generic-uniqueness rank ceiling 2^(floor(log2 J) + floor(log2 K) - 2),
/// evaluated after sorting the dimensions so that I >= J >= K.
[[nodiscard]] inline std::uint64_t identifiability_bound(std::size_t i, std::size_t j, std::size_t k) {
    require(i >= 2 && j >= 2 && k >= 2, ErrorCode::invalid_argument,
            "identifiability bound needs every dimension >= 2");
    std::array<std::size_t, 3> d{i, j, k};
    std::sort(d.begin(), d.end(), std::greater<>());
    const auto log2_floor = [](std::size_t v) { return static_cast<int>(std::bit_width(v)) - 1; };
    const int exponent = log2_floor(d[1]) + log2_floor(d[2]) - 2;
    return std::uint64_t{1} << exponent;
}

[[nodiscard]] inline std::uint64_t identifiability_bound(const Dims& d) {
    return identifiability_bound(d[0], d[1], d[2]);
}

}  // namespace tfsisr
