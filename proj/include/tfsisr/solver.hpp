// SPDX-License-Identifier: MIT
#pragma once

// Super-resolution by alternating least squares on the CP factors of the
// high-resolution volume. Each sweep updates U0, U1, U2 in turn with
//
//   U_n = (D_n H_n)^+  Y_(n)  (KR_n)^{+T}
//
// where KR_n is the Khatri-Rao product of the other two degraded factors and
// A^+ = (A^T A + eps^2 I)^{-1} A^T is the diagonally loaded pseudo-inverse.

#include "tfsisr/degradation.hpp"
#include "tfsisr/error.hpp"
#include "tfsisr/random.hpp"
#include "tfsisr/tensor_algebra.hpp"
#include "tfsisr/volume.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tfsisr {

struct SolverConfig {
    std::size_t rank = 500;
    std::size_t iterations = 10;
    double epsilon = 1.0;
    GaussianPsf psf{{5.8, 5.3, 0.9}};
    std::size_t rate = 2;
    std::uint64_t seed = 1;
    /// Stop early once the relative change of the objective drops below this.
    std::optional<double> tolerance;

    void validate() const {
        require(rank >= 1, ErrorCode::invalid_argument, "rank must be >= 1");
        require(iterations >= 1, ErrorCode::invalid_argument, "iteration count must be >= 1");
        require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorCode::invalid_argument,
                "epsilon must be finite and non-negative");
        require(rate >= 1, ErrorCode::invalid_argument, "decimation rate must be >= 1");
        psf.validate();
        if (tolerance)
            require(std::isfinite(*tolerance) && *tolerance >= 0.0, ErrorCode::invalid_argument,
                    "tolerance must be finite and non-negative");
    }
};

struct SolverTrace {
    /// Frobenius norm of Y - [[D0H0 U0, D1H1 U1, D2H2 U2]] after each sweep.
    std::vector<double> objective;
    std::vector<double> seconds;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t sweeps() const noexcept { return objective.size(); }
};

struct SolverResult {
    Volume volume;
    FactorSet factors;
    SolverTrace trace;
};

/// (A^T A + eps^2 I)^{-1} A^T B. With eps = 0, A must have full column rank.
[[nodiscard]] inline DenseMatrix regularized_pinv_apply(const DenseMatrix& a, const DenseMatrix& b, double epsilon) {
    require(a.rows() == b.rows(), ErrorCode::dimension_mismatch,
            "pseudo-inverse operands disagree on row count: " + std::to_string(a.rows()) + " vs " +
                std::to_string(b.rows()));
    require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorCode::invalid_argument, "epsilon must be non-negative");
    if (epsilon == 0.0) {
        const Eigen::ColPivHouseholderQR<DenseMatrix> qr(a);
        require(qr.rank() == a.cols(), ErrorCode::singular_system,
                "rank-deficient matrix with no diagonal loading");
    }
    DenseMatrix normal = a.transpose() * a;
    normal.diagonal().array() += epsilon * epsilon;
    const Eigen::LDLT<DenseMatrix> ldlt(normal);
    require(ldlt.info() == Eigen::Success, ErrorCode::singular_system, "normal equations could not be factored");
    return ldlt.solve(a.transpose() * b);
}

[[nodiscard]] inline DenseMatrix regularized_pinv(const DenseMatrix& a, double epsilon) {
    return regularized_pinv_apply(a, DenseMatrix::Identity(a.rows(), a.rows()), epsilon);
}

namespace detail {

/// Indices of the two factors entering the Khatri-Rao product for an update,
/// outer factor first.
constexpr std::array<std::array<std::size_t, 2>, 3> kKhatriRaoPair{{{2, 1}, {2, 0}, {1, 0}}};

}  // namespace detail

/// One factor update given the precomputed left pseudo-inverse of D_n H_n.
[[nodiscard]] inline DenseMatrix als_update_factor(const DenseMatrix& y_unfolded, const FactorSet& factors,
                                                   const AxisOperators& ops, const DenseMatrix& left_pinv,
                                                   std::size_t axis, double epsilon) {
    detail::check_axis(axis);
    const auto [outer, inner] = detail::kKhatriRaoPair[axis];
    const DenseMatrix deg_outer = ops[outer].matrix * factors.factor(outer);
    const DenseMatrix deg_inner = ops[inner].matrix * factors.factor(inner);
    require(y_unfolded.rows() == ops[axis].matrix.rows() &&
                y_unfolded.cols() == deg_outer.rows() * deg_inner.rows(),
            ErrorCode::dimension_mismatch, "unfolded observation does not match factor shapes");
    require(left_pinv.rows() == factors.factor(axis).rows() && left_pinv.cols() == y_unfolded.rows(),
            ErrorCode::dimension_mismatch, "left pseudo-inverse has the wrong shape");

    // Y_(n) KR (KR^T KR + eps^2 I)^{-1}, with the Gram matrix of a Khatri-Rao
    // product taken as the Hadamard product of the factor Gram matrices.
    const DenseMatrix kr = khatri_rao(deg_outer, deg_inner);
    const DenseMatrix mttkrp = y_unfolded * kr;
    DenseMatrix gram = (deg_outer.transpose() * deg_outer).cwiseProduct(deg_inner.transpose() * deg_inner);
    gram.diagonal().array() += epsilon * epsilon;
    const Eigen::LDLT<DenseMatrix> ldlt(gram);
    require(ldlt.info() == Eigen::Success, ErrorCode::singular_system, "Khatri-Rao normal equations are singular");
    const DenseMatrix right = ldlt.solve(mttkrp.transpose()).transpose();
    return left_pinv * right;
}

[[nodiscard]] inline DenseMatrix als_update_factor(const DenseMatrix& y_unfolded, const FactorSet& factors,
                                                   const AxisOperators& ops, std::size_t axis, double epsilon) {
    detail::check_axis(axis);
    return als_update_factor(y_unfolded, factors, ops, regularized_pinv(ops[axis].matrix, epsilon), axis, epsilon);
}

/// Frobenius norm of the residual between y and the degraded reconstruction.
[[nodiscard]] inline double data_fit(const Volume& y, const FactorSet& factors, const AxisOperators& ops) {
    const FactorSet degraded(ops[0].matrix * factors.factor(0), ops[1].matrix * factors.factor(1),
                             ops[2].matrix * factors.factor(2));
    const Volume fit = build_from_factors(degraded);
    double sum = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        const double d = y[n] - fit[n];
        sum += d * d;
    }
    return std::sqrt(sum);
}

[[nodiscard]] inline FactorSet random_factors(const Dims& dims, std::size_t rank, std::uint64_t seed) {
    GaussianSource gauss(seed);
    std::array<DenseMatrix, 3> u;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        u[axis].resize(static_cast<Eigen::Index>(dims[axis]), static_cast<Eigen::Index>(rank));
        for (Eigen::Index n = 0; n < u[axis].size(); ++n) u[axis].data()[n] = gauss();
    }
    return FactorSet(std::move(u[0]), std::move(u[1]), std::move(u[2]));
}

/// Recovers the high-resolution volume from the observation y.
[[nodiscard]] inline SolverResult tf_sisr(const Volume& y, const SolverConfig& cfg) {
    cfg.validate();
    Dims hr_dims{};
    Spacing hr_spacing{};
    for (std::size_t a = 0; a < 3; ++a) {
        hr_dims[a] = y.dim(a) * cfg.rate;
        hr_spacing[a] = y.spacing()[a] / static_cast<double>(cfg.rate);
    }

    SolverTrace trace;
    if (hr_dims[0] >= 2 && hr_dims[1] >= 2 && hr_dims[2] >= 2) {
        const auto bound = identifiability_bound(hr_dims);
        if (cfg.rank > bound)
            trace.warnings.push_back("rank " + std::to_string(cfg.rank) + " exceeds the identifiability bound " +
                                     std::to_string(bound) + " for " + dims_string(hr_dims));
    }

    const AxisOperators ops = make_axis_operators(hr_dims, cfg.psf, cfg.rate);
    std::array<DenseMatrix, 3> left_pinv;
    std::array<DenseMatrix, 3> unfolded;
    for (std::size_t a = 0; a < 3; ++a) {
        left_pinv[a] = regularized_pinv(ops[a].matrix, cfg.epsilon);
        unfolded[a] = matricize(y, a);
    }

    FactorSet factors = random_factors(hr_dims, cfg.rank, cfg.seed);
    std::array<DenseMatrix, 3> u = factors.factors();
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t a = 0; a < 3; ++a) {
            u[a] = als_update_factor(unfolded[a], FactorSet(u[0], u[1], u[2]), ops, left_pinv[a], a, cfg.epsilon);
            require(u[a].allFinite(), ErrorCode::non_finite,
                    "factor " + std::to_string(a) + " became non-finite in sweep " + std::to_string(it + 1));
        }
        factors = FactorSet(u[0], u[1], u[2]);
        const double objective = data_fit(y, factors, ops);
        require(std::isfinite(objective), ErrorCode::non_finite,
                "objective became non-finite in sweep " + std::to_string(it + 1));
        trace.objective.push_back(objective);
        trace.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

        if (cfg.tolerance && trace.objective.size() >= 2) {
            const double prev = trace.objective[trace.objective.size() - 2];
            if (prev > 0.0 && std::abs(prev - objective) / prev < *cfg.tolerance) break;
        }
    }
    Volume volume = build_from_factors(factors, hr_spacing);
    return SolverResult{std::move(volume), std::move(factors), std::move(trace)};
}

}  // namespace tfsisr
