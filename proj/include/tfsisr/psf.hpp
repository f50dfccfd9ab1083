// SPDX-License-Identifier: MIT
#pragma once

// Off-line estimation of a separable Gaussian PSF from aligned high/low
// resolution volume pairs: per pair, divide the low-resolution spectrum by the
// high-resolution spectrum, taper with a separable Hann window and transform
// back; average the spatial PSFs and fit per-axis standard deviations.

#include "tfsisr/degradation.hpp"
#include "tfsisr/error.hpp"
#include "tfsisr/resample.hpp"
#include "tfsisr/volume.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace tfsisr {

using Complex = std::complex<double>;

/// Complex spectrum with bin (ki, kj, kk) at ki + I*kj + I*J*kk.
class SpectrumVolume {
public:
    SpectrumVolume(Dims dims, std::vector<Complex> bins) : dims_(dims), bins_(std::move(bins)) {
        require(bins_.size() == voxel_count(dims_), ErrorCode::size_mismatch, "spectrum size does not match dims");
        for (const auto& c : bins_)
            require(std::isfinite(c.real()) && std::isfinite(c.imag()), ErrorCode::non_finite,
                    "spectrum contains a non-finite bin");
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t size() const noexcept { return bins_.size(); }
    [[nodiscard]] const std::vector<Complex>& bins() const noexcept { return bins_; }
    [[nodiscard]] const Complex& operator[](std::size_t n) const noexcept { return bins_[n]; }
    [[nodiscard]] const Complex& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return bins_[i + dims_[0] * (j + dims_[1] * k)];
    }

private:
    Dims dims_;
    std::vector<Complex> bins_;
};

namespace detail {

/// In-place 1D transforms along every axis; inverse transforms include the 1/N factor.
inline void fft3_inplace(std::vector<Complex>& data, const Dims& d, bool inverse) {
    Eigen::FFT<double> fft;
    std::vector<Complex> fiber, out;
    const std::array<std::size_t, 3> stride{1, d[0], d[0] * d[1]};
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t n = d[axis];
        if (n == 1) continue;
        fiber.resize(n);
        const std::size_t a1 = axis == 0 ? 1 : 0;
        const std::size_t a2 = axis == 2 ? 1 : 2;
        for (std::size_t p = 0; p < d[a2]; ++p)
            for (std::size_t q = 0; q < d[a1]; ++q) {
                const std::size_t base = q * stride[a1] + p * stride[a2];
                for (std::size_t m = 0; m < n; ++m) fiber[m] = data[base + m * stride[axis]];
                if (inverse)
                    fft.inv(out, fiber);
                else
                    fft.fwd(out, fiber);
                for (std::size_t m = 0; m < n; ++m) data[base + m * stride[axis]] = out[m];
            }
    }
}

}  // namespace detail

[[nodiscard]] inline SpectrumVolume dft3(const Volume& v) {
    std::vector<Complex> data(v.data().begin(), v.data().end());
    detail::fft3_inplace(data, v.dims(), false);
    return SpectrumVolume(v.dims(), std::move(data));
}

/// Inverse transform; the imaginary residue is discarded.
[[nodiscard]] inline Volume idft3(const SpectrumVolume& s, Spacing spacing = {1.0, 1.0, 1.0}) {
    std::vector<Complex> data = s.bins();
    detail::fft3_inplace(data, s.dims(), true);
    std::vector<double> real(data.size());
    std::transform(data.begin(), data.end(), real.begin(), [](const Complex& c) { return c.real(); });
    return Volume(s.dims(), std::move(real), spacing);
}

/// Per-bin ratio dft3(lr_upsampled) / dft3(hr). Denominators with magnitude
/// below floor * max|dft3(hr)| are raised to that magnitude, keeping their
/// phase; when hr is identically zero the threshold is floor itself.
[[nodiscard]] inline SpectrumVolume estimate_psf_spectrum(const Volume& lr_upsampled, const Volume& hr, double floor) {
    require(lr_upsampled.dims() == hr.dims(), ErrorCode::dimension_mismatch,
            "PSF estimation needs equal dims, got " + dims_string(lr_upsampled.dims()) + " and " +
                dims_string(hr.dims()));
    require(std::isfinite(floor) && floor > 0.0, ErrorCode::invalid_argument, "spectral floor must be positive");
    const SpectrumVolume num = dft3(lr_upsampled);
    const SpectrumVolume den = dft3(hr);
    double peak = 0.0;
    for (const auto& c : den.bins()) peak = std::max(peak, std::abs(c));
    const double threshold = peak > 0.0 ? floor * peak : floor;
    std::vector<Complex> ratio(num.size());
    for (std::size_t n = 0; n < ratio.size(); ++n) {
        Complex d = den[n];
        const double mag = std::abs(d);
        if (mag < threshold) d = mag > 0.0 ? d * (threshold / mag) : Complex(threshold, 0.0);
        ratio[n] = num[n] / d;
    }
    return SpectrumVolume(num.dims(), std::move(ratio));
}

/// 0.5 (1 + cos(2 pi k / n)) for centred frequency index k.
[[nodiscard]] inline double hann_weight(std::size_t bin, std::size_t n) {
    const auto centred = bin <= n / 2 ? static_cast<double>(bin) : static_cast<double>(bin) - static_cast<double>(n);
    return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * centred / static_cast<double>(n)));
}

/// Multiplying by this taper convolves the spatial PSF with [1/4, 1/2, 1/4]
/// along each axis of length > 1, adding this much variance (voxels^2).
inline constexpr double kHannSpatialVariance = 0.5;

[[nodiscard]] inline SpectrumVolume hanning_suppress(const SpectrumVolume& s) {
    const auto& d = s.dims();
    std::array<std::vector<double>, 3> w;
    for (std::size_t a = 0; a < 3; ++a) {
        w[a].resize(d[a]);
        for (std::size_t b = 0; b < d[a]; ++b) w[a][b] = d[a] == 1 ? 1.0 : hann_weight(b, d[a]);
    }
    std::vector<Complex> out(s.size());
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i) {
                const std::size_t n = i + d[0] * (j + d[1] * k);
                out[n] = s[n] * (w[0][i] * w[1][j] * w[2][k]);
            }
    return SpectrumVolume(d, std::move(out));
}

[[nodiscard]] inline Volume average_psfs(const std::vector<Volume>& psfs) {
    require(!psfs.empty(), ErrorCode::invalid_argument, "cannot average an empty PSF list");
    std::vector<double> sum(psfs.front().size(), 0.0);
    for (const auto& p : psfs) {
        require(p.dims() == psfs.front().dims(), ErrorCode::dimension_mismatch, "PSFs to average differ in dims");
        for (std::size_t n = 0; n < sum.size(); ++n) sum[n] += p[n];
    }
    const auto count = static_cast<double>(psfs.size());
    for (double& v : sum) v /= count;
    return Volume(psfs.front().dims(), std::move(sum), psfs.front().spacing());
}

namespace detail {

inline double circular_offset(double x, double centre, double n) {
    double d = std::fmod(x - centre, n);
    if (d >= 0.5 * n) d -= n;
    if (d < -0.5 * n) d += n;
    return d;
}

/// Levenberg-Marquardt fit of a exp(-d^2 / 2 s^2) + b to a circular profile,
/// d the wrapped distance to the centre. Returns the fitted s, or the initial
/// width when the fit does not improve on it.
inline double refine_gaussian_width(const std::vector<double>& y, double centre, double width) {
    const auto nd = static_cast<double>(y.size());
    Eigen::Vector4d p(*std::max_element(y.begin(), y.end()), centre, std::log(width), 0.0);
    const auto residuals = [&](const Eigen::Vector4d& q, Eigen::Matrix<double, Eigen::Dynamic, 4>* jac) {
        const double s2 = std::exp(2.0 * q[2]);
        Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
        if (jac) jac->resize(r.size(), 4);
        for (Eigen::Index x = 0; x < r.size(); ++x) {
            const double d = circular_offset(static_cast<double>(x), q[1], nd);
            const double e = std::exp(-0.5 * d * d / s2);
            r[x] = y[static_cast<std::size_t>(x)] - (q[0] * e + q[3]);
            if (jac) jac->row(x) << e, q[0] * e * d / s2, q[0] * e * d * d / s2, 1.0;
        }
        return r;
    };
    Eigen::Matrix<double, Eigen::Dynamic, 4> jac;
    Eigen::VectorXd r = residuals(p, &jac);
    const double initial_cost = r.squaredNorm();
    double cost = initial_cost, lambda = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d g = jac.transpose() * r;
        Eigen::Matrix4d lhs = jtj;
        lhs.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
        const Eigen::Vector4d step = lhs.ldlt().solve(g);
        if (!step.allFinite()) break;
        const Eigen::Vector4d trial = p + step;
        const Eigen::VectorXd rt = residuals(trial, nullptr);
        const double trial_cost = rt.squaredNorm();
        if (std::isfinite(trial_cost) && trial_cost < cost) {
            const bool converged = cost - trial_cost <= 1e-15 * cost || step.cwiseAbs().maxCoeff() < 1e-12;
            p = trial;
            cost = trial_cost;
            r = residuals(p, &jac);
            lambda = std::max(lambda / 3.0, 1e-12);
            if (converged) break;
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
    }
    const double s = std::exp(p[2]);
    return std::isfinite(s) && cost < initial_cost && p[0] > 0.0 ? s : width;
}

}  // namespace detail

/// Per-axis widths of a separable Gaussian fitted to the PSF's marginal
/// profiles. Circular second moments of the zero-clipped profile give the
/// initial estimate; profiles at least kRefineVariance voxels^2 wide are then
/// refined by least squares with a constant offset, which keeps low-level
/// ripple far from the centre from inflating the width. excess_variance
/// (voxels^2) is subtracted from every axis to remove blur added by the
/// estimation itself.
[[nodiscard]] inline GaussianPsf fit_gaussian_psf(const Volume& psf, double excess_variance = 0.0) {
    constexpr double kRefineVariance = 0.5;
    const auto& d = psf.dims();
    std::array<std::vector<double>, 3> profile;
    for (std::size_t a = 0; a < 3; ++a) profile[a].assign(d[a], 0.0);
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i) {
                const double w = psf(i, j, k);
                profile[0][i] += w;
                profile[1][j] += w;
                profile[2][k] += w;
            }

    GaussianPsf fitted;
    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<double> clipped = profile[a];
        double mass = 0.0;
        for (double& w : clipped) {
            w = std::max(w, 0.0);
            mass += w;
        }
        require(mass > 0.0, ErrorCode::degenerate_input, "PSF has no positive mass to fit");
        const auto nd = static_cast<double>(d[a]);
        Complex phasor(0.0, 0.0);
        for (std::size_t x = 0; x < d[a]; ++x)
            phasor += clipped[x] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(x) / nd);
        const double centre = std::abs(phasor) > 0.0 ? std::arg(phasor) * nd / (2.0 * std::numbers::pi) : 0.0;
        double second = 0.0;
        for (std::size_t x = 0; x < d[a]; ++x) {
            const double off = detail::circular_offset(static_cast<double>(x), centre, nd);
            second += clipped[x] * off * off;
        }
        double variance = second / mass;
        if (variance >= kRefineVariance && d[a] >= 5) {
            const double s = detail::refine_gaussian_width(profile[a], centre, std::sqrt(variance));
            variance = s * s;
        }
        fitted.sigma[a] = std::sqrt(std::max(variance - excess_variance, 0.0));
    }
    return fitted;
}

struct PsfEstimationOptions {
    double floor = 1e-4;
    bool hanning = true;
};

struct PsfEstimate {
    Volume psf;
    GaussianPsf fitted;
};

/// Spatial PSF estimated from one aligned pair; lr is block-replicated onto
/// the hr grid first when its dims are an integer fraction of hr's.
[[nodiscard]] inline Volume estimate_pair_psf(const Volume& hr, const Volume& lr, const PsfEstimationOptions& opt = {}) {
    std::size_t rate = 1;
    if (lr.dims() != hr.dims()) {
        require(lr.dim(0) > 0 && hr.dim(0) % lr.dim(0) == 0, ErrorCode::dimension_mismatch,
                "low-resolution dims " + dims_string(lr.dims()) + " do not divide " + dims_string(hr.dims()));
        rate = hr.dim(0) / lr.dim(0);
        for (std::size_t a = 0; a < 3; ++a)
            require(lr.dim(a) * rate == hr.dim(a), ErrorCode::dimension_mismatch,
                    "low-resolution dims " + dims_string(lr.dims()) + " are not a uniform fraction of " +
                        dims_string(hr.dims()));
    }
    const Volume lr_up = rate == 1 ? lr : upsample_nearest(lr, rate);
    SpectrumVolume spectrum = estimate_psf_spectrum(lr_up, hr, opt.floor);
    if (opt.hanning) spectrum = hanning_suppress(spectrum);
    return idft3(spectrum, hr.spacing());
}

/// Full pipeline over (hr, lr) pairs: per-pair PSFs, spatial average, Gaussian fit.
[[nodiscard]] inline PsfEstimate estimate_psf(const std::vector<Volume>& hr, const std::vector<Volume>& lr,
                                              const PsfEstimationOptions& opt = {}) {
    require(!hr.empty() && hr.size() == lr.size(), ErrorCode::invalid_argument,
            "PSF estimation needs equally many high- and low-resolution volumes");
    std::vector<Volume> psfs;
    psfs.reserve(hr.size());
    for (std::size_t n = 0; n < hr.size(); ++n) psfs.push_back(estimate_pair_psf(hr[n], lr[n], opt));
    Volume averaged = average_psfs(psfs);
    const GaussianPsf fitted = fit_gaussian_psf(averaged, opt.hanning ? kHannSpatialVariance : 0.0);
    return PsfEstimate{std::move(averaged), fitted};
}

}  // namespace tfsisr
