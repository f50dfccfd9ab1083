// SPDX-License-Identifier: MIT
#pragma once

// Reconstruction quality metrics: PSNR, Dice overlap and per-axial-slice
// (axis 2) canal Feret diameter and area. Slice geometry uses pixel centres.

#include "tfsisr/error.hpp"
#include "tfsisr/mask.hpp"
#include "tfsisr/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace tfsisr {

/// 10 log10(R^2 / MSE) with R the dynamic range of ref; +infinity when MSE = 0.
[[nodiscard]] inline double psnr(const Volume& x, const Volume& ref) {
    require(x.dims() == ref.dims(), ErrorCode::dimension_mismatch,
            "PSNR operands differ: " + dims_string(x.dims()) + " vs " + dims_string(ref.dims()));
    const auto [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
    const double range = *hi - *lo;
    require(range > 0.0, ErrorCode::degenerate_input, "reference volume has zero dynamic range");
    double sse = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double d = x[n] - ref[n];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(range * range / (sse / static_cast<double>(x.size())));
}

struct SegmentationMode {
    enum class Kind { fixed, otsu };
    Kind kind = Kind::otsu;
    double threshold = 0.0;

    static SegmentationMode fixed(double t) { return {Kind::fixed, t}; }
    static SegmentationMode otsu() { return {Kind::otsu, 0.0}; }
};

inline constexpr std::size_t kOtsuBins = 256;

/// Otsu threshold over a 256-bin histogram spanning [min, max]. The returned
/// value is the upper edge of the last bin of the dark class.
[[nodiscard]] inline double otsu_threshold(const Volume& x) {
    const auto [lo_it, hi_it] = std::minmax_element(x.data().begin(), x.data().end());
    const double lo = *lo_it, hi = *hi_it;
    require(hi > lo, ErrorCode::degenerate_input, "Otsu threshold of a constant volume is undefined");
    const double width = (hi - lo) / static_cast<double>(kOtsuBins);
    std::array<double, kOtsuBins> hist{};
    for (double v : x.data()) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        hist[std::min(b, kOtsuBins - 1)] += 1.0;
    }
    const auto total = static_cast<double>(x.size());
    double total_moment = 0.0;
    for (std::size_t b = 0; b < kOtsuBins; ++b) total_moment += static_cast<double>(b) * hist[b];

    double w0 = 0.0, m0 = 0.0, best = -1.0;
    std::size_t best_bin = 0;
    for (std::size_t b = 0; b + 1 < kOtsuBins; ++b) {
        w0 += hist[b];
        m0 += static_cast<double>(b) * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = m0 / w0;
        const double mu1 = (total_moment - m0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_bin = b;
        }
    }
    return lo + width * static_cast<double>(best_bin + 1);
}

/// Voxels strictly below the threshold (the canal is darker than dentin).
[[nodiscard]] inline BinaryMask segment_threshold(const Volume& x, const SegmentationMode& mode) {
    const double t = mode.kind == SegmentationMode::Kind::otsu ? otsu_threshold(x) : mode.threshold;
    std::vector<std::uint8_t> values(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) values[n] = x[n] < t ? 1 : 0;
    return BinaryMask(x.dims(), std::move(values), x.spacing());
}

/// Drops, slice by slice along axis 2, every 4-connected component touching
/// the slice border. Below-threshold background around the tooth is removed
/// this way, leaving enclosed cavities.
[[nodiscard]] inline BinaryMask enclosed_regions(const BinaryMask& m) {
    const auto [ni, nj, nk] = m.dims();
    std::vector<std::uint8_t> values = m.values();
    std::vector<std::size_t> stack;
    for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t base = ni * nj * k;
        auto push = [&](std::size_t i, std::size_t j) {
            const std::size_t n = base + i + ni * j;
            if (values[n]) {
                values[n] = 0;
                stack.push_back(i + ni * j);
            }
        };
        for (std::size_t i = 0; i < ni; ++i) {
            push(i, 0);
            push(i, nj - 1);
        }
        for (std::size_t j = 0; j < nj; ++j) {
            push(0, j);
            push(ni - 1, j);
        }
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t i = p % ni, j = p / ni;
            if (i > 0) push(i - 1, j);
            if (i + 1 < ni) push(i + 1, j);
            if (j > 0) push(i, j - 1);
            if (j + 1 < nj) push(i, j + 1);
        }
    }
    return BinaryMask(m.dims(), std::move(values), m.spacing());
}

/// 2*|A and B| / (|A| + |B|); 1 when both masks are empty.
[[nodiscard]] inline double dice(const BinaryMask& a, const BinaryMask& b) {
    require(a.dims() == b.dims(), ErrorCode::dimension_mismatch, "Dice operands differ in dims");
    std::size_t both = 0, na = 0, nb = 0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        na += a[n];
        nb += b[n];
        both += a[n] && b[n];
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// 2D boolean grid, pixel (i, j) at i + rows * j.
struct MaskSlice {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> values;

    [[nodiscard]] bool operator()(std::size_t i, std::size_t j) const { return values[i + rows * j] != 0; }
};

[[nodiscard]] inline MaskSlice axial_slice(const BinaryMask& m, std::size_t k) {
    const auto [ni, nj, nk] = m.dims();
    require(k < nk, ErrorCode::invalid_argument, "slice index out of range");
    const auto first = m.values().begin() + static_cast<std::ptrdiff_t>(ni * nj * k);
    return MaskSlice{ni, nj, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(ni * nj))};
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

[[nodiscard]] inline std::vector<Point2> pixel_centres(const MaskSlice& s, std::array<double, 2> spacing) {
    std::vector<Point2> pts;
    for (std::size_t j = 0; j < s.cols; ++j)
        for (std::size_t i = 0; i < s.rows; ++i)
            if (s(i, j)) pts.push_back({static_cast<double>(i) * spacing[0], static_cast<double>(j) * spacing[1]});
    return pts;
}

/// Andrew's monotone chain; collinear points are dropped.
[[nodiscard]] inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    if (pts.size() < 3) return pts;
    const auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point2> hull(2 * pts.size());
    std::size_t h = 0;
    for (const auto& p : pts) {
        while (h >= 2 && cross(hull[h - 2], hull[h - 1], p) <= 0.0) --h;
        hull[h++] = p;
    }
    for (std::size_t n = pts.size() - 1, lower = h + 1; n-- > 0;) {
        const auto& p = pts[n];
        while (h >= lower && cross(hull[h - 2], hull[h - 1], p) <= 0.0) --h;
        hull[h++] = p;
    }
    hull.resize(h - 1);
    return hull;
}

/// Largest distance between two true pixel centres, in the spacing's units.
[[nodiscard]] inline double feret_diameter_slice(const MaskSlice& s, std::array<double, 2> spacing) {
    const auto hull = convex_hull(pixel_centres(s, spacing));
    double best = 0.0;
    for (std::size_t a = 0; a < hull.size(); ++a)
        for (std::size_t b = a + 1; b < hull.size(); ++b)
            best = std::max(best, std::hypot(hull[a].x - hull[b].x, hull[a].y - hull[b].y));
    return best;
}

[[nodiscard]] inline double canal_area_slice(const MaskSlice& s, std::array<double, 2> spacing) {
    const auto count = std::count(s.values.begin(), s.values.end(), std::uint8_t{1});
    return static_cast<double>(count) * spacing[0] * spacing[1];
}

struct SliceMeasure {
    std::size_t slice = 0;
    double feret_mm = 0.0;
    double area_mm2 = 0.0;
};

struct MetricsReport {
    double psnr_db = 0.0;
    double dice = 1.0;
    double mean_abs_feret_diff_um = 0.0;
    double mean_abs_area_diff_mm2 = 0.0;
    std::vector<SliceMeasure> recon_slices;
    std::vector<SliceMeasure> ref_slices;
};

/// Dice and slicewise statistics over slices where either mask is non-empty.
/// The psnr_db field is left for the caller.
[[nodiscard]] inline MetricsReport compare_masks(const BinaryMask& recon, const BinaryMask& ref) {
    require(recon.dims() == ref.dims(), ErrorCode::dimension_mismatch, "masks to compare differ in dims");
    MetricsReport report;
    report.dice = dice(recon, ref);
    const std::array<double, 2> spacing{ref.spacing()[0], ref.spacing()[1]};
    double feret_sum = 0.0, area_sum = 0.0;
    for (std::size_t k = 0; k < ref.dims()[2]; ++k) {
        const MaskSlice a = axial_slice(recon, k);
        const MaskSlice b = axial_slice(ref, k);
        const bool any_a = std::find(a.values.begin(), a.values.end(), 1) != a.values.end();
        const bool any_b = std::find(b.values.begin(), b.values.end(), 1) != b.values.end();
        if (!any_a && !any_b) continue;
        const SliceMeasure ma{k, feret_diameter_slice(a, spacing), canal_area_slice(a, spacing)};
        const SliceMeasure mb{k, feret_diameter_slice(b, spacing), canal_area_slice(b, spacing)};
        feret_sum += std::abs(ma.feret_mm - mb.feret_mm);
        area_sum += std::abs(ma.area_mm2 - mb.area_mm2);
        report.recon_slices.push_back(ma);
        report.ref_slices.push_back(mb);
    }
    if (!report.ref_slices.empty()) {
        const auto n = static_cast<double>(report.ref_slices.size());
        report.mean_abs_feret_diff_um = 1000.0 * feret_sum / n;
        report.mean_abs_area_diff_mm2 = area_sum / n;
    }
    return report;
}

/// Canal mask of a volume: threshold segmentation restricted to enclosed regions.
[[nodiscard]] inline BinaryMask segment_canal(const Volume& x, const SegmentationMode& mode) {
    return enclosed_regions(segment_threshold(x, mode));
}

[[nodiscard]] inline MetricsReport compare(const Volume& recon, const Volume& ref, const SegmentationMode& mode) {
    require(recon.dims() == ref.dims(), ErrorCode::dimension_mismatch,
            "reconstruction " + dims_string(recon.dims()) + " and reference " + dims_string(ref.dims()) + " differ");
    for (std::size_t a = 0; a < 3; ++a)
        require(std::abs(recon.spacing()[a] - ref.spacing()[a]) <= 1e-9 * ref.spacing()[a],
                ErrorCode::dimension_mismatch, "reconstruction and reference differ in spacing");
    MetricsReport report = compare_masks(segment_canal(recon, mode), segment_canal(ref, mode));
    report.psnr_db = psnr(recon, ref);
    return report;
}

}  // namespace tfsisr
