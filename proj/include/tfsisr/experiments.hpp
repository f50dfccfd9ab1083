// SPDX-License-Identifier: MIT
#pragma once

// Self-contained phantom experiment: generate, degrade, then sweep the sweep
// count and the rank of the solver, recording PSNR against the phantom and
// wall-clock time for each point.

#include "tfsisr/degradation.hpp"
#include "tfsisr/metrics.hpp"
#include "tfsisr/phantom.hpp"
#include "tfsisr/report_io.hpp"
#include "tfsisr/resample.hpp"
#include "tfsisr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace tfsisr {

struct ExperimentSetup {
    PhantomSpec phantom;
    GaussianPsf psf{{2.0, 2.0, 1.0}};
    std::size_t rate = 2;
    /// Noise standard deviation as a fraction of the phantom's dynamic range.
    double noise_fraction = 0.01;
    std::uint64_t noise_seed = 3;
    SolverConfig solver;
};

struct ExperimentData {
    Volume hr;
    Volume lr;
};

[[nodiscard]] inline ExperimentData prepare_experiment(const ExperimentSetup& s) {
    Phantom p = generate_phantom(s.phantom);
    const auto [lo, hi] = std::minmax_element(p.volume.data().begin(), p.volume.data().end());
    const DegradationConfig cfg{s.psf, s.rate, s.noise_fraction * (*hi - *lo), s.noise_seed};
    Volume lr = degrade(p.volume, cfg);
    return ExperimentData{std::move(p.volume), std::move(lr)};
}

struct SweepRow {
    std::string sweep;
    std::size_t iterations = 0;
    std::size_t rank = 0;
    double psnr_db = 0.0;
    double seconds = 0.0;
};

/// Solver at the given (iterations, rank), otherwise as configured in the setup.
[[nodiscard]] inline SweepRow run_point(const ExperimentSetup& s, const ExperimentData& data, std::string sweep,
                                        std::size_t iterations, std::size_t rank) {
    SolverConfig cfg = s.solver;
    cfg.psf = s.psf;
    cfg.rate = s.rate;
    cfg.iterations = iterations;
    cfg.rank = rank;
    cfg.tolerance.reset();
    const auto start = std::chrono::steady_clock::now();
    const SolverResult result = tf_sisr(data.lr, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return SweepRow{std::move(sweep), iterations, rank, psnr(result.volume, data.hr), seconds};
}

/// First row is the trilinear baseline (iterations = rank = 0), then the
/// iteration sweep at the setup's rank, then the rank sweep at its iteration count.
[[nodiscard]] inline std::vector<SweepRow> run_sweeps(const ExperimentSetup& s, const std::vector<std::size_t>& iteration_list,
                                                      const std::vector<std::size_t>& rank_list) {
    const ExperimentData data = prepare_experiment(s);
    std::vector<SweepRow> rows;
    const auto start = std::chrono::steady_clock::now();
    const Volume baseline = upsample_trilinear(data.lr, s.rate);
    rows.push_back({"trilinear", 0, 0, psnr(baseline, data.hr),
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    for (auto it : iteration_list) rows.push_back(run_point(s, data, "iterations", it, s.solver.rank));
    for (auto f : rank_list) rows.push_back(run_point(s, data, "rank", s.solver.iterations, f));
    return rows;
}

inline void write_sweep_table(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    out << "sweep\titerations\trank\tpsnr_db\tseconds\n";
    for (const auto& r : rows)
        out << r.sweep << '\t' << r.iterations << '\t' << r.rank << '\t' << detail::num(r.psnr_db) << '\t'
            << detail::num(r.seconds) << '\n';
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path.string());
}

}  // namespace tfsisr
