// SPDX-License-Identifier: MIT
#pragma once

// Command-line front end. Each subcommand is a thin wrapper over one library
// call; data goes to files, diagnostics to the error stream.
//
//   phantom       --out P [--dims N|I,J,K] [--spacing S|sx,sy,sz] [--seed]
//                 [--radius MM] [--taper F] [--curvature MM] [--texture A] ...
//                 writes P.hdr/P.raw and P_mask.hdr/P_mask.raw
//   degrade       --in X --out Y [--r 2] [--sigma 5.8,5.3,0.9] [--noise 0] [--seed 0]
//   superres      --in Y --out S [--r 2] [--rank 500] [--iters 10] [--eps 1]
//                 [--sigma 5.8,5.3,0.9] [--seed 1] [--tol T] [--clamp]
//                 writes S.hdr/S.raw and S_trace.tsv
//   estimate-psf  --hr A,B,.. --lr a,b,.. --out P [--floor 1e-4] [--no-hanning]
//                 prints "sigma<TAB>s0<TAB>s1<TAB>s2", writes P.hdr/P.raw and P_sigma.txt
//   evaluate      --recon S --ref X --out R [--seg otsu|<threshold>]
//                 writes R.txt and R.json
//   reproduce     --out T.tsv [--dims 64] [--r 2] [--sigma ..] [--noise-fraction 0.01]
//                 [--rank 500] [--iters 10] [--iters-list 1,2,5,10,20]
//                 [--ranks 10,50,200,500] [--eps 1] [--seed 1] [--phantom-seed 0]

#include "tfsisr/tfsisr.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tfsisr::cli {

namespace detail {

inline std::filesystem::path suffixed(const std::filesystem::path& base, const std::string& suffix) {
    auto p = base;
    p += suffix;
    return p;
}

template <typename T>
std::array<T, 3> expand3(const std::vector<T>& v, const char* flag) {
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw Error(ErrorCode::invalid_argument, std::string(flag) + " takes one or three comma-separated values");
}

inline GaussianPsf psf_from(const std::vector<double>& sigma) { return GaussianPsf{expand3(sigma, "--sigma")}; }

inline SegmentationMode parse_seg(const std::string& s) {
    if (s == "otsu") return SegmentationMode::otsu();
    try {
        std::size_t used = 0;
        const double t = std::stod(s, &used);
        if (used == s.size()) return SegmentationMode::fixed(t);
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument, "--seg expects 'otsu' or a numeric threshold, got " + s);
}

}  // namespace detail

/// Parses and runs one command line; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Tensor-factorisation super-resolution of 3D volumes"};
    app.require_subcommand(1);

    // phantom
    PhantomSpec ph;
    std::vector<std::size_t> ph_dims{64};
    std::vector<double> ph_spacing{0.04};
    std::string ph_out;
    auto* cmd_phantom = app.add_subcommand("phantom", "Generate a synthetic tooth volume and its canal mask");
    cmd_phantom->add_option("--out", ph_out, "Output base name")->required();
    cmd_phantom->add_option("--dims", ph_dims, "Dimensions (N or I,J,K)")->delimiter(',');
    cmd_phantom->add_option("--spacing", ph_spacing, "Voxel spacing in mm (s or sx,sy,sz)")->delimiter(',');
    cmd_phantom->add_option("--seed", ph.seed, "Texture noise seed");
    cmd_phantom->add_option("--background", ph.background, "Background intensity");
    cmd_phantom->add_option("--canal", ph.canal, "Canal intensity");
    cmd_phantom->add_option("--dentin", ph.dentin, "Dentin intensity");
    cmd_phantom->add_option("--radius", ph.base_radius_mm, "Canal radius at the crown end (mm)");
    cmd_phantom->add_option("--taper", ph.taper, "Fractional canal radius loss towards the apex");
    cmd_phantom->add_option("--curvature", ph.curvature_mm, "Canal bend amplitude (mm)");
    cmd_phantom->add_option("--span", ph.canal_span, "Canal length as a fraction of the body's axis-2 extent");
    cmd_phantom->add_option("--texture", ph.texture, "Uniform texture noise half-width");

    // degrade
    std::string dg_in, dg_out;
    std::vector<double> dg_sigma{5.8, 5.3, 0.9};
    DegradationConfig dg;
    auto* cmd_degrade = app.add_subcommand("degrade", "Blur, decimate and add noise");
    cmd_degrade->add_option("--in", dg_in, "Input volume")->required();
    cmd_degrade->add_option("--out", dg_out, "Output base name")->required();
    cmd_degrade->add_option("--r", dg.rate, "Decimation rate");
    cmd_degrade->add_option("--sigma", dg_sigma, "Gaussian PSF sigmas in HR voxels")->delimiter(',');
    cmd_degrade->add_option("--noise", dg.noise_sigma, "Noise standard deviation");
    cmd_degrade->add_option("--seed", dg.seed, "Noise seed");

    // superres
    std::string sr_in, sr_out;
    std::vector<double> sr_sigma{5.8, 5.3, 0.9};
    SolverConfig sr;
    std::optional<double> sr_tol;
    bool sr_clamp = false;
    auto* cmd_superres = app.add_subcommand("superres", "Recover the high-resolution volume");
    cmd_superres->add_option("--in", sr_in, "Low-resolution volume")->required();
    cmd_superres->add_option("--out", sr_out, "Output base name")->required();
    cmd_superres->add_option("--r", sr.rate, "Decimation rate");
    cmd_superres->add_option("--rank", sr.rank, "CP rank F");
    cmd_superres->add_option("--iters", sr.iterations, "Number of sweeps");
    cmd_superres->add_option("--eps", sr.epsilon, "Diagonal loading epsilon");
    cmd_superres->add_option("--sigma", sr_sigma, "Gaussian PSF sigmas in HR voxels")->delimiter(',');
    cmd_superres->add_option("--seed", sr.seed, "Factor initialisation seed");
    cmd_superres->add_option("--tol", sr_tol, "Relative objective change for early stopping");
    cmd_superres->add_flag("--clamp", sr_clamp, "Clamp negative output voxels to zero");

    // estimate-psf
    std::vector<std::string> ep_hr, ep_lr;
    std::string ep_out;
    PsfEstimationOptions ep;
    bool ep_no_hanning = false;
    auto* cmd_psf = app.add_subcommand("estimate-psf", "Estimate a separable Gaussian PSF from volume pairs");
    cmd_psf->add_option("--hr", ep_hr, "High-resolution volumes")->required()->delimiter(',');
    cmd_psf->add_option("--lr", ep_lr, "Low-resolution volumes, paired in order")->required()->delimiter(',');
    cmd_psf->add_option("--out", ep_out, "Output base name for the averaged PSF")->required();
    cmd_psf->add_option("--floor", ep.floor, "Relative denominator floor");
    cmd_psf->add_flag("--no-hanning", ep_no_hanning, "Skip the Hann taper");

    // evaluate
    std::string ev_recon, ev_ref, ev_out, ev_seg = "otsu";
    auto* cmd_eval = app.add_subcommand("evaluate", "Compare a reconstruction against a reference");
    cmd_eval->add_option("--recon", ev_recon, "Reconstructed volume")->required();
    cmd_eval->add_option("--ref", ev_ref, "Reference volume")->required();
    cmd_eval->add_option("--out", ev_out, "Report base name")->required();
    cmd_eval->add_option("--seg", ev_seg, "Segmentation: otsu or a fixed threshold");

    // reproduce
    ExperimentSetup rp;
    rp.psf = GaussianPsf{{5.8, 5.3, 0.9}};
    std::vector<std::size_t> rp_dims{64};
    std::vector<double> rp_sigma{5.8, 5.3, 0.9};
    std::vector<std::size_t> rp_iters{1, 2, 5, 10, 20};
    std::vector<std::size_t> rp_ranks{10, 50, 200, 500};
    std::string rp_out;
    auto* cmd_repro = app.add_subcommand("reproduce", "Sweep sweeps and ranks on a phantom");
    cmd_repro->add_option("--out", rp_out, "Output table (tab-separated)")->required();
    cmd_repro->add_option("--dims", rp_dims, "Phantom dimensions (N or I,J,K)")->delimiter(',');
    cmd_repro->add_option("--r", rp.rate, "Decimation rate");
    cmd_repro->add_option("--sigma", rp_sigma, "Gaussian PSF sigmas in HR voxels")->delimiter(',');
    cmd_repro->add_option("--noise-fraction", rp.noise_fraction, "Noise sigma as a fraction of dynamic range");
    cmd_repro->add_option("--rank", rp.solver.rank, "Rank for the iteration sweep");
    cmd_repro->add_option("--iters", rp.solver.iterations, "Sweeps for the rank sweep");
    cmd_repro->add_option("--iters-list", rp_iters, "Sweep counts to test")->delimiter(',');
    cmd_repro->add_option("--ranks", rp_ranks, "Ranks to test")->delimiter(',');
    cmd_repro->add_option("--eps", rp.solver.epsilon, "Diagonal loading epsilon");
    cmd_repro->add_option("--seed", rp.solver.seed, "Factor initialisation seed");
    cmd_repro->add_option("--phantom-seed", rp.phantom.seed, "Phantom texture seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_phantom->parsed()) {
            ph.dims = detail::expand3(ph_dims, "--dims");
            ph.spacing = detail::expand3(ph_spacing, "--spacing");
            const Phantom p = generate_phantom(ph);
            write_volume(p.volume, ph_out);
            write_volume(p.canal.to_volume(), detail::suffixed(ph_out, "_mask"));
        } else if (cmd_degrade->parsed()) {
            dg.psf = detail::psf_from(dg_sigma);
            write_volume(degrade(read_volume(dg_in), dg), dg_out);
        } else if (cmd_superres->parsed()) {
            sr.psf = detail::psf_from(sr_sigma);
            sr.tolerance = sr_tol;
            const SolverResult result = tf_sisr(read_volume(sr_in), sr);
            for (const auto& w : result.trace.warnings) err << "warning: " << w << '\n';
            write_volume(sr_clamp ? clamp_below(result.volume, 0.0) : result.volume, sr_out);
            write_trace(result.trace, detail::suffixed(sr_out, "_trace.tsv"));
        } else if (cmd_psf->parsed()) {
            if (ep_hr.size() != ep_lr.size())
                throw Error(ErrorCode::invalid_argument, "--hr and --lr must list the same number of volumes");
            ep.hanning = !ep_no_hanning;
            std::vector<Volume> hr, lr;
            for (const auto& p : ep_hr) hr.push_back(read_volume(p));
            for (const auto& p : ep_lr) lr.push_back(read_volume(p));
            const PsfEstimate est = estimate_psf(hr, lr, ep);
            write_volume(est.psf, ep_out);
            auto sig = tfsisr::detail::open_for_write(detail::suffixed(ep_out, "_sigma.txt"));
            const auto& s = est.fitted.sigma;
            const std::string line = "sigma\t" + tfsisr::detail::num(s[0]) + '\t' + tfsisr::detail::num(s[1]) + '\t' +
                                     tfsisr::detail::num(s[2]) + '\n';
            sig << line;
            out << line;
        } else if (cmd_eval->parsed()) {
            const MetricsReport report = compare(read_volume(ev_recon), read_volume(ev_ref), detail::parse_seg(ev_seg));
            write_report(report, ev_out);
        } else if (cmd_repro->parsed()) {
            rp.phantom.dims = detail::expand3(rp_dims, "--dims");
            rp.psf = detail::psf_from(rp_sigma);
            rp.solver.psf = rp.psf;
            rp.solver.rate = rp.rate;
            write_sweep_table(run_sweeps(rp, rp_iters, rp_ranks), rp_out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tfsisr::cli
