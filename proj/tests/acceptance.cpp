// SPDX-License-Identifier: MIT
// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include "cli_commands.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

using namespace tfsisr;
using tfsisr::testing::Rng;
using tfsisr::testing::rel_error;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

int invoke_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    args.insert(args.begin(), "tfsisr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    return status;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

DenseMatrix col(std::initializer_list<double> v) {
    DenseMatrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index n = 0;
    for (double x : v) m(n++, 0) = x;
    return m;
}

Outcome algebra_oracles() {
    Rng rng(1001);
    const auto t0 = Clock::now();
    double worst = 0.0;
    const int instances = 60;
    for (int t = 0; t < instances; ++t) {
        const Dims d = rng.dims(1, 8);
        const std::size_t f = rng.index(1, 5);
        const FactorSet fs = rng.factors(d, f);
        const Volume x = build_from_factors(fs);
        worst = std::max(worst, rel_error(x, testing::oracle_build(fs)));
        for (std::size_t a = 0; a < 3; ++a) {
            const DenseMatrix p = rng.matrix(static_cast<Eigen::Index>(rng.index(1, 8)), static_cast<Eigen::Index>(d[a]));
            worst = std::max(worst, rel_error(mode_n_product(x, p, a), testing::oracle_mode_product(x, p, a)));
            worst = std::max(worst, rel_error(matricize(x, a), testing::oracle_unfold(x, a)));
            worst = std::max(worst, rel_error(factor_matricization(fs, a), testing::oracle_unfold(x, a)));
        }
        const DenseMatrix a = rng.matrix(static_cast<Eigen::Index>(rng.index(1, 8)), static_cast<Eigen::Index>(f));
        const DenseMatrix b = rng.matrix(static_cast<Eigen::Index>(rng.index(1, 8)), static_cast<Eigen::Index>(f));
        worst = std::max(worst, rel_error(khatri_rao(a, b), testing::oracle_khatri_rao(a, b)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-10 && secs < 10.0,
            std::to_string(instances) + " instances, max rel error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs)};
}

Outcome rank_one_fixtures() {
    struct Fixture {
        DenseMatrix u, v, w;
        std::array<double, 8> printed;
    };
    const std::vector<Fixture> fixtures{
        {col({1, 0}), col({0, 1}), col({1, 0}), {0, 1, 0, 0, 0, 0, 0, 0}},
        {col({1, 0}), col({0, 1}), col({1, 1}), {0, 1, 0, 1, 0, 0, 0, 0}},
        {col({5, 3}), col({1, 2}), col({7, 0}), {35, 70, 0, 0, 21, 42, 0, 0}},
    };
    int ok = 0;
    for (const auto& fx : fixtures) {
        DenseMatrix printed(2, 4);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 4; ++c) printed(r, c) = fx.printed[static_cast<std::size_t>(4 * r + c)];
        const FactorSet relabelled(fx.v, fx.w, fx.u);
        const Volume x = build_from_factors(relabelled);
        const bool exact = testing::max_abs_diff(x.data(), testing::oracle_build(relabelled).data()) == 0.0;
        ok += exact && matricize(x, 2) == printed && factor_matricization(relabelled, 2) == printed;
    }
    return {ok == 3, std::to_string(ok) + "/3 fixtures reconstruct exactly and match their printed unfoldings"};
}

Outcome identifiability() {
    const std::array<std::size_t, 3> d{260, 260, 300};
    std::array<std::size_t, 3> order{0, 1, 2};
    int perms = 0, good = 0;
    do {
        good += identifiability_bound(d[order[0]], d[order[1]], d[order[2]]) == 16384;
        ++perms;
    } while (std::next_permutation(order.begin(), order.end()));
    return {perms == 6 && good == 6, "bound 16384 for " + std::to_string(good) + "/" + std::to_string(perms) + " axis permutations"};
}

Outcome forward_model() {
    Rng rng(1004);
    double worst = 0.0;
    int cases = 0;
    std::vector<Dims> shapes;
    for (std::size_t i = 2; i <= 8; i += 2)
        for (std::size_t j = 2; j <= 8; j += 2)
            for (std::size_t k = 2; k <= 8; k += 2) shapes.push_back({i, j, k});
    for (int t = 0; t < 3; ++t) {
        const GaussianPsf psf{{rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)}};
        for (const std::size_t r : {1u, 2u})
            for (const Dims& d : shapes) {
                const Volume x = rng.volume(d);
                const auto ops = make_axis_operators(d, psf, r);
                const DenseMatrix big =
                    testing::oracle_kronecker(testing::oracle_kronecker(ops[2].matrix, ops[1].matrix), ops[0].matrix);
                const Eigen::Map<const Eigen::VectorXd> vx(x.data().data(), static_cast<Eigen::Index>(x.size()));
                const Eigen::VectorXd vy = big * vx;
                const Volume y = degrade(x, DegradationConfig{psf, r, 0.0, 0});
                worst = std::max(worst, rel_error(y.data(), std::span<const double>(vy.data(), static_cast<std::size_t>(vy.size()))));
                ++cases;
            }
    }
    return {worst < 1e-10, std::to_string(cases) + " cases, max rel error " + fmt("%.2e", worst)};
}

Outcome exact_recovery() {
    Rng rng(1005);
    const FactorSet truth = rng.factors({16, 16, 16}, 5);
    const Volume y = build_from_factors(truth);
    SolverConfig cfg;
    cfg.rank = 5;
    cfg.iterations = 10;
    cfg.epsilon = 0.0;
    cfg.psf = GaussianPsf{};
    cfg.rate = 1;
    cfg.seed = 1;
    const auto t0 = Clock::now();
    const SolverResult res = tf_sisr(y, cfg);
    const double secs = seconds_since(t0);
    const double err = rel_error(res.volume, y);
    return {err < 1e-3 && secs < 5.0, "rel error " + fmt("%.2e", err) + ", " + fmt("%.3f s", secs)};
}

ExperimentSetup phantom_setup() {
    ExperimentSetup s;
    s.phantom.dims = {64, 64, 64};
    s.psf = GaussianPsf{{2.0, 2.0, 1.0}};
    s.rate = 2;
    s.noise_fraction = 0.01;
    s.solver.rank = 50;
    s.solver.iterations = 10;
    s.solver.epsilon = 0.1;
    return s;
}

Outcome sr_gain(const ExperimentSetup& s, const ExperimentData& data) {
    const double tri = psnr(upsample_trilinear(data.lr, s.rate), data.hr);
    const SweepRow row = run_point(s, data, "gain", 10, 50);
    return {row.psnr_db >= tri + 1.0 && row.seconds < 120.0,
            "SR " + fmt("%.2f dB", row.psnr_db) + " vs trilinear " + fmt("%.2f dB", tri) + ", " + fmt("%.2f s", row.seconds)};
}

Outcome iteration_saturation(const ExperimentSetup& s) {
    const auto rows = run_sweeps(s, {1, 2, 5, 10, 20}, {});
    const auto at = [&](std::size_t it) {
        for (const auto& r : rows)
            if (r.sweep == "iterations" && r.iterations == it) return r.psnr_db;
        return std::nan("");
    };
    const double p1 = at(1), p10 = at(10), p20 = at(20);
    return {p10 > p1 && std::abs(p20 - p10) < 0.3,
            "PSNR(1) " + fmt("%.3f", p1) + ", PSNR(10) " + fmt("%.3f", p10) + ", PSNR(20) " + fmt("%.3f dB", p20)};
}

Outcome rank_saturation(const ExperimentSetup& s, const ExperimentData& data) {
    const std::vector<std::size_t> ranks{10, 50, 200, 500};
    std::vector<double> psnrs, secs;
    for (auto f : ranks) {
        double best = std::numeric_limits<double>::infinity(), p = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            const SweepRow row = run_point(s, data, "rank", 10, f);
            best = std::min(best, row.seconds);
            p = row.psnr_db;
        }
        psnrs.push_back(p);
        secs.push_back(best);
    }
    const bool monotone = std::is_sorted(secs.begin(), secs.end()) && std::adjacent_find(secs.begin(), secs.end()) == secs.end();
    std::string detail = "F=200 " + fmt("%.3f", psnrs[2]) + " dB, F=500 " + fmt("%.3f", psnrs[3]) + " dB; seconds";
    for (double t : secs) detail += " " + fmt("%.3f", t);
    return {std::abs(psnrs[2] - psnrs[3]) < 0.5 && monotone, detail};
}

Outcome psf_pipeline(const fs::path& dir) {
    const GaussianPsf truth{{5.8, 5.3, 0.9}};
    std::string hr_list, lr_list;
    for (std::uint64_t n = 0; n < 3; ++n) {
        PhantomSpec spec;
        spec.dims = {64, 64, 64};
        spec.seed = n;
        spec.base_radius_mm = 0.3 + 0.05 * static_cast<double>(n);
        spec.curvature_mm = 0.06 * static_cast<double>(n + 1);
        const Volume hr = generate_phantom(spec).volume;
        const std::string hp = (dir / ("hr" + std::to_string(n))).string(), lp = (dir / ("lr" + std::to_string(n))).string();
        write_volume(hr, hp);
        write_volume(degrade(hr, DegradationConfig{truth, 1, 0.0, 0}), lp);
        hr_list += (n ? "," : "") + hp;
        lr_list += (n ? "," : "") + lp;
    }
    std::string out;
    const int status = invoke_cli({"estimate-psf", "--hr", hr_list, "--lr", lr_list, "--out", (dir / "psf").string()}, &out);
    if (status != 0) return {false, "estimate-psf exited with " + std::to_string(status)};
    std::istringstream in(out);
    std::string tag;
    std::array<double, 3> got{};
    in >> tag >> got[0] >> got[1] >> got[2];
    bool ok = tag == "sigma";
    std::string detail = "sigma";
    for (std::size_t a = 0; a < 3; ++a) {
        const double relerr = std::abs(got[a] - truth.sigma[a]) / truth.sigma[a];
        ok = ok && relerr < 0.15;
        detail += " " + fmt("%.4f", got[a]) + " (" + fmt("%.2f%%", 100.0 * relerr) + ")";
    }
    return {ok, detail};
}

Outcome metrics_suite() {
    Rng rng(1010);
    const Dims d{8, 8, 2};
    std::vector<std::uint8_t> va(128, 0), vb(128, 0);
    for (std::size_t n = 0; n < 64; ++n) va[n] = 1;
    for (std::size_t n = 64; n < 128; ++n) vb[n] = 1;
    const BinaryMask a(d, va), b(d, vb);
    const bool dice_ok = dice(a, a) == 1.0 && dice(a, b) == 0.0;

    double worst_feret = 0.0;
    bool area_ok = true;
    for (int t = 0; t < 100; ++t) {
        MaskSlice s{16, 16, std::vector<std::uint8_t>(256)};
        const double p = rng.uniform(0.02, 0.6);
        for (auto& v : s.values) v = rng.uniform() < p ? 1 : 0;
        const std::array<double, 2> sp{rng.uniform(0.02, 0.1), rng.uniform(0.02, 0.1)};
        const auto pts = pixel_centres(s, sp);
        double brute = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                brute = std::max(brute, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
        worst_feret = std::max(worst_feret, std::abs(feret_diameter_slice(s, sp) - brute));
        const auto count = static_cast<double>(std::count(s.values.begin(), s.values.end(), 1));
        area_ok = area_ok && canal_area_slice(s, sp) == count * sp[0] * sp[1];
    }
    MaskSlice ten{5, 4, std::vector<std::uint8_t>(20, 0)};
    for (std::size_t n = 0; n < 10; ++n) ten.values[2 * n] = 1;
    area_ok = area_ok && std::abs(canal_area_slice(ten, {0.04, 0.04}) - 0.016) < 1e-15;

    std::vector<double> r(1000), x(1000);
    for (std::size_t n = 0; n < r.size(); ++n) {
        r[n] = n % 2 ? 1.0 : 0.0;
        x[n] = r[n] + (n % 4 < 2 ? 0.1 : -0.1);
    }
    const double p = psnr(Volume({10, 10, 10}, x), Volume({10, 10, 10}, r));
    const bool ok = dice_ok && worst_feret < 1e-12 && area_ok && std::abs(p - 20.0) <= 0.01;
    return {ok, std::string("dice ") + (dice_ok ? "ok" : "wrong") + ", Feret hull vs all-pairs " + fmt("%.1e", worst_feret) +
                    ", area " + (area_ok ? "exact" : "inexact") + ", PSNR " + fmt("%.4f dB", p)};
}

Outcome determinism(const fs::path& dir) {
    PhantomSpec spec;
    spec.dims = {32, 32, 32};
    const Volume hr = generate_phantom(spec).volume;
    const std::string y = (dir / "y").string(), s1 = (dir / "s1").string(), s2 = (dir / "s2").string();
    write_volume(degrade(hr, DegradationConfig{GaussianPsf{{2, 2, 1}}, 2, 0.01, 3}), y);
    const std::vector<std::string> common{"--in", y, "--r", "2", "--rank", "40", "--iters", "5", "--eps", "0.1", "--sigma", "2,2,1", "--seed", "9"};
    std::vector<std::string> a{"superres", "--out", s1}, b{"superres", "--out", s2};
    a.insert(a.end(), common.begin(), common.end());
    b.insert(b.end(), common.begin(), common.end());
    if (invoke_cli(a) != 0 || invoke_cli(b) != 0) return {false, "superres failed"};
    const std::string r1 = slurp(s1 + ".raw"), r2 = slurp(s2 + ".raw");
    return {!r1.empty() && r1 == r2, std::to_string(r1.size()) + " payload bytes, " + (r1 == r2 ? "identical" : "different")};
}

}  // namespace

int main() {
    const fs::path dir = testing::temp_dir("acceptance");
    const ExperimentSetup setup = phantom_setup();
    const ExperimentData data = prepare_experiment(setup);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"algebra oracle suite", algebra_oracles},
        {"rank-one fixtures", rank_one_fixtures},
        {"identifiability bound", identifiability},
        {"forward-model equivalence", forward_model},
        {"exact CPD recovery", exact_recovery},
        {"phantom SR gain over trilinear", [&] { return sr_gain(setup, data); }},
        {"iteration saturation", [&] { return iteration_saturation(setup); }},
        {"rank saturation", [&] { return rank_saturation(setup, data); }},
        {"PSF estimation pipeline", [&] { return psf_pipeline(dir); }},
        {"metrics suite", metrics_suite},
        {"superres determinism", [&] { return determinism(dir); }},
    };

    int failures = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Outcome o;
        try {
            o = criteria[n].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", n + 1, criteria[n].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
