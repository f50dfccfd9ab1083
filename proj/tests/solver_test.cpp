// SPDX-License-Identifier: MIT
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

using namespace tfsisr;
using tfsisr::testing::Rng;
using tfsisr::testing::rel_error;

TEST_CASE("regularized_pinv_apply", "[solver]") {
    Rng rng(10);
    const DenseMatrix b = rng.matrix(5, 3);
    SECTION("identity without loading returns b") {
        CHECK(regularized_pinv_apply(DenseMatrix::Identity(5, 5), b, 0.0) == b);
    }
    SECTION("identity with eps = 1 halves b") {
        CHECK(rel_error(regularized_pinv_apply(DenseMatrix::Identity(5, 5), b, 1.0), DenseMatrix(b / 2.0)) < 1e-15);
    }
    SECTION("SVD filter-factor oracle") {
        const DenseMatrix a = rng.matrix(10, 4), rhs = rng.matrix(10, 3);
        const DenseMatrix want = testing::oracle_pinv(a, 0.1) * rhs;
        CHECK((regularized_pinv_apply(a, rhs, 0.1) - want).cwiseAbs().maxCoeff() < 1e-9);
    }
    SECTION("eps = 0 with full column rank is least squares") {
        const DenseMatrix a = rng.matrix(9, 3), rhs = rng.matrix(9, 2);
        const DenseMatrix ls = a.colPivHouseholderQr().solve(rhs);
        CHECK(rel_error(regularized_pinv_apply(a, rhs, 0.0), ls) < 1e-10);
    }
    SECTION("rank-deficient without loading") {
        const DenseMatrix a = decimation_matrix(8, 2);
        try {
            (void)regularized_pinv_apply(a, rng.matrix(4, 1), 0.0);
            FAIL("expected a singular system error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::singular_system);
        }
    }
    SECTION("row mismatch") { CHECK_THROWS_AS(regularized_pinv_apply(rng.matrix(3, 2), rng.matrix(4, 2), 0.1), Error); }
}

TEST_CASE("als_update_factor", "[solver]") {
    Rng rng(11);
    SECTION("exact recovery with the other factors at truth") {
        const Dims d{6, 5, 7};
        const FactorSet truth = rng.factors(d, 1);
        const auto ops = make_axis_operators(d, GaussianPsf{}, 1);
        const Volume y = build_from_factors(truth);
        for (std::size_t a = 0; a < 3; ++a) {
            std::array<DenseMatrix, 3> u = truth.factors();
            u[a] = rng.matrix(u[a].rows(), 1);
            const DenseMatrix got = als_update_factor(matricize(y, a), FactorSet(u[0], u[1], u[2]), ops, a, 0.0);
            const DenseMatrix& want = truth.factor(a);
            const double scale = got.col(0).dot(want.col(0)) / want.col(0).squaredNorm();
            CHECK((got - scale * want).norm() / got.norm() < 1e-8);
            CHECK(std::abs(scale - 1.0) < 1e-8);
        }
    }
    SECTION("zero observation gives a zero update") {
        const Dims d{4, 4, 4};
        const auto ops = make_axis_operators(d, GaussianPsf{{1, 1, 1}}, 2);
        const FactorSet f = rng.factors(d, 3);
        for (std::size_t a = 0; a < 3; ++a) {
            const DenseMatrix y0 = DenseMatrix::Zero(2, 4);
            CHECK(als_update_factor(y0, f, ops, a, 0.5).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SECTION("vectorised Kronecker least-squares oracle") {
        const Dims d{8, 8, 8};
        const GaussianPsf psf{{1.3, 0.8, 2.1}};
        const auto ops = make_axis_operators(d, psf, 2);
        const FactorSet f = rng.factors(d, 2);
        const Volume y = rng.volume({4, 4, 4});
        const double eps = 0.3;
        constexpr std::array<std::array<std::size_t, 2>, 3> pairs{{{2, 1}, {2, 0}, {1, 0}}};
        for (std::size_t a = 0; a < 3; ++a) {
            const DenseMatrix kr = testing::oracle_khatri_rao(ops[pairs[a][0]].matrix * f.factor(pairs[a][0]),
                                                              ops[pairs[a][1]].matrix * f.factor(pairs[a][1]));
            const DenseMatrix op = testing::oracle_kronecker(testing::oracle_pinv(kr, eps), testing::oracle_pinv(ops[a].matrix, eps));
            const DenseMatrix yn = testing::oracle_unfold(y, a);
            const Eigen::VectorXd vy = Eigen::Map<const Eigen::VectorXd>(yn.data(), yn.size());
            const Eigen::VectorXd vu = op * vy;
            const DenseMatrix want = Eigen::Map<const DenseMatrix>(vu.data(), 8, 2);
            const DenseMatrix got = als_update_factor(yn, f, ops, a, eps);
            CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SECTION("shape mismatch") {
        const auto ops = make_axis_operators({4, 4, 4}, GaussianPsf{}, 2);
        CHECK_THROWS_AS(als_update_factor(DenseMatrix::Zero(2, 3), rng.factors({4, 4, 4}, 2), ops, 0, 0.1), Error);
    }
}

TEST_CASE("tf_sisr", "[solver]") {
    Rng rng(12);
    SECTION("exact low-rank recovery without blur or decimation") {
        Rng truth_rng(1005);
        const FactorSet truth = truth_rng.factors({16, 16, 16}, 5);
        const Volume y = build_from_factors(truth);
        SolverConfig cfg;
        cfg.rank = 5;
        cfg.iterations = 10;
        cfg.epsilon = 0.0;
        cfg.psf = GaussianPsf{};
        cfg.rate = 1;
        cfg.seed = 1;
        const SolverResult res = tf_sisr(y, cfg);
        CHECK(rel_error(res.volume, y) < 1e-3);
    }
    SECTION("unregularised sweeps never increase the objective") {
        for (std::uint64_t t = 0; t < 5; ++t) {
            const Volume y = build_from_factors(rng.factors({8, 7, 6}, 4));
            SolverConfig cfg;
            cfg.rank = 4;
            cfg.iterations = 30;
            cfg.epsilon = 0.0;
            cfg.psf = GaussianPsf{};
            cfg.rate = 1;
            cfg.seed = t;
            const auto& obj = tf_sisr(y, cfg).trace.objective;
            for (std::size_t n = 1; n < obj.size(); ++n) CHECK(obj[n] <= obj[n - 1] * (1.0 + 1e-9) + 1e-12);
        }
    }
    SECTION("output dims, spacing and trace") {
        const Volume y = rng.volume({4, 5, 6}, {0.08, 0.08, 0.16});
        SolverConfig cfg;
        cfg.rank = 4;
        cfg.iterations = 3;
        cfg.epsilon = 0.2;
        cfg.psf = GaussianPsf{{1, 1, 0.5}};
        cfg.rate = 2;
        const SolverResult res = tf_sisr(y, cfg);
        CHECK(res.volume.dims() == Dims{8, 10, 12});
        CHECK(res.volume.spacing()[2] == Catch::Approx(0.08));
        CHECK(res.factors.rank() == 4);
        CHECK(res.trace.sweeps() == 3);
        CHECK(res.trace.seconds.size() == 3);
    }
    SECTION("deterministic for a fixed seed") {
        const Volume y = rng.volume({4, 4, 4});
        SolverConfig cfg;
        cfg.rank = 6;
        cfg.iterations = 4;
        cfg.epsilon = 0.1;
        cfg.psf = GaussianPsf{{1.5, 1.0, 0.7}};
        const SolverResult a = tf_sisr(y, cfg), b = tf_sisr(y, cfg);
        for (std::size_t ax = 0; ax < 3; ++ax) CHECK(a.factors.factor(ax) == b.factors.factor(ax));
        CHECK(a.volume == b.volume);
        cfg.seed = 99;
        CHECK_FALSE(tf_sisr(y, cfg).volume == a.volume);
    }
    SECTION("rank above the identifiability bound warns but runs") {
        SolverConfig cfg;
        cfg.rank = 3;
        cfg.iterations = 1;
        cfg.epsilon = 0.1;
        cfg.psf = GaussianPsf{};
        cfg.rate = 1;
        const SolverResult res = tf_sisr(rng.volume({2, 2, 2}), cfg);
        REQUIRE(res.trace.warnings.size() == 1);
        CHECK(res.trace.warnings[0].find("identifiability") != std::string::npos);
    }
    SECTION("tolerance stops early") {
        const Volume y = build_from_factors(rng.factors({6, 6, 6}, 2));
        SolverConfig cfg;
        cfg.rank = 2;
        cfg.iterations = 200;
        cfg.epsilon = 1e-3;
        cfg.psf = GaussianPsf{};
        cfg.rate = 1;
        cfg.tolerance = 1e-3;
        CHECK(tf_sisr(y, cfg).trace.sweeps() < 200);
    }
    SECTION("objective falls on a phantom") {
        PhantomSpec spec;
        spec.dims = {32, 32, 32};
        const Phantom p = generate_phantom(spec);
        const Volume y = degrade(p.volume, DegradationConfig{GaussianPsf{{2, 2, 1}}, 2, 0.01, 5});
        SolverConfig cfg;
        cfg.rank = 20;
        cfg.iterations = 10;
        cfg.epsilon = 0.1;
        cfg.psf = GaussianPsf{{2, 2, 1}};
        const SolverResult res = tf_sisr(y, cfg);
        for (double v : res.trace.objective) CHECK(std::isfinite(v));
        CHECK(res.trace.objective.back() < res.trace.objective.front());
    }
    SECTION("indivisible or invalid configurations") {
        SolverConfig cfg;
        cfg.rank = 0;
        CHECK_THROWS_AS(tf_sisr(rng.volume({2, 2, 2}), cfg), Error);
        cfg.rank = 2;
        cfg.epsilon = -1.0;
        CHECK_THROWS_AS(tf_sisr(rng.volume({2, 2, 2}), cfg), Error);
    }
}

TEST_CASE("Box-Muller source is reproducible and standard normal", "[solver][random]") {
    GaussianSource a(5), b(5);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = a();
        CHECK(x == b());
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}
