#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "temu/emulator.hpp"
#include "temu/error.hpp"
#include "temu/experiments.hpp"
#include "temu/glacier.hpp"
#include "temu/rng.hpp"

using temu::ModeSpec;
using temu::Query;
using temu::RngSeed;
using temu::SurrogateKind;
using temu::Tensor;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    Tensor t(dims);
    temu::Rng rng(RngSeed{seed});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_double() - 0.5;
    return t;
}

Eigen::MatrixXd coords_1d(std::size_t n, double lo, double hi, std::uint64_t seed) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 1);
    temu::Rng rng(RngSeed{seed});
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = rng.uniform(lo, hi);
    return m;
}

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

// Kernel matrix the GP will end up using for 1-D inputs: standardized
// coordinates, median (lower) pairwise distance lengthscale. Transcribed
// independently of the GP implementation.
Eigen::MatrixXd gp_kernel_1d(const Eigen::MatrixXd& inputs) {
    const Eigen::VectorXd x = inputs.col(0);
    const double mean = x.mean();
    const double sd =
        std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
    std::vector<double> d;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j)
            d.push_back(std::abs(x(i) - x(j)) / sd);
    std::sort(d.begin(), d.end());
    const double l = d[(d.size() - 1) / 2];
    Eigen::MatrixXd k(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double dist = (x(i) - x(j)) / sd;
            k(i, j) = std::exp(-dist * dist / (2.0 * l * l));
        }
    return k;
}

// Zero-mean vector in the kernel's hypothesis space: the GP interpolates such
// targets to nugget scale (residual norm <= nugget_rel * ||w||_2), which is
// what the training-point reproduction checks below rely on.
Eigen::VectorXd in_span_column(const Eigen::MatrixXd& kernel, Eigen::VectorXd w) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(kernel.rows());
    w.array() -= (kernel * w).mean() / (kernel * ones).mean();
    return kernel * w;
}

}  // namespace

TEST_SUITE_BEGIN("emulator");

TEST_CASE("all-grid emulator reproduces the rank-limited reconstruction") {
    const Tensor t = random_tensor({4, 5, 6}, 80);
    const auto emu = temu::build_emulator(
        t, {3, 4, 5}, {ModeSpec::grid(), ModeSpec::grid(), ModeSpec::grid()}, RngSeed{81});
    const Tensor pred = temu::emulate(emu, {});
    const Tensor rec = temu::reconstruct(emu.factors);
    REQUIRE(pred.dims() == rec.dims());
    for (std::size_t i = 0; i < pred.size(); ++i)
        CHECK(pred[i] == doctest::Approx(rec[i]).epsilon(1e-12));
}

TEST_CASE("2-mode tensor emulator agrees with the SVD emulator baseline") {
    // Identical rank, kind, and seed; the SVD emulator is built through an
    // entirely different numerical route (BDCSVD vs Gram eigendecomposition).
    temu::Rng rng(RngSeed{82});
    for (const auto kind : {SurrogateKind::gp, SurrogateKind::rf}) {
        const std::size_t m = 7 + rng.below(4);
        const std::size_t n = 6 + rng.below(4);
        const std::size_t r = n - 2;
        const Tensor t = random_tensor({m, n}, rng.next_u64());
        const Eigen::MatrixXd inputs = coords_1d(n, 0.0, 1.0, rng.next_u64());

        const auto tensor_emu = temu::build_emulator(
            t, {m, r}, {ModeSpec::grid(), ModeSpec::learn(kind, inputs)}, RngSeed{83});
        const auto svd_emu =
            temu::build_svd_emulator(t.as_matrix(), r, kind, inputs, {}, RngSeed{83}.child(1));

        for (int trial = 0; trial < 10; ++trial) {
            const double theta = rng.uniform(0.0, 1.0);
            const Tensor a = temu::emulate(tensor_emu, {vec1(theta)});
            const Eigen::VectorXd b = temu::svd_emulate(svd_emu, vec1(theta));
            REQUIRE(a.size() == static_cast<std::size_t>(b.size()));
            for (Eigen::Index i = 0; i < b.size(); ++i)
                CHECK(a[static_cast<std::size_t>(i)] ==
                      doctest::Approx(b(i)).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("svd emulator reproduces held-in columns of a smooth-structure matrix") {
    // Columns vary smoothly in theta (in the kernel's hypothesis space), as
    // with real simulator output; r = N with an interpolating GP then
    // recovers column j of C at theta_j.
    const std::size_t m = 14, n = 10;
    const Eigen::MatrixXd inputs = coords_1d(n, 0.0, 1.0, 85);
    const Eigen::MatrixXd kernel = gp_kernel_1d(inputs);
    temu::Rng rng(RngSeed{84});
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, n);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd u(m), w(n);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(-1.0, 1.0);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-0.5, 0.5);
        c += u * in_span_column(kernel, w).transpose();
    }
    const auto emu = temu::build_svd_emulator(c, n, SurrogateKind::gp, inputs, {}, RngSeed{86});
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::VectorXd pred = temu::svd_emulate(emu, inputs.row(static_cast<Eigen::Index>(j)).transpose());
        const double rel = (pred - c.col(static_cast<Eigen::Index>(j))).norm() /
                           c.col(static_cast<Eigen::Index>(j)).norm();
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("rank-1 matrix with GP surrogate reconstructs held-in columns") {
    const std::size_t n = 9;
    const Eigen::MatrixXd inputs = coords_1d(n, 0.0, 1.0, 88);
    const Eigen::MatrixXd kernel = gp_kernel_1d(inputs);
    temu::Rng rng(RngSeed{87});
    Eigen::VectorXd u(6), w(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < 6; ++i) u(i) = rng.uniform(0.5, 1.5);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-0.2, 0.2);
    const Eigen::VectorXd v = in_span_column(kernel, w);
    const Eigen::MatrixXd c = u * v.transpose();
    const auto emu = temu::build_svd_emulator(c, 1, SurrogateKind::gp, inputs, {}, RngSeed{89});
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
        const Eigen::VectorXd pred = temu::svd_emulate(emu, inputs.row(j).transpose());
        CHECK((pred - c.col(j)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("emulate at a training design point matches the truncated reconstruction") {
    // Order-2 tensor whose mode-1 fibers are smooth in the mode coordinate.
    const std::size_t m = 5, n = 10;
    const Eigen::MatrixXd inputs = coords_1d(n, 0.0, 2.0, 91);
    const Eigen::MatrixXd kernel = gp_kernel_1d(inputs);
    temu::Rng rng(RngSeed{90});
    Eigen::MatrixXd cmat = Eigen::MatrixXd::Zero(m, n);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd u(m), w(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(-1.0, 1.0);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-0.5, 0.5);
        cmat += u * in_span_column(kernel, w).transpose();
    }
    const Tensor t = Tensor::from_matrix(cmat);
    const auto emu = temu::build_emulator(
        t, {m, 2}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::gp, inputs)}, RngSeed{92});
    const Tensor rec = temu::reconstruct(emu.factors);
    const double scale = cmat.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
        const Tensor pred = temu::emulate(emu, {inputs.row(j).transpose()});
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<std::size_t> idx{i, static_cast<std::size_t>(j)};
            CHECK(std::abs(pred[i] - rec.at(idx)) <= 1e-4 * scale);
        }
    }
}

TEST_CASE("query validation") {
    const Tensor t = random_tensor({4, 6}, 93);
    const Eigen::MatrixXd inputs = coords_1d(6, 0.0, 1.0, 94);
    const auto emu = temu::build_emulator(
        t, {4, 4}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::rf, inputs)}, RngSeed{95});
    CHECK_THROWS_AS((void)temu::emulate(emu, {}), temu::ArgumentError);
    CHECK_THROWS_AS((void)temu::emulate(emu, {vec1(0.1), vec1(0.2)}), temu::ArgumentError);
    CHECK_THROWS_AS((void)temu::emulate(emu, {Eigen::VectorXd::Constant(2, 0.1)}),
                    temu::ArgumentError);
    CHECK_THROWS_AS((void)temu::emulate_scalar(emu, {vec1(0.1)}), temu::ArgumentError);
}

TEST_CASE("non-finite surrogate output raises a numerical error naming the mode") {
    const Tensor t = random_tensor({4, 6}, 96);
    const Eigen::MatrixXd inputs = coords_1d(6, 0.0, 1.0, 97);
    auto emu = temu::build_emulator(
        t, {4, 4}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::gp, inputs)}, RngSeed{98});
    // Corrupt one surrogate so it predicts NaN.
    temu::GpModel bad = emu.surrogates[1][0].as<temu::GpModel>();
    bad.alpha(0) = std::nan("");
    emu.surrogates[1][0] = temu::Surrogate(bad);
    try {
        (void)temu::emulate(emu, {vec1(0.5)});
        FAIL("expected NumericalError");
    } catch (const temu::NumericalError& e) {
        CHECK(std::string(e.what()).find("mode 1") != std::string::npos);
    }
}

TEST_CASE("build_emulator validation") {
    const Tensor t = random_tensor({4, 6}, 99);
    const Eigen::MatrixXd inputs = coords_1d(5, 0.0, 1.0, 100);  // wrong row count
    CHECK_THROWS_AS((void)temu::build_emulator(
                        t, {4, 6}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::rf, inputs)},
                        RngSeed{101}),
                    temu::ArgumentError);
    CHECK_THROWS_AS(
        (void)temu::build_emulator(t, {4}, {ModeSpec::grid(), ModeSpec::grid()}, RngSeed{101}),
        temu::ArgumentError);
    CHECK_THROWS_AS(
        (void)temu::build_emulator(t, {4, 7}, {ModeSpec::grid(), ModeSpec::grid()}, RngSeed{101}),
        temu::ArgumentError);
    CHECK_THROWS_AS((void)temu::build_emulator(t, {4, 6}, {ModeSpec::grid()}, RngSeed{101}),
                    temu::ArgumentError);
}

TEST_CASE("bootstrap with zero residuals returns the point prediction") {
    const Tensor t = random_tensor({4, 6}, 102);
    const Eigen::MatrixXd inputs = coords_1d(6, 0.0, 1.0, 103);
    auto emu = temu::build_emulator(
        t, {4, 4}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::gp, inputs)}, RngSeed{104});
    emu.residuals[1].setZero();
    const Query q{vec1(0.3)};
    const Tensor point = temu::emulate(emu, q);
    const auto samples = temu::bootstrap_predict(emu, q, 50, RngSeed{105});
    REQUIRE(samples.size() == 50);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == point[i]);
}

TEST_CASE("bootstrap returns exactly B samples, deterministic given seed") {
    const Tensor t = random_tensor({3, 5}, 106);
    const Eigen::MatrixXd inputs = coords_1d(5, 0.0, 1.0, 107);
    const auto emu = temu::build_emulator(
        t, {3, 3}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::rf, inputs)}, RngSeed{108});
    const Query q{vec1(0.5)};
    const auto a = temu::bootstrap_predict(emu, q, 1000, RngSeed{109});
    const auto b = temu::bootstrap_predict(emu, q, 1000, RngSeed{109});
    REQUIRE(a.size() == 1000);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(a[i][j] == b[i][j]);
}

TEST_CASE("bootstrap empirical distribution matches exhaustive enumeration") {
    // Single learned mode with a 3-row residual matrix: each replicate picks
    // one of exactly three outcome tensors, uniformly.
    const Tensor t = random_tensor({4, 3}, 110);
    const Eigen::MatrixXd inputs = coords_1d(3, 0.0, 1.0, 111);
    const auto emu = temu::build_emulator(
        t, {4, 3}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::gp, inputs)}, RngSeed{112});
    const Query q{vec1(0.42)};

    // Enumerate the three possible outcomes by hand from the emulator state.
    Eigen::RowVectorXd base(3);
    for (int j = 0; j < 3; ++j)
        base(j) = emu.surrogates[1][static_cast<std::size_t>(j)].predict(q[0]);
    std::vector<Tensor> outcomes;
    for (int r = 0; r < 3; ++r) {
        const Eigen::RowVectorXd row = base + emu.residuals[1].row(r);
        Tensor acc = temu::mode_multiply(emu.factors.core, row, 1);
        acc = temu::mode_multiply(acc, emu.factors.factors[0], 0);
        outcomes.push_back(Tensor({4}, std::move(acc.data())));
    }

    const std::size_t B = 100000;
    const auto samples = temu::bootstrap_predict(emu, q, B, RngSeed{113});
    std::map<int, std::size_t> counts;
    for (const auto& s : samples) {
        int match = -1;
        for (int r = 0; r < 3; ++r) {
            double diff = 0.0;
            for (std::size_t i = 0; i < 4; ++i)
                diff = std::max(diff, std::abs(s[i] - outcomes[static_cast<std::size_t>(r)][i]));
            if (diff < 1e-12) match = r;
        }
        REQUIRE(match >= 0);
        ++counts[match];
    }
    // Each outcome has probability 1/3; 3 standard errors at B = 1e5.
    const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / static_cast<double>(B));
    for (int r = 0; r < 3; ++r) {
        const double freq = static_cast<double>(counts[r]) / static_cast<double>(B);
        CHECK(std::abs(freq - 1.0 / 3.0) <= 3.0 * se);
    }
}

TEST_CASE("bootstrap sample mean converges to the residual-shifted mean") {
    const Tensor t = random_tensor({3, 6}, 114);
    const Eigen::MatrixXd inputs = coords_1d(6, 0.0, 1.0, 115);
    const auto emu = temu::build_emulator(
        t, {3, 4}, {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::rf, inputs)}, RngSeed{116});
    const Query q{vec1(0.77)};

    Eigen::RowVectorXd base(4);
    for (int j = 0; j < 4; ++j)
        base(j) = emu.surrogates[1][static_cast<std::size_t>(j)].predict(q[0]);
    const Eigen::RowVectorXd mean_row = base + emu.residuals[1].colwise().mean();
    Tensor acc = temu::mode_multiply(emu.factors.core, mean_row, 1);
    acc = temu::mode_multiply(acc, emu.factors.factors[0], 0);
    const Tensor expected_mean({3}, std::move(acc.data()));

    const std::size_t B = 100000;
    const auto samples = temu::bootstrap_predict(emu, q, B, RngSeed{117});
    Tensor mean({3});
    for (const auto& s : samples)
        for (std::size_t i = 0; i < 3; ++i) mean[i] += s[i] / static_cast<double>(B);

    // Per-cell spread for the standard-error estimate.
    for (std::size_t i = 0; i < 3; ++i) {
        double var = 0.0;
        for (const auto& s : samples) var += (s[i] - mean[i]) * (s[i] - mean[i]);
        var /= static_cast<double>(B);
        const double se = std::sqrt(var / static_cast<double>(B));
        CHECK(std::abs(mean[i] - expected_mean[i]) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("emulator file round-trip is bit-exact on 100 random queries") {
    const Tensor t = random_tensor({4, 5, 6}, 118);
    const Eigen::MatrixXd in1 = coords_1d(5, 0.0, 1.0, 119);
    const Eigen::MatrixXd in2 = coords_1d(6, -1.0, 1.0, 120);
    const auto emu = temu::build_emulator(
        t, {4, 4, 5},
        {ModeSpec::grid(), ModeSpec::learn(SurrogateKind::gp, in1),
         ModeSpec::learn(SurrogateKind::nn, in2)},
        RngSeed{121});
    const auto path = std::filesystem::temp_directory_path() / "temu_emulator_test.temuem";
    temu::save_emulator(path, emu);
    const auto back = temu::load_emulator(path);
    std::filesystem::remove(path);

    temu::Rng rng(RngSeed{122});
    for (int trial = 0; trial < 100; ++trial) {
        const Query q{vec1(rng.uniform(0.0, 1.0)), vec1(rng.uniform(-1.0, 1.0))};
        const Tensor a = temu::emulate(emu, q);
        const Tensor b = temu::emulate(back, q);
        REQUIRE(a.dims() == b.dims());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("glacier rank monotonicity: wider ranks do not hurt MARE") {
    const auto gt = temu::build_glacier_tensor(10, RngSeed{123});
    const auto ts = temu::draw_glacier_test_set(100, RngSeed{124}, {}, {});
    const auto combo = temu::glacier_combination("mixed");
    temu::SurrogateConfig scfg;
    scfg.rf.n_trees = 200;
    const auto wide = temu::fit_glacier_emulator(gt, combo, 50, 50, scfg, RngSeed{125});
    const auto narrow = temu::fit_glacier_emulator(gt, combo, 10, 10, scfg, RngSeed{125});
    const double mare_wide = temu::glacier_emulator_mare(wide, ts);
    const double mare_narrow = temu::glacier_emulator_mare(narrow, ts);
    CHECK(mare_wide <= 1.1 * mare_narrow);  // expected ordering with 10% slack
}

TEST_SUITE_END();
