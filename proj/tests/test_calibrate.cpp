#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/uniform.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include "temu/abm.hpp"
#include "temu/calibrate.hpp"
#include "temu/design.hpp"
#include "temu/error.hpp"
#include "temu/io.hpp"

using temu::Chain;
using temu::ObservationSet;
using temu::Priors;
using temu::RngSeed;

namespace {

struct SmallSetup {
    temu::TensorEmulator emu_x, emu_y;
    std::vector<double> speeds, radii;
    temu::AbmState init;
    temu::AbmParams base;
};

// Small ABM emulator pair shared by the calibration tests.
SmallSetup small_emulators(std::size_t n_agents = 4, std::size_t n_times = 6,
                           std::size_t n_params = 8, temu::SurrogateKind kind_v = temu::SurrogateKind::gp,
                           temu::SurrogateKind kind_r = temu::SurrogateKind::rf) {
    SmallSetup s;
    s.base.n_agents = n_agents;
    s.base.n_times = n_times;
    s.speeds = temu::uniform_sample(n_params, 0.1, 1.0, RngSeed{201});
    s.radii = temu::uniform_sample(n_params, 5.0, 50.0, RngSeed{202});
    s.init = temu::default_initial_state(n_agents, RngSeed{203});
    const auto tensors = temu::build_abm_tensors(s.speeds, s.radii, s.base, s.init, RngSeed{204});

    Eigen::MatrixXd v_in(static_cast<Eigen::Index>(n_params), 1);
    Eigen::MatrixXd r_in(static_cast<Eigen::Index>(n_params), 1);
    for (std::size_t i = 0; i < n_params; ++i) {
        v_in(static_cast<Eigen::Index>(i), 0) = s.speeds[i];
        r_in(static_cast<Eigen::Index>(i), 0) = s.radii[i];
    }
    temu::SurrogateConfig scfg;
    scfg.rf.n_trees = 100;
    const std::vector<temu::ModeSpec> specs{
        temu::ModeSpec::grid(), temu::ModeSpec::grid(),
        temu::ModeSpec::learn(kind_v, v_in, scfg),
        temu::ModeSpec::learn(kind_r, r_in, scfg)};
    s.emu_x = temu::build_emulator(tensors.x, tensors.x.dims(), specs, RngSeed{205});
    s.emu_y = temu::build_emulator(tensors.y, tensors.y.dims(), specs, RngSeed{206});
    return s;
}

ObservationSet observations_from(const temu::TensorEmulator& ex, const temu::TensorEmulator& ey,
                                 double v, double rho, double noise_sd, RngSeed seed) {
    const temu::Query q{Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, rho)};
    const temu::Tensor gx = temu::emulate(ex, q);
    const temu::Tensor gy = temu::emulate(ey, q);
    const std::size_t n = gx.dims()[0];
    const std::size_t T = gx.dims()[1];
    temu::Rng rng(seed);
    ObservationSet obs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < T; ++t)
            obs.records.push_back({i, t, gx[i + n * t] + noise_sd * rng.normal(),
                                   gy[i + n * t] + noise_sd * rng.normal()});
    return obs;
}

double ks_distance(std::vector<double> draws, const std::function<double(double)>& cdf) {
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    const auto n = static_cast<double>(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return ks;
}

}  // namespace

TEST_SUITE_BEGIN("calibrate");

TEST_CASE("log-likelihood hand values") {
    const auto s = small_emulators();
    // Observations equal to the emulated means: zero residuals.
    const ObservationSet obs = observations_from(s.emu_x, s.emu_y, 0.5, 20.0, 0.0, RngSeed{207});
    const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    CHECK(temu::log_likelihood(obs, 20.0, 0.5, inv2pi, inv2pi, s.emu_x, s.emu_y) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    // A single record with residuals (1, 0) and unit variances.
    ObservationSet one;
    const temu::Query q{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 20.0)};
    const temu::Tensor gx = temu::emulate(s.emu_x, q);
    const temu::Tensor gy = temu::emulate(s.emu_y, q);
    one.records.push_back({1, 2, gx[1 + 4 * 2] + 1.0, gy[1 + 4 * 2]});
    CHECK(temu::log_likelihood(one, 20.0, 0.5, 1.0, 1.0, s.emu_x, s.emu_y) ==
          doctest::Approx(-std::log(2.0 * std::numbers::pi) - 0.5).epsilon(1e-12));
}

TEST_CASE("doubling a variance changes the log-likelihood by the closed form") {
    const auto s = small_emulators();
    const ObservationSet obs = observations_from(s.emu_x, s.emu_y, 0.4, 15.0, 0.5, RngSeed{208});

    // Direct-summation oracle for the x-term.
    const temu::Query q{Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, 15.0)};
    const temu::Tensor gx = temu::emulate(s.emu_x, q);
    double sse_x = 0.0;
    for (const auto& r : obs.records) {
        const double d = r.x - gx[r.agent + 4 * r.time];
        sse_x += d * d;
    }
    const auto n = static_cast<double>(obs.records.size());
    const double l1 = temu::log_likelihood(obs, 15.0, 0.4, 1.0, 1.0, s.emu_x, s.emu_y);
    const double l2 = temu::log_likelihood(obs, 15.0, 0.4, 2.0, 1.0, s.emu_x, s.emu_y);
    CHECK(l1 - l2 == doctest::Approx(0.5 * n * std::log(2.0) - sse_x / 4.0).epsilon(1e-9));
}

TEST_CASE("conjugate update matches the analytic posterior and its integral") {
    // Constant-zero emulators: residuals equal the raw observations, so the
    // full conditional for sigma2_x is InverseGamma(3 + n/2, 4 + SSE/2).
    auto s = small_emulators();
    // Zero out the core so every emulated mean is exactly 0.
    for (std::size_t i = 0; i < s.emu_x.factors.core.size(); ++i) s.emu_x.factors.core[i] = 0.0;
    for (std::size_t i = 0; i < s.emu_y.factors.core.size(); ++i) s.emu_y.factors.core[i] = 0.0;

    ObservationSet obs;
    for (std::size_t i = 0; i < 4; ++i) obs.records.push_back({i % 4, i, 1.0, 1.0});  // n = 4

    const Priors priors;  // IG(3, 4)
    const auto grids = temu::CalibrationGrids::regular(priors, 8);
    const Chain chain = temu::gibbs(obs, priors, grids, 20000, RngSeed{209}, s.emu_x, s.emu_y);

    // Full conditional: IG(3 + 2, 4 + 4/2) = IG(5, 6); mean 6/4 = 1.5.
    double mean = 0.0, var = 0.0;
    for (double x : chain.sigma2_x) mean += x;
    mean /= static_cast<double>(chain.size());
    for (double x : chain.sigma2_x) var += (x - mean) * (x - mean);
    var /= static_cast<double>(chain.size());
    const double se = std::sqrt(var / static_cast<double>(chain.size()));
    CHECK(std::abs(mean - 1.5) <= 3.0 * se + 1e-3);

    // Numerical-integration oracle: posterior mean from prior x likelihood on
    // a sigma^2 grid (criterion 9a's 1% tolerance).
    const double shape = 3.0, scale = 4.0, sse = 4.0;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 400000; ++k) {
        const double x = (k + 0.5) * 1e-4;  // sigma^2 grid on (0, 40]
        const double logp = -(shape + 1.0) * std::log(x) - scale / x -
                            2.0 * std::log(x) - 0.5 * sse / x;  // n/2 = 2
        const double p = std::exp(logp);
        num += x * p;
        den += p;
    }
    const double integral_mean = num / den;
    CHECK(std::abs(integral_mean - 1.5) / 1.5 < 0.01);
    CHECK(std::abs(mean - integral_mean) / integral_mean < 0.01);

    // KS check of the sampled conditional against boost's InverseGamma(5, 6).
    boost::math::inverse_gamma_distribution<double> ig(5.0, 6.0);
    const double ks = ks_distance(chain.sigma2_x,
                                  [&](double x) { return boost::math::cdf(ig, x); });
    CHECK(ks < 0.02);
}

TEST_CASE("empty observation set reproduces the priors") {
    const auto s = small_emulators();
    const Priors priors;
    const auto grids = temu::CalibrationGrids::regular(priors, 64);
    const ObservationSet obs;
    const Chain chain = temu::gibbs(obs, priors, grids, 10000, RngSeed{210}, s.emu_x, s.emu_y);

    boost::math::inverse_gamma_distribution<double> ig(priors.sigma2_shape, priors.sigma2_scale);
    CHECK(ks_distance(chain.sigma2_x, [&](double x) { return boost::math::cdf(ig, x); }) < 0.05);
    CHECK(ks_distance(chain.sigma2_y, [&](double x) { return boost::math::cdf(ig, x); }) < 0.05);

    boost::math::uniform_distribution<double> urho(priors.rho_lo, priors.rho_hi);
    boost::math::uniform_distribution<double> uv(priors.v_lo, priors.v_hi);
    CHECK(ks_distance(chain.rho, [&](double x) { return boost::math::cdf(urho, x); }) < 0.05);
    CHECK(ks_distance(chain.v, [&](double x) { return boost::math::cdf(uv, x); }) < 0.05);
}

TEST_CASE("grid sampling matches hand-set weights") {
    const std::vector<double> lw{std::log(0.5), std::log(0.3), std::log(0.2)};
    temu::Rng rng(RngSeed{211});
    std::vector<std::size_t> counts(3, 0);
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) ++counts[temu::detail::sample_log_weights(lw, rng)];
    const std::vector<double> p{0.5, 0.3, 0.2};
    for (std::size_t k = 0; k < 3; ++k) {
        const double freq = static_cast<double>(counts[k]) / static_cast<double>(n);
        const double se = std::sqrt(p[k] * (1.0 - p[k]) / static_cast<double>(n));
        CHECK(std::abs(freq - p[k]) <= 3.0 * se);
    }
    // Extreme log-weights survive via log-sum-exp.
    const std::vector<double> extreme{-100000.0, -100001.0};
    std::size_t zero = 0;
    for (std::size_t i = 0; i < 1000; ++i)
        if (temu::detail::sample_log_weights(extreme, rng) == 0) ++zero;
    CHECK(zero > 600);
}

TEST_CASE("synthetic recovery concentrates near the generating parameters") {
    const auto s = small_emulators(4, 8, 12);
    const double v_true = 0.5, rho_true = 35.0;
    const ObservationSet obs =
        observations_from(s.emu_x, s.emu_y, v_true, rho_true, 0.05, RngSeed{212});
    const Priors priors;  // v in [.1, 1], rho in [5, 50]
    const auto grids = temu::CalibrationGrids::regular(priors, 32);
    const Chain chain = temu::gibbs(obs, priors, grids, 600, RngSeed{213}, s.emu_x, s.emu_y);

    // Modal grid cells after burn-in.
    std::map<double, std::size_t> rho_counts, v_counts;
    for (std::size_t i = 100; i < chain.size(); ++i) {
        ++rho_counts[chain.rho[i]];
        ++v_counts[chain.v[i]];
    }
    auto modal = [](const std::map<double, std::size_t>& m) {
        double best = 0.0;
        std::size_t n = 0;
        for (const auto& [value, count] : m)
            if (count > n) {
                n = count;
                best = value;
            }
        return best;
    };
    const double rho_step = grids.rho[1] - grids.rho[0];
    const double v_step = grids.v[1] - grids.v[0];
    CHECK(std::abs(modal(rho_counts) - rho_true) <= rho_step + 1e-9);
    CHECK(std::abs(modal(v_counts) - v_true) <= v_step + 1e-9);

    // Support respect: every draw lies inside the prior support.
    for (std::size_t i = 0; i < chain.size(); ++i) {
        CHECK(chain.rho[i] >= priors.rho_lo);
        CHECK(chain.rho[i] <= priors.rho_hi);
        CHECK(chain.v[i] >= priors.v_lo);
        CHECK(chain.v[i] <= priors.v_hi);
        CHECK(chain.sigma2_x[i] > 0.0);
        CHECK(chain.sigma2_y[i] > 0.0);
    }
}

TEST_CASE("gibbs is deterministic given identical inputs") {
    const auto s = small_emulators();
    const ObservationSet obs = observations_from(s.emu_x, s.emu_y, 0.3, 25.0, 0.1, RngSeed{214});
    const Priors priors;
    const auto grids = temu::CalibrationGrids::regular(priors, 16);
    const Chain a = temu::gibbs(obs, priors, grids, 50, RngSeed{215}, s.emu_x, s.emu_y);
    const Chain b = temu::gibbs(obs, priors, grids, 50, RngSeed{215}, s.emu_x, s.emu_y);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.rho[i] == b.rho[i]);
        CHECK(a.v[i] == b.v[i]);
        CHECK(a.sigma2_x[i] == b.sigma2_x[i]);
        CHECK(a.sigma2_y[i] == b.sigma2_y[i]);
    }
}

TEST_CASE("grid outside the prior support is rejected") {
    const auto s = small_emulators();
    const Priors priors;
    temu::CalibrationGrids grids = temu::CalibrationGrids::regular(priors, 8);
    grids.rho.push_back(priors.rho_hi + 1.0);
    CHECK_THROWS_AS(
        (void)temu::gibbs({}, priors, grids, 10, RngSeed{216}, s.emu_x, s.emu_y),
        temu::ArgumentError);
}

TEST_CASE("chain summary") {
    Chain c;
    c.rho.assign(100, 7.5);
    c.v.assign(100, 0.5);
    c.sigma2_x.assign(100, 2.0);
    c.sigma2_y.assign(100, 3.0);
    const auto s = temu::chain_summary(c, 10);
    CHECK(s.rho.mean == doctest::Approx(7.5));
    CHECK(s.rho.lo95 == doctest::Approx(7.5));
    CHECK(s.rho.hi95 == doctest::Approx(7.5));

    // iid uniforms: mean near 1/2 at 1e4 draws.
    temu::Rng rng(RngSeed{217});
    Chain u;
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.next_double();
        u.rho.push_back(x);
        u.v.push_back(x);
        u.sigma2_x.push_back(x);
        u.sigma2_y.push_back(x);
    }
    const auto su = temu::chain_summary(u, 0);
    CHECK(std::abs(su.rho.mean - 0.5) < 0.02);
    CHECK(su.rho.lo95 == doctest::Approx(0.025).epsilon(0.5));
    CHECK(su.rho.hi95 == doctest::Approx(0.975).epsilon(0.05));

    CHECK_THROWS_AS((void)temu::chain_summary(c, 100), temu::ArgumentError);
}

TEST_CASE("chain CSV round-trips and summary recomputes from the trace") {
    const auto s = small_emulators();
    const ObservationSet obs = observations_from(s.emu_x, s.emu_y, 0.6, 30.0, 0.1, RngSeed{218});
    const Priors priors;
    const auto grids = temu::CalibrationGrids::regular(priors, 8);
    const Chain chain = temu::gibbs(obs, priors, grids, 80, RngSeed{219}, s.emu_x, s.emu_y);

    const auto path = std::filesystem::temp_directory_path() / "temu_chain_test.csv";
    temu::write_chain_csv(path, chain);
    const auto rows = temu::read_csv(path, {"iteration", "rho_o", "v", "sigma2_x", "sigma2_y"});
    std::filesystem::remove(path);
    REQUIRE(rows.size() == chain.size());

    const std::size_t burn = 20;
    double mean_rho = 0.0;
    for (std::size_t i = burn; i < rows.size(); ++i) mean_rho += rows[i][1];
    mean_rho /= static_cast<double>(rows.size() - burn);
    const auto summary = temu::chain_summary(chain, burn);
    CHECK(summary.rho.mean == doctest::Approx(mean_rho).epsilon(1e-12));
}

TEST_CASE("observation CSV ingestion validates indices with line numbers") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "temu_obs_test.csv";
    {
        std::vector<std::vector<double>> rows{{0, 0, 1.5, 2.5}, {3, 5, -1.0, 0.25}};
        temu::write_csv(path, {"agent_id", "time_index", "x", "y"}, rows);
    }
    const auto obs = ObservationSet::from_csv(path);
    CHECK(obs.records.size() == 2);
    CHECK(obs.records[1].agent == 3);
    CHECK(obs.records[1].time == 5);
    CHECK_NOTHROW(obs.validate(4, 6));
    CHECK_THROWS_AS(obs.validate(4, 5), temu::ArgumentError);

    {
        std::ofstream out(path);
        out << "agent_id,time_index,x,y\n0,0,1.0,2.0\n0,1.5,1.0,2.0\n";
    }
    try {
        (void)ObservationSet::from_csv(path);
        FAIL("expected IoError");
    } catch (const temu::IoError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_SUITE_END();
