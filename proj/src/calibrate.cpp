#include "temu/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "temu/error.hpp"
#include "temu/io.hpp"

namespace temu {

namespace detail {

std::size_t sample_log_weights(const std::vector<double>& lw, Rng& rng) {
    const double m = *std::max_element(lw.begin(), lw.end());
    if (!std::isfinite(m))
        throw NumericalError(
            "grid sampling: all weights underflow; check the log-sum-exp inputs");
    double total = 0.0;
    std::vector<double> w(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
        w[i] = std::exp(lw[i] - m);
        total += w[i];
    }
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) {
        acc += w[i];
        if (u < acc) return i;
    }
    return lw.size() - 1;
}

}  // namespace detail

namespace {

// Sum of squared residuals of the observations against emulated means.
struct SsePair {
    double x = 0.0;
    double y = 0.0;
};

SsePair sse_at(const ObservationSet& obs, double v, double rho, const TensorEmulator& emu_x,
               const TensorEmulator& emu_y) {
    if (obs.records.empty()) return {};
    const Query q{Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, rho)};
    const Tensor gx = emulate(emu_x, q);
    const Tensor gy = emulate(emu_y, q);
    const std::size_t n_agents = gx.dims()[0];
    SsePair s;
    for (const auto& r : obs.records) {
        const std::size_t off = r.agent + n_agents * r.time;
        const double dx = r.x - gx[off];
        const double dy = r.y - gy[off];
        s.x += dx * dx;
        s.y += dy * dy;
    }
    return s;
}

// Lazy SSE table over the (v, rho) grid; pure emulator calls, so entries are
// computed in parallel and reused for the rest of the run.
class SseCache {
public:
    SseCache(const ObservationSet& obs, const CalibrationGrids& grids,
             const TensorEmulator& emu_x, const TensorEmulator& emu_y)
        : obs_(obs), grids_(grids), emu_x_(emu_x), emu_y_(emu_y) {}

    const SsePair& at(std::size_t vi, std::size_t ri) {
        const std::size_t key = vi * grids_.rho.size() + ri;
        auto it = table_.find(key);
        if (it != table_.end()) return it->second;
        return table_.emplace(key, sse_at(obs_, grids_.v[vi], grids_.rho[ri], emu_x_, emu_y_))
            .first->second;
    }

    // Fill one grid line (fixed v, all rho, or vice versa) in parallel.
    void prefetch_rho_line(std::size_t vi) {
        std::vector<std::size_t> missing;
        for (std::size_t ri = 0; ri < grids_.rho.size(); ++ri)
            if (!table_.count(vi * grids_.rho.size() + ri)) missing.push_back(ri);
        std::vector<SsePair> vals(missing.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(missing.size()); ++m)
            vals[static_cast<std::size_t>(m)] =
                sse_at(obs_, grids_.v[vi], grids_.rho[missing[static_cast<std::size_t>(m)]],
                       emu_x_, emu_y_);
        for (std::size_t m = 0; m < missing.size(); ++m)
            table_.emplace(vi * grids_.rho.size() + missing[m], vals[m]);
    }

    void prefetch_v_line(std::size_t ri) {
        std::vector<std::size_t> missing;
        for (std::size_t vi = 0; vi < grids_.v.size(); ++vi)
            if (!table_.count(vi * grids_.rho.size() + ri)) missing.push_back(vi);
        std::vector<SsePair> vals(missing.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(missing.size()); ++m)
            vals[static_cast<std::size_t>(m)] =
                sse_at(obs_, grids_.v[missing[static_cast<std::size_t>(m)]], grids_.rho[ri],
                       emu_x_, emu_y_);
        for (std::size_t m = 0; m < missing.size(); ++m)
            table_.emplace(missing[m] * grids_.rho.size() + ri, vals[m]);
    }

private:
    const ObservationSet& obs_;
    const CalibrationGrids& grids_;
    const TensorEmulator& emu_x_;
    const TensorEmulator& emu_y_;
    std::unordered_map<std::size_t, SsePair> table_;
};

ParameterSummary summarize(std::vector<double> xs) {
    ParameterSummary s;
    double acc = 0.0;
    for (double x : xs) acc += x;
    s.mean = acc / static_cast<double>(xs.size());
    std::sort(xs.begin(), xs.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(xs.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= xs.size()) return xs.back();
        const double frac = pos - static_cast<double>(i);
        return xs[i] * (1.0 - frac) + xs[i + 1] * frac;
    };
    s.lo95 = quantile(0.025);
    s.hi95 = quantile(0.975);
    return s;
}

}  // namespace

void ObservationSet::validate(std::size_t n_agents, std::size_t n_times) const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.agent >= n_agents || r.time >= n_times)
            throw ArgumentError("observation " + std::to_string(i) + ": index (" +
                                std::to_string(r.agent) + "," + std::to_string(r.time) +
                                ") outside emulator grid " + std::to_string(n_agents) + "x" +
                                std::to_string(n_times));
        if (!std::isfinite(r.x) || !std::isfinite(r.y))
            throw ArgumentError("observation " + std::to_string(i) + ": non-finite value");
    }
}

ObservationSet ObservationSet::from_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path, {"agent_id", "time_index", "x", "y"});
    ObservationSet obs;
    obs.records.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        for (int c : {0, 1})
            if (row[static_cast<std::size_t>(c)] < 0.0 ||
                row[static_cast<std::size_t>(c)] !=
                    std::floor(row[static_cast<std::size_t>(c)]))
                throw IoError(path.string() + ":" + std::to_string(i + 2) +
                              ": index columns must be nonnegative integers");
        obs.records.push_back({static_cast<std::size_t>(row[0]),
                               static_cast<std::size_t>(row[1]), row[2], row[3]});
    }
    return obs;
}

void Priors::validate() const {
    if (!(rho_lo < rho_hi) || !(v_lo < v_hi))
        throw ArgumentError("Priors: uniform supports must have lower < upper");
    if (!(sigma2_shape > 0.0) || !(sigma2_scale > 0.0))
        throw ArgumentError("Priors: inverse-gamma shape and scale must be > 0");
}

CalibrationGrids CalibrationGrids::regular(const Priors& p, std::size_t n) {
    if (n < 2) throw ArgumentError("CalibrationGrids: need at least 2 points");
    CalibrationGrids g;
    g.rho.resize(n);
    g.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        g.rho[i] = p.rho_lo + f * (p.rho_hi - p.rho_lo);
        g.v[i] = p.v_lo + f * (p.v_hi - p.v_lo);
    }
    return g;
}

double log_likelihood(const ObservationSet& obs, double rho, double v, double sigma2_x,
                      double sigma2_y, const TensorEmulator& emu_x, const TensorEmulator& emu_y) {
    if (!(sigma2_x > 0.0) || !(sigma2_y > 0.0))
        throw ArgumentError("log_likelihood: variances must be > 0");
    const SsePair s = sse_at(obs, v, rho, emu_x, emu_y);
    if (!std::isfinite(s.x) || !std::isfinite(s.y))
        throw NumericalError("log_likelihood: non-finite emulator output");
    const auto n = static_cast<double>(obs.records.size());
    const double two_pi = 2.0 * std::numbers::pi;
    return -0.5 * n * std::log(two_pi * sigma2_x) - 0.5 * s.x / sigma2_x -
           0.5 * n * std::log(two_pi * sigma2_y) - 0.5 * s.y / sigma2_y;
}

Chain gibbs(const ObservationSet& obs, const Priors& priors, const CalibrationGrids& grids,
            std::size_t iters, RngSeed seed, const TensorEmulator& emu_x,
            const TensorEmulator& emu_y) {
    priors.validate();
    if (iters < 1) throw ArgumentError("gibbs: iters must be >= 1");
    if (grids.rho.empty() || grids.v.empty()) throw ArgumentError("gibbs: empty grid");
    for (double r : grids.rho)
        if (r < priors.rho_lo || r > priors.rho_hi)
            throw ArgumentError("gibbs: rho grid leaves the prior support");
    for (double v : grids.v)
        if (v < priors.v_lo || v > priors.v_hi)
            throw ArgumentError("gibbs: v grid leaves the prior support");

    const auto n = static_cast<double>(obs.records.size());
    Rng rng(seed.child(0));
    SseCache cache(obs, grids, emu_x, emu_y);

    // Initial state: a prior draw.
    std::size_t vi = static_cast<std::size_t>(rng.below(grids.v.size()));
    std::size_t ri = static_cast<std::size_t>(rng.below(grids.rho.size()));
    double s2x = rng.inverse_gamma(priors.sigma2_shape, priors.sigma2_scale);
    double s2y = rng.inverse_gamma(priors.sigma2_shape, priors.sigma2_scale);

    Chain chain;
    chain.seed = seed;
    chain.rho.reserve(iters);
    chain.v.reserve(iters);
    chain.sigma2_x.reserve(iters);
    chain.sigma2_y.reserve(iters);

    std::vector<double> lw;
    for (std::size_t it = 0; it < iters; ++it) {
        // (a) conjugate variance updates given the current means.
        const SsePair s = cache.at(vi, ri);
        s2x = rng.inverse_gamma(priors.sigma2_shape + 0.5 * n,
                                priors.sigma2_scale + 0.5 * s.x);
        s2y = rng.inverse_gamma(priors.sigma2_shape + 0.5 * n,
                                priors.sigma2_scale + 0.5 * s.y);

        // (b) rho_o | rest on its grid (uniform prior: constant, omitted).
        cache.prefetch_rho_line(vi);
        lw.assign(grids.rho.size(), 0.0);
        for (std::size_t r = 0; r < grids.rho.size(); ++r) {
            const SsePair sr = cache.at(vi, r);
            lw[r] = -0.5 * sr.x / s2x - 0.5 * sr.y / s2y;
        }
        ri = detail::sample_log_weights(lw, rng);

        // (c) v | rest.
        cache.prefetch_v_line(ri);
        lw.assign(grids.v.size(), 0.0);
        for (std::size_t v = 0; v < grids.v.size(); ++v) {
            const SsePair sv = cache.at(v, ri);
            lw[v] = -0.5 * sv.x / s2x - 0.5 * sv.y / s2y;
        }
        vi = detail::sample_log_weights(lw, rng);

        chain.rho.push_back(grids.rho[ri]);
        chain.v.push_back(grids.v[vi]);
        chain.sigma2_x.push_back(s2x);
        chain.sigma2_y.push_back(s2y);
    }
    return chain;
}

ChainSummary chain_summary(const Chain& c, std::size_t burn_in) {
    if (burn_in >= c.size()) throw ArgumentError("chain_summary: burn_in must be < chain length");
    auto tail = [&](const std::vector<double>& xs) {
        return std::vector<double>(xs.begin() + static_cast<std::ptrdiff_t>(burn_in), xs.end());
    };
    ChainSummary s;
    s.burn_in = burn_in;
    s.rho = summarize(tail(c.rho));
    s.v = summarize(tail(c.v));
    s.sigma2_x = summarize(tail(c.sigma2_x));
    s.sigma2_y = summarize(tail(c.sigma2_y));
    return s;
}

void write_chain_csv(const std::filesystem::path& path, const Chain& c) {
    std::vector<std::vector<double>> rows;
    rows.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        rows.push_back({static_cast<double>(i), c.rho[i], c.v[i], c.sigma2_x[i], c.sigma2_y[i]});
    write_csv(path, {"iteration", "rho_o", "v", "sigma2_x", "sigma2_y"}, rows);
}

}  // namespace temu
