#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "temu/emulator.hpp"
#include "temu/rng.hpp"

namespace temu {

/// One observed (x, y) location for agent i at time index t. Indices map into
/// the emulators' grid modes (agent = mode 0, time = mode 1).
struct Observation {
    std::size_t agent = 0;
    std::size_t time = 0;
    double x = 0.0;
    double y = 0.0;
};

struct ObservationSet {
    std::vector<Observation> records;

    void validate(std::size_t n_agents, std::size_t n_times) const;
    /// Load from trajectory CSV (agent_id,time_index,x,y).
    static ObservationSet from_csv(const std::filesystem::path& path);
};

/// Uniform priors on (rho_o, v), inverse-gamma priors on the noise variances
/// (density proportional to x^(-shape-1) exp(-scale/x)).
struct Priors {
    double rho_lo = 5.0, rho_hi = 50.0;
    double v_lo = 0.1, v_hi = 1.0;
    double sigma2_shape = 3.0, sigma2_scale = 4.0;

    void validate() const;
};

struct CalibrationGrids {
    std::vector<double> rho;  // grid over the rho_o prior support
    std::vector<double> v;

    /// n equally spaced points spanning each prior's support.
    static CalibrationGrids regular(const Priors& p, std::size_t n = 64);
};

struct Chain {
    std::vector<double> rho, v, sigma2_x, sigma2_y;
    RngSeed seed;

    [[nodiscard]] std::size_t size() const { return rho.size(); }
};

struct ParameterSummary {
    double mean = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
};

struct ChainSummary {
    ParameterSummary rho, v, sigma2_x, sigma2_y;
    std::size_t burn_in = 0;
};

/// Gaussian log-likelihood of the observations under emulated means at
/// (v, rho_o). One emulator evaluation per call, reused across records.
[[nodiscard]] double log_likelihood(const ObservationSet& obs, double rho, double v,
                                    double sigma2_x, double sigma2_y, const TensorEmulator& emu_x,
                                    const TensorEmulator& emu_y);

/// Gibbs sampler: conjugate inverse-gamma draws for the variances and
/// discrete grid steps for rho_o and v (weights computed in log space).
/// Emulator evaluations are memoized per (v, rho_o) grid pair.
[[nodiscard]] Chain gibbs(const ObservationSet& obs, const Priors& priors,
                          const CalibrationGrids& grids, std::size_t iters, RngSeed seed,
                          const TensorEmulator& emu_x, const TensorEmulator& emu_y);

[[nodiscard]] ChainSummary chain_summary(const Chain& c, std::size_t burn_in);

/// Chain as CSV (iteration,rho_o,v,sigma2_x,sigma2_y).
void write_chain_csv(const std::filesystem::path& path, const Chain& c);

namespace detail {
/// Index draw from unnormalized log weights (log-sum-exp normalization).
[[nodiscard]] std::size_t sample_log_weights(const std::vector<double>& lw, Rng& rng);
}  // namespace detail

}  // namespace temu
