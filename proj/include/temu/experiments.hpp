#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "temu/abm.hpp"
#include "temu/calibrate.hpp"
#include "temu/emulator.hpp"
#include "temu/glacier.hpp"
#include "temu/surrogate.hpp"

namespace temu {

/// Per-mode surrogate choice for the glacier emulator: (x,y), t, (period,
/// amplitude). "mixed" is GP/GP/RF.
struct GlacierCombination {
    std::string name;
    SurrogateKind spatial, time, params;
};

[[nodiscard]] GlacierCombination glacier_combination(const std::string& name);

struct GlacierExperimentConfig {
    RngSeed seed{20240601};
    std::vector<std::size_t> sizes{10, 20, 30};
    std::size_t replicates = 1;
    std::vector<std::string> combinations{"rf", "nn", "gp", "mixed"};
    std::size_t rank_spatial = 50;  // capped at s^2 per size
    std::size_t rank_params = 50;   // time mode is always full rank
    std::size_t test_points = 100;
    bool save_emulators = false;
    bool force = false;
    GlacierParams glacier;
    GlacierDesignRanges ranges;
    SurrogateConfig surrogate;
};

struct FlatBaselineConfig {
    RngSeed seed{20240601};
    std::size_t n_train = 10000;
    std::vector<std::string> kinds{"rf", "gp", "nn"};
    std::size_t test_points = 100;
    GlacierParams glacier;
    GlacierDesignRanges ranges;
    SurrogateConfig surrogate;
};

struct AbmExperimentConfig {
    RngSeed seed{20240601};
    std::size_t n_speeds = 32;
    std::size_t n_radii = 32;
    double speed_lo = 0.1, speed_hi = 1.0;
    double radius_lo = 5.0, radius_hi = 50.0;
    AbmParams base;  // speed/orientation_radius overwritten per design point
    bool shared_noise = true;
    std::vector<std::pair<double, double>> cases{{0.5, 35.0}, {0.5, 5.0}};  // (v, rho_o)
    bool force = false;
    SurrogateConfig surrogate;
};

struct CalibrateRunConfig {
    RngSeed seed{20240601};
    std::filesystem::path emulator_x, emulator_y, observations;
    Priors priors;
    std::size_t grid_points = 64;
    std::size_t iterations = 2000;
    std::size_t burn_in = 500;
};

// Command results (also written as CSV files in the output directory).

struct GlacierRow {
    std::size_t s = 0;
    std::string combination;
    std::size_t replicate = 0;
    double mare = 0.0;
    double residual = 0.0;  // Frobenius residual of the truncated HOSVD
};

struct FlatRow {
    std::string kind;
    std::size_t n_train = 0;
    double mare = 0.0;
};

struct AbmCaseRow {
    double v = 0.0, rho = 0.0;
    std::string emulator;     // "rf" | "mixed"
    double spread_err = 0.0;  // time-averaged |emulated - simulated|
    double elong_err = 0.0;
    double spread_sim_mean = 0.0;
};

/// Glacier emulation study: per (size, combination, replicate) builds the
/// training tensor, fits the emulator, and reports held-out MARE.
std::vector<GlacierRow> cmd_glacier_experiment(const GlacierExperimentConfig& cfg,
                                               const std::filesystem::path& out_dir);

/// Surrogates fit directly on 5-tuples (no tensor), same held-out protocol.
std::vector<FlatRow> cmd_flat_baseline(const FlatBaselineConfig& cfg,
                                       const std::filesystem::path& out_dir);

/// ABM emulation study: builds X/Y tensors, fits pure-RF and mixed emulators,
/// compares simulated and emulated trajectories and troop metrics per case.
std::vector<AbmCaseRow> cmd_abm_experiment(const AbmExperimentConfig& cfg,
                                           const std::filesystem::path& out_dir);

/// Gibbs calibration against observed trajectories; writes chain + summary.
ChainSummary cmd_calibrate(const CalibrateRunConfig& cfg, const std::filesystem::path& out_dir);

// Helpers shared with the acceptance suite.

/// Held-out design: `n` fresh (x, y, t, period, amplitude) tuples drawn with
/// the training design steps; tuples with thickness below 1 m are redrawn so
/// relative error stays well defined.
struct GlacierTestSet {
    Eigen::MatrixXd points;       // n x 5
    std::vector<double> truth;    // exact thickness
};
[[nodiscard]] GlacierTestSet draw_glacier_test_set(std::size_t n, RngSeed seed,
                                                   const GlacierParams& fixed,
                                                   const GlacierDesignRanges& ranges);

/// Fit one glacier tensor emulator with the given per-mode kinds.
[[nodiscard]] TensorEmulator fit_glacier_emulator(const GlacierTensor& gt,
                                                  const GlacierCombination& combo,
                                                  std::size_t rank_spatial,
                                                  std::size_t rank_params,
                                                  const SurrogateConfig& scfg, RngSeed seed);

/// MARE of a glacier emulator on a test set.
[[nodiscard]] double glacier_emulator_mare(const TensorEmulator& emu, const GlacierTestSet& ts);

}  // namespace temu
