#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "temu/rng.hpp"
#include "temu/surrogate.hpp"
#include "temu/tensor.hpp"

namespace temu {

/// How one tensor mode is treated at prediction time. Grid modes are only
/// evaluated at their training indices (the factor matrix is used directly);
/// Learned modes regress each factor column on continuous mode coordinates so
/// the emulator can predict off the training grid.
struct ModeSpec {
    bool learned = false;
    SurrogateKind kind = SurrogateKind::gp;  // Learned only
    Eigen::MatrixXd inputs;                  // Learned only: n_k x d coordinates
    SurrogateConfig config;

    static ModeSpec grid() { return {}; }
    static ModeSpec learn(SurrogateKind kind, Eigen::MatrixXd inputs, SurrogateConfig cfg = {}) {
        return {true, kind, std::move(inputs), cfg};
    }
};

/// Truncated-HOSVD emulator with one surrogate per retained factor column of
/// every Learned mode. Residual matrices (factor minus surrogate fit at the
/// training inputs) are kept for bootstrap predictive sampling.
struct TensorEmulator {
    HosvdFactors factors;
    std::vector<ModeSpec> specs;
    std::vector<std::vector<Surrogate>> surrogates;  // per mode; empty for Grid
    std::vector<Eigen::MatrixXd> residuals;          // per mode; 0x0 for Grid

    [[nodiscard]] std::size_t order() const { return specs.size(); }
};

[[nodiscard]] TensorEmulator build_emulator(const Tensor& t, std::vector<std::size_t> ranks,
                                            std::vector<ModeSpec> specs, RngSeed seed);

/// One coordinate vector per Learned mode, in mode order.
using Query = std::vector<Eigen::VectorXd>;

/// Core product with surrogate-predicted row vectors on Learned modes and the
/// factor matrices on Grid modes. The result's dimensions are the Grid-mode
/// extents; with no Grid modes it is a single-cell tensor.
[[nodiscard]] Tensor emulate(const TensorEmulator& e, const Query& query);

/// Convenience for the all-Learned case.
[[nodiscard]] double emulate_scalar(const TensorEmulator& e, const Query& query);

/// B bootstrap replicates: each draws one residual row per Learned mode (with
/// replacement, independently across modes), adds it to the predicted row,
/// and evaluates the core product.
[[nodiscard]] std::vector<Tensor> bootstrap_predict(const TensorEmulator& e, const Query& query,
                                                    std::size_t b, RngSeed seed);

/// First-order SVD emulator baseline: c = U D v(theta) with the first r
/// columns and one surrogate per retained right-singular-vector column.
struct SvdEmulator {
    Eigen::MatrixXd basis;              // M x r, U_r diag(sigma_r)
    std::vector<Surrogate> surrogates;  // r, trained on columns of V_r
    Eigen::MatrixXd residuals;          // N x r training residuals
};

[[nodiscard]] SvdEmulator build_svd_emulator(const Eigen::MatrixXd& c, std::size_t r,
                                             SurrogateKind kind, const Eigen::MatrixXd& inputs,
                                             const SurrogateConfig& cfg, RngSeed seed);

[[nodiscard]] Eigen::VectorXd svd_emulate(const SvdEmulator& e, const Eigen::VectorXd& theta);

// Emulator container file (binary, little endian).
void save_emulator(const std::filesystem::path& path, const TensorEmulator& e);
[[nodiscard]] TensorEmulator load_emulator(const std::filesystem::path& path);

}  // namespace temu
