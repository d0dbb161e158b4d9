#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>

#include "temu/experiments.hpp"

namespace temu {

// JSON configuration parsing. Unknown keys are rejected so typos fail loudly
// before any computation; every command writes the fully resolved config next
// to its outputs for provenance.

struct FitModeConfig {
    bool learned = false;
    SurrogateKind kind = SurrogateKind::gp;
    std::filesystem::path inputs_csv;
};

struct FitConfig {
    RngSeed seed{20240601};
    std::filesystem::path tensor;
    std::vector<std::size_t> ranks;  // empty or 0-entries mean full rank
    std::vector<FitModeConfig> modes;
    std::filesystem::path output{"emulator.temuem"};
    bool force = false;
    SurrogateConfig surrogate;
};

[[nodiscard]] nlohmann::json load_config_file(const std::filesystem::path& path);

[[nodiscard]] GlacierExperimentConfig parse_glacier_config(const nlohmann::json& j);
[[nodiscard]] FlatBaselineConfig parse_flat_config(const nlohmann::json& j);
[[nodiscard]] AbmExperimentConfig parse_abm_config(const nlohmann::json& j);
[[nodiscard]] CalibrateRunConfig parse_calibrate_config(const nlohmann::json& j);
[[nodiscard]] FitConfig parse_fit_config(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const GlacierExperimentConfig& c);
[[nodiscard]] nlohmann::json to_json(const FlatBaselineConfig& c);
[[nodiscard]] nlohmann::json to_json(const AbmExperimentConfig& c);
[[nodiscard]] nlohmann::json to_json(const CalibrateRunConfig& c);
[[nodiscard]] nlohmann::json to_json(const FitConfig& c);

void write_resolved_config(const std::filesystem::path& out_dir, const nlohmann::json& j);

/// Numeric matrix from a CSV file with one header line (names not checked).
[[nodiscard]] Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace temu
