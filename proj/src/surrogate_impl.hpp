#pragma once

// Internal fit entry points shared by surrogate.cpp and the per-kind files.

#include "temu/surrogate.hpp"

namespace temu::detail {

GpModel fit_gp(const TrainingSet& ts, const GpConfig& cfg, RngSeed seed);
RfModel fit_rf(const TrainingSet& ts, const RfConfig& cfg, RngSeed seed);
NnModel fit_nn(const TrainingSet& ts, const NnConfig& cfg, RngSeed seed);

// Column-wise standardization helpers (scale 1 where a column is constant).
void standardize_stats(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& scale);
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& scale);

}  // namespace temu::detail
