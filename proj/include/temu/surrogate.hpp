#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <variant>
#include <vector>

#include "temu/rng.hpp"

namespace temu {

enum class SurrogateKind : std::uint8_t { gp = 0, rf = 1, nn = 2 };

[[nodiscard]] const char* to_string(SurrogateKind k);
[[nodiscard]] SurrogateKind surrogate_kind_from_string(const std::string& s);

/// Supervised regression data: one row per example.
struct TrainingSet {
    Eigen::MatrixXd inputs;   // n x d
    Eigen::VectorXd targets;  // n

    /// n >= 2, everything finite; GP additionally needs unique rows.
    void validate(bool require_unique_rows = false) const;
};

struct GpConfig {
    double lengthscale = 0.0;        // 0 = median pairwise distance heuristic
    double signal_variance = 0.0;    // 0 = variance of targets
    double nugget_rel = 1e-6;        // nugget = nugget_rel * signal variance
    bool tune_lengthscale = false;   // grid {1/4,1/2,1,2,4} * default, max marginal likelihood
};

struct RfConfig {
    int n_trees = 500;
    int min_node = 5;   // nodes with <= min_node rows become leaves
    int mtry = 0;       // 0 = max(1, floor(d/3))
};

struct NnConfig {
    int hidden = 3;           // logistic units in the single hidden layer
    int max_epochs = 10000;
    double init_step = 0.5;   // full-batch gradient step, halved on loss increase
    double rel_tol = 1e-8;    // stop when relative loss change drops below this
};

struct SurrogateConfig {
    GpConfig gp;
    RfConfig rf;
    NnConfig nn;
};

// Kind-specific trained state. Kept as plain structs; tests and the
// serializer read them directly.

struct GpModel {
    Eigen::MatrixXd inputs;     // standardized training inputs, n x d
    Eigen::VectorXd alpha;      // (K + nugget I)^-1 (y - mean)
    Eigen::VectorXd x_mean, x_scale;
    double target_mean = 0.0;
    double lengthscale = 0.0;   // on standardized inputs
    double signal_variance = 0.0;
    double nugget = 0.0;

    [[nodiscard]] double predict(const Eigen::VectorXd& x) const;
};

struct RfNode {
    std::int32_t feature = -1;  // -1: leaf
    double threshold = 0.0;     // split: x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         // leaf mean
};

struct RfModel {
    std::vector<std::vector<RfNode>> trees;
    std::int32_t dim = 0;

    [[nodiscard]] double predict(const Eigen::VectorXd& x) const;
};

struct NnModel {
    Eigen::MatrixXd w1;         // hidden x d
    Eigen::VectorXd b1;         // hidden
    Eigen::VectorXd w2;         // hidden
    double b2 = 0.0;
    Eigen::VectorXd x_mean, x_scale;
    double target_mean = 0.0;

    [[nodiscard]] double predict(const Eigen::VectorXd& x) const;
};

/// Trained scalar-output regression model behind a uniform interface.
class Surrogate {
public:
    Surrogate() = default;
    explicit Surrogate(GpModel m) : model_(std::move(m)) {}
    explicit Surrogate(RfModel m) : model_(std::move(m)) {}
    explicit Surrogate(NnModel m) : model_(std::move(m)) {}

    [[nodiscard]] SurrogateKind kind() const;
    [[nodiscard]] Eigen::Index input_dim() const;
    [[nodiscard]] double predict(const Eigen::VectorXd& x) const;

    template <class T>
    [[nodiscard]] const T& as() const {
        return std::get<T>(model_);
    }

    void save(std::ostream& out) const;
    [[nodiscard]] static Surrogate load(std::istream& in);

private:
    std::variant<GpModel, RfModel, NnModel> model_;
};

[[nodiscard]] Surrogate fit(SurrogateKind kind, const TrainingSet& ts, const SurrogateConfig& cfg,
                            RngSeed seed);

/// One surrogate per factor column: surrogate j is fit(kind, {inputs,
/// factor.col(j)}, cfg, seed.child(j)). Column fits run in parallel.
[[nodiscard]] std::vector<Surrogate> fit_mode_surrogates(const Eigen::MatrixXd& inputs,
                                                         const Eigen::MatrixXd& factor,
                                                         SurrogateKind kind,
                                                         const SurrogateConfig& cfg, RngSeed seed);

// Internals exposed for the NN gradient-check property test.
namespace nn_detail {
/// Mean squared error / 2 of the standardized-space network on (X, y).
double loss(const NnModel& m, const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_centered);
/// Analytic gradient, packed as [w1(row-major by unit), b1, w2, b2].
Eigen::VectorXd gradient(const NnModel& m, const Eigen::MatrixXd& x_std,
                         const Eigen::VectorXd& y_centered);
Eigen::VectorXd pack(const NnModel& m);
void unpack(NnModel& m, const Eigen::VectorXd& w);
}  // namespace nn_detail

}  // namespace temu
