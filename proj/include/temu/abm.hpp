#pragma once

#include <Eigen/Dense>
#include <vector>

#include "temu/rng.hpp"
#include "temu/tensor.hpp"

namespace temu {

/// Collective-movement parameters: agents repel inside the no-collision
/// radius, align with neighbors in the orientation annulus, and otherwise
/// keep their previous heading.
struct AbmParams {
    double speed = 0.5;               // v, distance per step
    double orientation_radius = 35.0; // rho_o
    double collision_radius = 0.5;    // alpha
    double noise_variance = 0.025;    // sigma^2_eta per coordinate
    std::size_t n_agents = 20;
    std::size_t n_times = 101;        // columns in the trajectory (incl. t = 0)

    void validate() const;
};

struct AbmState {
    Eigen::MatrixXd positions;   // n x 2
    Eigen::MatrixXd directions;  // n x 2, unit rows

    [[nodiscard]] std::size_t n_agents() const { return static_cast<std::size_t>(positions.rows()); }
    void validate() const;
};

/// Agent x/y coordinates over time, one column per time point.
struct Trajectories {
    Eigen::MatrixXd x;  // n_agents x n_times
    Eigen::MatrixXd y;
};

/// New unit heading for agent i from the t-1 state. Case 1 (any neighbor
/// closer than alpha): repulsion away from those neighbors. Case 2 (any
/// neighbor in (alpha, rho_o]): average heading of those neighbors plus the
/// agent itself. Case 3: previous heading. A degenerate sum falls back to the
/// previous heading, then to a seeded random unit vector.
[[nodiscard]] Eigen::Vector2d direction_update(const AbmState& state, std::size_t i,
                                               const AbmParams& params, Rng& tie_break_rng);

/// One synchronous step: all headings from the previous state, then every
/// position advances by speed * heading + Gaussian noise.
[[nodiscard]] AbmState abm_step(const AbmState& state, const AbmParams& params, Rng& rng);

/// Run the simulator; column t holds the positions after t steps, column 0 is
/// the initial state.
[[nodiscard]] Trajectories simulate(const AbmState& init, const AbmParams& params, RngSeed seed);

/// Seeded default initial configuration: uniform scatter in a 10 x 10 box
/// with random unit headings.
[[nodiscard]] AbmState default_initial_state(std::size_t n_agents, RngSeed seed);

struct AbmTensorDesign {
    std::vector<double> speeds;              // sampled v values
    std::vector<double> orientation_radii;   // sampled rho_o values
    AbmParams base;
    AbmState init;
    bool shared_noise = true;
};

struct AbmTensors {
    Tensor x;  // n_agents x n_times x |speeds| x |radii|
    Tensor y;
    AbmTensorDesign design;
};

/// Training tensors over a (v, rho_o) design. With shared_noise (default) a
/// single noise stream is reused for every parameter combination, making the
/// tensor a deterministic function of (i, t, v, rho_o); otherwise each
/// combination gets an independent stream derived from (seed, a, b).
[[nodiscard]] AbmTensors build_abm_tensors(const std::vector<double>& speeds,
                                           const std::vector<double>& orientation_radii,
                                           const AbmParams& base, const AbmState& init,
                                           RngSeed seed, bool shared_noise = true,
                                           bool force = false);

/// Mean distance from the group centroid.
[[nodiscard]] double troop_spread(const Eigen::MatrixXd& positions);

/// sqrt(lambda_max / lambda_min) of the 2x2 positional covariance; returns
/// +infinity when the minor axis is degenerate.
[[nodiscard]] double troop_elongation(const Eigen::MatrixXd& positions);

}  // namespace temu
