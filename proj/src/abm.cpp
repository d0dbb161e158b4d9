#include "temu/abm.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include "temu/error.hpp"

namespace temu {

void AbmParams::validate() const {
    if (!(collision_radius > 0.0) || !(collision_radius < orientation_radius))
        throw ArgumentError("AbmParams: need 0 < alpha < rho_o");
    if (!(speed > 0.0)) throw ArgumentError("AbmParams: speed must be > 0");
    if (noise_variance < 0.0) throw ArgumentError("AbmParams: noise variance must be >= 0");
    if (n_agents < 1 || n_times < 1) throw ArgumentError("AbmParams: need agents and times >= 1");
}

void AbmState::validate() const {
    if (positions.rows() != directions.rows() || positions.cols() != 2 || directions.cols() != 2)
        throw ArgumentError("AbmState: positions/directions must be n x 2");
    for (Eigen::Index i = 0; i < directions.rows(); ++i)
        if (std::abs(directions.row(i).norm() - 1.0) > 1e-9)
            throw ArgumentError("AbmState: direction " + std::to_string(i) + " is not unit norm");
}

Eigen::Vector2d direction_update(const AbmState& state, std::size_t i, const AbmParams& params,
                                 Rng& tie_break_rng) {
    const auto n = state.n_agents();
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    Eigen::Vector2d dir = Eigen::Vector2d::Zero();

    bool any_collision = false;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        const Eigen::Vector2d delta = state.positions.row(jj) - state.positions.row(ii);
        const double dist = delta.norm();
        if (dist < params.collision_radius) {
            any_collision = true;
            if (dist > 1e-12) dir -= delta / dist;  // coincident agents give no direction
        }
    }

    if (!any_collision) {
        bool any_neighbor = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Eigen::Index jj = static_cast<Eigen::Index>(j);
            const double dist = (state.positions.row(jj) - state.positions.row(ii)).norm();
            if (dist > params.collision_radius && dist <= params.orientation_radius) {
                any_neighbor = true;
                dir += state.directions.row(jj).normalized().transpose();
            }
        }
        if (any_neighbor) {
            dir += state.directions.row(ii).normalized().transpose();  // self included
        } else {
            return state.directions.row(ii);  // case 3: persist
        }
    }

    const double norm = dir.norm();
    if (norm < 1e-12) {
        // Exactly opposing contributions: keep the previous heading; if that
        // is also degenerate, draw a random unit vector.
        const Eigen::Vector2d prev = state.directions.row(ii);
        if (prev.norm() > 1e-12) return prev.normalized();
        const double angle = tie_break_rng.uniform(0.0, 2.0 * std::numbers::pi);
        return {std::cos(angle), std::sin(angle)};
    }
    return dir / norm;
}

AbmState abm_step(const AbmState& state, const AbmParams& params, Rng& rng) {
    const auto n = state.n_agents();
    AbmState next;
    next.positions.resize(static_cast<Eigen::Index>(n), 2);
    next.directions.resize(static_cast<Eigen::Index>(n), 2);

    // Synchronous update: every heading reads only the t-1 state.
    for (std::size_t i = 0; i < n; ++i)
        next.directions.row(static_cast<Eigen::Index>(i)) =
            direction_update(state, i, params, rng).transpose();

    const double sd = std::sqrt(params.noise_variance);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        Eigen::Vector2d noise = Eigen::Vector2d::Zero();
        if (params.noise_variance > 0.0) noise = {sd * rng.normal(), sd * rng.normal()};
        next.positions.row(ii) =
            state.positions.row(ii) + params.speed * next.directions.row(ii) + noise.transpose();
    }
    return next;
}

Trajectories simulate(const AbmState& init, const AbmParams& params, RngSeed seed) {
    params.validate();
    init.validate();
    if (init.n_agents() != params.n_agents)
        throw ArgumentError("simulate: initial state has wrong agent count");

    const auto n = static_cast<Eigen::Index>(params.n_agents);
    const auto T = static_cast<Eigen::Index>(params.n_times);
    Trajectories out;
    out.x.resize(n, T);
    out.y.resize(n, T);

    Rng rng(seed);
    AbmState state = init;
    out.x.col(0) = state.positions.col(0);
    out.y.col(0) = state.positions.col(1);
    for (Eigen::Index t = 1; t < T; ++t) {
        state = abm_step(state, params, rng);
        out.x.col(t) = state.positions.col(0);
        out.y.col(t) = state.positions.col(1);
    }
    return out;
}

AbmState default_initial_state(std::size_t n_agents, RngSeed seed) {
    Rng rng(seed);
    AbmState s;
    s.positions.resize(static_cast<Eigen::Index>(n_agents), 2);
    s.directions.resize(static_cast<Eigen::Index>(n_agents), 2);
    for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
        s.positions(i, 0) = rng.uniform(0.0, 10.0);
        s.positions(i, 1) = rng.uniform(0.0, 10.0);
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        s.directions(i, 0) = std::cos(angle);
        s.directions(i, 1) = std::sin(angle);
    }
    return s;
}

AbmTensors build_abm_tensors(const std::vector<double>& speeds,
                             const std::vector<double>& orientation_radii, const AbmParams& base,
                             const AbmState& init, RngSeed seed, bool shared_noise, bool force) {
    if (speeds.empty() || orientation_radii.empty())
        throw ArgumentError("build_abm_tensors: empty parameter design");
    const std::size_t pa = speeds.size();
    const std::size_t pb = orientation_radii.size();
    const double cells = static_cast<double>(base.n_agents) * static_cast<double>(base.n_times) *
                         static_cast<double>(pa) * static_cast<double>(pb);
    if (cells > 1e8 && !force)
        throw ResourceError("ABM tensors would have " + std::to_string(cells) +
                            " cells (> 1e8); pass force to override");

    AbmTensors out;
    out.design = {speeds, orientation_radii, base, init, shared_noise};
    const std::size_t n = base.n_agents;
    const std::size_t T = base.n_times;
    out.x = Tensor({n, T, pa, pb});
    out.y = Tensor({n, T, pa, pb});
    double* xd = out.x.data().data();
    double* yd = out.y.data().data();

#pragma omp parallel for collapse(2) schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(pb); ++b) {
        for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(pa); ++a) {
            AbmParams p = base;
            p.speed = speeds[static_cast<std::size_t>(a)];
            p.orientation_radius = orientation_radii[static_cast<std::size_t>(b)];
            const RngSeed run_seed =
                shared_noise ? seed
                             : seed.child(static_cast<std::uint64_t>(a) * pb +
                                          static_cast<std::uint64_t>(b) + 1);
            const Trajectories tr = simulate(init, p, run_seed);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t off = i + n * (t + T * (static_cast<std::size_t>(a) +
                                                              pa * static_cast<std::size_t>(b)));
                    xd[off] = tr.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
                    yd[off] = tr.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
                }
        }
    }
    return out;
}

double troop_spread(const Eigen::MatrixXd& positions) {
    if (positions.rows() < 1 || positions.cols() != 2)
        throw ArgumentError("troop_spread: positions must be n x 2, n >= 1");
    const Eigen::RowVector2d centroid = positions.colwise().mean();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
        acc += (positions.row(i) - centroid).norm();
    return acc / static_cast<double>(positions.rows());
}

double troop_elongation(const Eigen::MatrixXd& positions) {
    if (positions.rows() < 2 || positions.cols() != 2)
        throw ArgumentError("troop_elongation: positions must be n x 2, n >= 2");
    const Eigen::RowVector2d centroid = positions.colwise().mean();
    const Eigen::MatrixXd centered = positions.rowwise() - centroid;
    Eigen::Matrix2d cov = centered.transpose() * centered / static_cast<double>(positions.rows());
    // Eigenvalues of a symmetric 2x2 in closed form.
    const double tr = cov(0, 0) + cov(1, 1);
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lmax = tr / 2.0 + disc;
    const double lmin = tr / 2.0 - disc;
    if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(lmax / lmin);
}

}  // namespace temu
