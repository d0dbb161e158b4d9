#include "temu/experiments.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "temu/error.hpp"
#include "temu/io.hpp"

namespace temu {

namespace fs = std::filesystem;

GlacierCombination glacier_combination(const std::string& name) {
    if (name == "rf") return {name, SurrogateKind::rf, SurrogateKind::rf, SurrogateKind::rf};
    if (name == "nn") return {name, SurrogateKind::nn, SurrogateKind::nn, SurrogateKind::nn};
    if (name == "gp") return {name, SurrogateKind::gp, SurrogateKind::gp, SurrogateKind::gp};
    if (name == "mixed") return {name, SurrogateKind::gp, SurrogateKind::gp, SurrogateKind::rf};
    throw ConfigError("unknown combination '" + name + "' (expected rf|nn|gp|mixed)");
}

GlacierTestSet draw_glacier_test_set(std::size_t n, RngSeed seed, const GlacierParams& fixed,
                                     const GlacierDesignRanges& ranges) {
    GlacierTestSet ts;
    ts.points.resize(static_cast<Eigen::Index>(n), 5);
    ts.truth.resize(n);
    std::size_t accepted = 0;
    std::uint64_t round = 0;
    while (accepted < n) {
        const std::size_t want = n - accepted;
        const auto xy = latin_hypercube(
            want, Bounds{{ranges.xy_lo, ranges.xy_hi}, {ranges.xy_lo, ranges.xy_hi}},
            seed.child(3 * round + 1));
        const auto t = uniform_sample(want, ranges.t_lo, ranges.t_hi, seed.child(3 * round + 2));
        const auto pa = latin_hypercube(want,
                                        Bounds{{ranges.period_lo, ranges.period_hi},
                                               {ranges.amplitude_lo, ranges.amplitude_hi}},
                                        seed.child(3 * round + 3));
        for (std::size_t i = 0; i < want; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double h =
                thickness(xy(ii, 0), xy(ii, 1), t[i], pa(ii, 0), pa(ii, 1), fixed);
            if (h < 1.0) continue;  // keep relative error well defined
            const auto a = static_cast<Eigen::Index>(accepted);
            ts.points(a, 0) = xy(ii, 0);
            ts.points(a, 1) = xy(ii, 1);
            ts.points(a, 2) = t[i];
            ts.points(a, 3) = pa(ii, 0);
            ts.points(a, 4) = pa(ii, 1);
            ts.truth[accepted] = h;
            ++accepted;
        }
        ++round;
    }
    return ts;
}

TensorEmulator fit_glacier_emulator(const GlacierTensor& gt, const GlacierCombination& combo,
                                    std::size_t rank_spatial, std::size_t rank_params,
                                    const SurrogateConfig& scfg, RngSeed seed) {
    const auto& dims = gt.values.dims();
    const std::size_t m = dims[0];
    const std::size_t s = dims[1];
    Eigen::MatrixXd t_inputs(static_cast<Eigen::Index>(s), 1);
    for (std::size_t j = 0; j < s; ++j)
        t_inputs(static_cast<Eigen::Index>(j), 0) = gt.design.t[j];

    std::vector<ModeSpec> specs;
    specs.push_back(ModeSpec::learn(combo.spatial, gt.design.xy, scfg));
    specs.push_back(ModeSpec::learn(combo.time, t_inputs, scfg));
    specs.push_back(ModeSpec::learn(combo.params, gt.design.pa, scfg));

    const std::vector<std::size_t> ranks{std::min(rank_spatial, m), s, std::min(rank_params, m)};
    return build_emulator(gt.values, ranks, std::move(specs), seed);
}

double glacier_emulator_mare(const TensorEmulator& emu, const GlacierTestSet& ts) {
    const auto n = static_cast<std::size_t>(ts.points.rows());
    std::vector<double> pred(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const Eigen::VectorXd xy = ts.points.row(i).segment(0, 2).transpose();
        const Eigen::VectorXd tt = ts.points.row(i).segment(2, 1).transpose();
        const Eigen::VectorXd pa = ts.points.row(i).segment(3, 2).transpose();
        pred[static_cast<std::size_t>(i)] = emulate_scalar(emu, {xy, tt, pa});
    }
    return mare(ts.truth, pred);
}

std::vector<GlacierRow> cmd_glacier_experiment(const GlacierExperimentConfig& cfg,
                                               const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<GlacierRow> rows;
    for (std::size_t s : cfg.sizes) {
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            const RngSeed rep_seed = cfg.seed.child(1000 * s + rep);
            const GlacierTensor gt =
                build_glacier_tensor(s, rep_seed.child(1), cfg.glacier, cfg.ranges, cfg.force);
            const GlacierTestSet ts =
                draw_glacier_test_set(cfg.test_points, rep_seed.child(2), cfg.glacier, cfg.ranges);
            for (const auto& name : cfg.combinations) {
                const auto combo = glacier_combination(name);
                TensorEmulator emu = fit_glacier_emulator(gt, combo, cfg.rank_spatial,
                                                          cfg.rank_params, cfg.surrogate,
                                                          rep_seed.child(3));
                GlacierRow row;
                row.s = s;
                row.combination = name;
                row.replicate = rep;
                row.mare = glacier_emulator_mare(emu, ts);
                row.residual = frobenius_residual(gt.values, emu.factors);
                rows.push_back(row);
                std::cout << "glacier s=" << s << " combo=" << name << " rep=" << rep
                          << " mare=" << row.mare << "\n";
                if (cfg.save_emulators) {
                    save_emulator(out_dir / ("emulator_s" + std::to_string(s) + "_" + name +
                                             "_r" + std::to_string(rep) + ".temuem"),
                                  emu);
                }
            }
            write_design_csv(out_dir / ("design_xy_s" + std::to_string(s) + "_r" +
                                        std::to_string(rep) + ".csv"),
                             {"x", "y"}, gt.design.xy);
            write_design_csv(out_dir / ("design_pa_s" + std::to_string(s) + "_r" +
                                        std::to_string(rep) + ".csv"),
                             {"period", "amplitude"}, gt.design.pa);
        }
    }
    std::vector<std::vector<double>> csv;
    std::vector<std::string> combos;
    for (const auto& r : rows) {
        double combo_id = 0;
        for (std::size_t i = 0; i < cfg.combinations.size(); ++i)
            if (cfg.combinations[i] == r.combination) combo_id = static_cast<double>(i);
        csv.push_back({static_cast<double>(r.s), combo_id, static_cast<double>(r.replicate),
                       r.mare, r.residual});
    }
    write_csv(out_dir / "glacier_errors.csv",
              {"s", "combination_id", "replicate", "mare", "fnorm_residual"}, csv);
    // Companion file mapping combination ids to names.
    std::ofstream key(out_dir / "glacier_combinations.csv");
    key << "combination_id,name\n";
    for (std::size_t i = 0; i < cfg.combinations.size(); ++i)
        key << i << "," << cfg.combinations[i] << "\n";
    return rows;
}

std::vector<FlatRow> cmd_flat_baseline(const FlatBaselineConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    // Training data: LHS over the joint 5-D box.
    const Bounds box{{cfg.ranges.xy_lo, cfg.ranges.xy_hi},
                     {cfg.ranges.xy_lo, cfg.ranges.xy_hi},
                     {cfg.ranges.t_lo, cfg.ranges.t_hi},
                     {cfg.ranges.period_lo, cfg.ranges.period_hi},
                     {cfg.ranges.amplitude_lo, cfg.ranges.amplitude_hi}};
    const Eigen::MatrixXd train = latin_hypercube(cfg.n_train, box, cfg.seed.child(1));
    Eigen::VectorXd targets(static_cast<Eigen::Index>(cfg.n_train));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cfg.n_train); ++i)
        targets(i) = thickness(train(i, 0), train(i, 1), train(i, 2), train(i, 3), train(i, 4),
                               cfg.glacier);

    const GlacierTestSet ts =
        draw_glacier_test_set(cfg.test_points, cfg.seed.child(2), cfg.glacier, cfg.ranges);

    std::vector<FlatRow> rows;
    for (const auto& kind_name : cfg.kinds) {
        const SurrogateKind kind = surrogate_kind_from_string(kind_name);
        const TrainingSet tset{train, targets};
        const Surrogate model = fit(kind, tset, cfg.surrogate, cfg.seed.child(3));
        std::vector<double> pred(static_cast<std::size_t>(ts.points.rows()));
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pred.size()); ++i)
            pred[static_cast<std::size_t>(i)] = model.predict(ts.points.row(i).transpose());
        FlatRow row{kind_name, cfg.n_train, mare(ts.truth, pred)};
        rows.push_back(row);
        std::cout << "flat-baseline kind=" << kind_name << " mare=" << row.mare << "\n";
    }

    std::vector<std::vector<double>> csv;
    for (std::size_t i = 0; i < rows.size(); ++i)
        csv.push_back({static_cast<double>(i), static_cast<double>(rows[i].n_train),
                       rows[i].mare});
    write_csv(out_dir / "flat_baseline_errors.csv", {"kind_id", "n_train", "mare"}, csv);
    std::ofstream key(out_dir / "flat_baseline_kinds.csv");
    key << "kind_id,name\n";
    for (std::size_t i = 0; i < rows.size(); ++i) key << i << "," << rows[i].kind << "\n";
    return rows;
}

namespace {

void write_trajectory_csv(const fs::path& path, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& y) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index t = 0; t < x.cols(); ++t)
            rows.push_back({static_cast<double>(i), static_cast<double>(t), x(i, t), y(i, t)});
    write_csv(path, {"agent_id", "time_index", "x", "y"}, rows);
}

void write_metrics_csv(const fs::path& path, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       std::vector<double>* spread_out = nullptr,
                       std::vector<double>* elong_out = nullptr) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
        Eigen::MatrixXd pos(x.rows(), 2);
        pos.col(0) = x.col(t);
        pos.col(1) = y.col(t);
        const double sp = troop_spread(pos);
        const double el = troop_elongation(pos);
        rows.push_back({static_cast<double>(t), sp, el});
        if (spread_out) spread_out->push_back(sp);
        if (elong_out) elong_out->push_back(el);
    }
    write_csv(path, {"time_index", "spread", "elongation"}, rows);
}

}  // namespace

std::vector<AbmCaseRow> cmd_abm_experiment(const AbmExperimentConfig& cfg,
                                           const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const auto speeds = uniform_sample(cfg.n_speeds, cfg.speed_lo, cfg.speed_hi, cfg.seed.child(1));
    const auto radii =
        uniform_sample(cfg.n_radii, cfg.radius_lo, cfg.radius_hi, cfg.seed.child(2));
    const AbmState init = default_initial_state(cfg.base.n_agents, cfg.seed.child(3));
    const RngSeed noise_seed = cfg.seed.child(4);

    const AbmTensors tensors = build_abm_tensors(speeds, radii, cfg.base, init, noise_seed,
                                                 cfg.shared_noise, cfg.force);
    write_tensor(out_dir / "abm_x.temu", tensors.x);
    write_tensor(out_dir / "abm_y.temu", tensors.y);
    {
        Eigen::MatrixXd sp(static_cast<Eigen::Index>(speeds.size()), 1);
        for (std::size_t i = 0; i < speeds.size(); ++i)
            sp(static_cast<Eigen::Index>(i), 0) = speeds[i];
        write_design_csv(out_dir / "design_speeds.csv", {"v"}, sp);
        Eigen::MatrixXd ra(static_cast<Eigen::Index>(radii.size()), 1);
        for (std::size_t i = 0; i < radii.size(); ++i)
            ra(static_cast<Eigen::Index>(i), 0) = radii[i];
        write_design_csv(out_dir / "design_radii.csv", {"rho_o"}, ra);
    }

    Eigen::MatrixXd v_inputs(static_cast<Eigen::Index>(speeds.size()), 1);
    for (std::size_t i = 0; i < speeds.size(); ++i)
        v_inputs(static_cast<Eigen::Index>(i), 0) = speeds[i];
    Eigen::MatrixXd r_inputs(static_cast<Eigen::Index>(radii.size()), 1);
    for (std::size_t i = 0; i < radii.size(); ++i)
        r_inputs(static_cast<Eigen::Index>(i), 0) = radii[i];

    const std::vector<std::size_t> full_ranks = tensors.x.dims();
    auto specs = [&](SurrogateKind v_kind, SurrogateKind r_kind) {
        return std::vector<ModeSpec>{ModeSpec::grid(), ModeSpec::grid(),
                                     ModeSpec::learn(v_kind, v_inputs, cfg.surrogate),
                                     ModeSpec::learn(r_kind, r_inputs, cfg.surrogate)};
    };

    // Pure RF for both coordinates; mixed swaps a GP in for the v component
    // of the x positions.
    TensorEmulator emu_x_rf = build_emulator(tensors.x, full_ranks,
                                             specs(SurrogateKind::rf, SurrogateKind::rf),
                                             cfg.seed.child(10));
    TensorEmulator emu_y_rf = build_emulator(tensors.y, full_ranks,
                                             specs(SurrogateKind::rf, SurrogateKind::rf),
                                             cfg.seed.child(11));
    TensorEmulator emu_x_mixed = build_emulator(tensors.x, full_ranks,
                                                specs(SurrogateKind::gp, SurrogateKind::rf),
                                                cfg.seed.child(12));
    save_emulator(out_dir / "abm_emulator_x_rf.temuem", emu_x_rf);
    save_emulator(out_dir / "abm_emulator_y_rf.temuem", emu_y_rf);
    save_emulator(out_dir / "abm_emulator_x_mixed.temuem", emu_x_mixed);

    std::vector<AbmCaseRow> rows;
    std::size_t case_id = 1;
    for (const auto& [v, rho] : cfg.cases) {
        AbmParams p = cfg.base;
        p.speed = v;
        p.orientation_radius = rho;
        const Trajectories sim = simulate(init, p, noise_seed);
        const std::string tag = "case" + std::to_string(case_id);
        write_trajectory_csv(out_dir / (tag + "_sim.csv"), sim.x, sim.y);
        std::vector<double> sp_sim, el_sim;
        write_metrics_csv(out_dir / (tag + "_sim_metrics.csv"), sim.x, sim.y, &sp_sim, &el_sim);

        const Query q{Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, rho)};
        struct EmuPair {
            const char* name;
            const TensorEmulator* ex;
        };
        for (const auto& [name, ex] : {EmuPair{"rf", &emu_x_rf}, EmuPair{"mixed", &emu_x_mixed}}) {
            const Eigen::MatrixXd ex_grid = emulate(*ex, q).as_matrix();
            const Eigen::MatrixXd ey_grid = emulate(emu_y_rf, q).as_matrix();
            write_trajectory_csv(out_dir / (tag + "_emulated_" + name + ".csv"), ex_grid, ey_grid);
            std::vector<double> sp_emu, el_emu;
            write_metrics_csv(out_dir / (tag + "_emulated_" + name + "_metrics.csv"), ex_grid,
                              ey_grid, &sp_emu, &el_emu);

            AbmCaseRow row;
            row.v = v;
            row.rho = rho;
            row.emulator = name;
            double sp_acc = 0.0, el_acc = 0.0, sp_mean = 0.0;
            for (std::size_t t = 0; t < sp_sim.size(); ++t) {
                sp_acc += std::abs(sp_emu[t] - sp_sim[t]);
                el_acc += std::abs(el_emu[t] - el_sim[t]);
                sp_mean += sp_sim[t];
            }
            const auto T = static_cast<double>(sp_sim.size());
            row.spread_err = sp_acc / T;
            row.elong_err = el_acc / T;
            row.spread_sim_mean = sp_mean / T;
            rows.push_back(row);
            std::cout << "abm " << tag << " emulator=" << name
                      << " spread_err=" << row.spread_err << " elong_err=" << row.elong_err
                      << "\n";
        }
        ++case_id;
    }

    std::vector<std::vector<double>> csv;
    for (const auto& r : rows)
        csv.push_back({r.v, r.rho, r.emulator == "mixed" ? 1.0 : 0.0, r.spread_err, r.elong_err,
                       r.spread_sim_mean});
    write_csv(out_dir / "abm_case_errors.csv",
              {"v", "rho_o", "is_mixed", "spread_err", "elongation_err", "spread_sim_mean"}, csv);
    return rows;
}

ChainSummary cmd_calibrate(const CalibrateRunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const TensorEmulator emu_x = load_emulator(cfg.emulator_x);
    const TensorEmulator emu_y = load_emulator(cfg.emulator_y);
    if (emu_x.order() != 4 || emu_y.order() != 4 || emu_x.specs[0].learned ||
        emu_x.specs[1].learned || !emu_x.specs[2].learned || !emu_x.specs[3].learned)
        throw ConfigError("calibrate: emulators must be (grid, grid, learned, learned)");

    ObservationSet obs = ObservationSet::from_csv(cfg.observations);
    obs.validate(static_cast<std::size_t>(emu_x.factors.factors[0].rows()),
                 static_cast<std::size_t>(emu_x.factors.factors[1].rows()));

    const CalibrationGrids grids = CalibrationGrids::regular(cfg.priors, cfg.grid_points);
    const Chain chain = gibbs(obs, cfg.priors, grids, cfg.iterations, cfg.seed, emu_x, emu_y);
    write_chain_csv(out_dir / "chain.csv", chain);

    const ChainSummary s = chain_summary(chain, cfg.burn_in);
    std::vector<std::vector<double>> csv{
        {0, s.rho.mean, s.rho.lo95, s.rho.hi95},
        {1, s.v.mean, s.v.lo95, s.v.hi95},
        {2, s.sigma2_x.mean, s.sigma2_x.lo95, s.sigma2_x.hi95},
        {3, s.sigma2_y.mean, s.sigma2_y.lo95, s.sigma2_y.hi95}};
    write_csv(out_dir / "summary.csv", {"parameter_id", "mean", "lo95", "hi95"}, csv);
    std::ofstream key(out_dir / "summary_parameters.csv");
    key << "parameter_id,name\n0,rho_o\n1,v\n2,sigma2_x\n3,sigma2_y\n";
    std::cout << "calibrate: posterior mean rho_o=" << s.rho.mean << " v=" << s.v.mean << "\n";
    return s;
}

}  // namespace temu
