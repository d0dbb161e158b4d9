#include "temu/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "temu/error.hpp"

namespace temu {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& ctx, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(ctx + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

RngSeed seed_or(const json& j, RngSeed fallback) {
    return RngSeed{get_or<std::uint64_t>(j, "seed", fallback.value)};
}

SurrogateConfig parse_surrogate(const json& j) {
    SurrogateConfig c;
    if (!j.contains("surrogate")) return c;
    const json& s = j.at("surrogate");
    check_keys(s, "surrogate", {"gp", "rf", "nn"});
    if (s.contains("gp")) {
        const json& g = s.at("gp");
        check_keys(g, "surrogate.gp",
                   {"lengthscale", "signal_variance", "nugget_rel", "tune_lengthscale"});
        c.gp.lengthscale = get_or(g, "lengthscale", c.gp.lengthscale);
        c.gp.signal_variance = get_or(g, "signal_variance", c.gp.signal_variance);
        c.gp.nugget_rel = get_or(g, "nugget_rel", c.gp.nugget_rel);
        c.gp.tune_lengthscale = get_or(g, "tune_lengthscale", c.gp.tune_lengthscale);
    }
    if (s.contains("rf")) {
        const json& r = s.at("rf");
        check_keys(r, "surrogate.rf", {"n_trees", "min_node", "mtry"});
        c.rf.n_trees = get_or(r, "n_trees", c.rf.n_trees);
        c.rf.min_node = get_or(r, "min_node", c.rf.min_node);
        c.rf.mtry = get_or(r, "mtry", c.rf.mtry);
    }
    if (s.contains("nn")) {
        const json& n = s.at("nn");
        check_keys(n, "surrogate.nn", {"hidden", "max_epochs", "init_step", "rel_tol"});
        c.nn.hidden = get_or(n, "hidden", c.nn.hidden);
        c.nn.max_epochs = get_or(n, "max_epochs", c.nn.max_epochs);
        c.nn.init_step = get_or(n, "init_step", c.nn.init_step);
        c.nn.rel_tol = get_or(n, "rel_tol", c.nn.rel_tol);
    }
    return c;
}

json surrogate_json(const SurrogateConfig& c) {
    return json{{"gp",
                 {{"lengthscale", c.gp.lengthscale},
                  {"signal_variance", c.gp.signal_variance},
                  {"nugget_rel", c.gp.nugget_rel},
                  {"tune_lengthscale", c.gp.tune_lengthscale}}},
                {"rf", {{"n_trees", c.rf.n_trees}, {"min_node", c.rf.min_node}, {"mtry", c.rf.mtry}}},
                {"nn",
                 {{"hidden", c.nn.hidden},
                  {"max_epochs", c.nn.max_epochs},
                  {"init_step", c.nn.init_step},
                  {"rel_tol", c.nn.rel_tol}}}};
}

GlacierParams parse_glacier_params(const json& j) {
    GlacierParams p;
    if (!j.contains("glacier")) return p;
    const json& g = j.at("glacier");
    check_keys(g, "glacier", {"length_m", "center_thickness_m", "glen_n"});
    p.length = get_or(g, "length_m", p.length);
    p.center_thickness = get_or(g, "center_thickness_m", p.center_thickness);
    p.glen_n = get_or(g, "glen_n", p.glen_n);
    return p;
}

json glacier_params_json(const GlacierParams& p) {
    return json{{"length_m", p.length},
                {"center_thickness_m", p.center_thickness},
                {"glen_n", p.glen_n}};
}

GlacierDesignRanges parse_ranges(const json& j) {
    GlacierDesignRanges r;
    if (!j.contains("ranges")) return r;
    const json& g = j.at("ranges");
    check_keys(g, "ranges", {"xy", "t", "period", "amplitude"});
    auto pair2 = [&](const char* key, double& lo, double& hi) {
        if (!g.contains(key)) return;
        const auto v = g.at(key).get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError(std::string("ranges.") + key + ": expected [lo, hi]");
        lo = v[0];
        hi = v[1];
    };
    pair2("xy", r.xy_lo, r.xy_hi);
    pair2("t", r.t_lo, r.t_hi);
    pair2("period", r.period_lo, r.period_hi);
    pair2("amplitude", r.amplitude_lo, r.amplitude_hi);
    return r;
}

json ranges_json(const GlacierDesignRanges& r) {
    return json{{"xy", {r.xy_lo, r.xy_hi}},
                {"t", {r.t_lo, r.t_hi}},
                {"period", {r.period_lo, r.period_hi}},
                {"amplitude", {r.amplitude_lo, r.amplitude_hi}}};
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

GlacierExperimentConfig parse_glacier_config(const json& j) {
    check_keys(j, "config",
               {"experiment", "seed", "sizes", "replicates", "combinations", "rank_spatial",
                "rank_params", "test_points", "save_emulators", "force", "glacier", "ranges",
                "surrogate"});
    GlacierExperimentConfig c;
    c.seed = seed_or(j, c.seed);
    c.sizes = get_or(j, "sizes", c.sizes);
    c.replicates = get_or(j, "replicates", c.replicates);
    c.combinations = get_or(j, "combinations", c.combinations);
    c.rank_spatial = get_or(j, "rank_spatial", c.rank_spatial);
    c.rank_params = get_or(j, "rank_params", c.rank_params);
    c.test_points = get_or(j, "test_points", c.test_points);
    c.save_emulators = get_or(j, "save_emulators", c.save_emulators);
    c.force = get_or(j, "force", c.force);
    c.glacier = parse_glacier_params(j);
    c.ranges = parse_ranges(j);
    c.surrogate = parse_surrogate(j);
    for (const auto& name : c.combinations) (void)glacier_combination(name);  // validate early
    if (c.sizes.empty() || c.replicates == 0 || c.test_points == 0)
        throw ConfigError("glacier config: sizes, replicates and test_points must be nonzero");
    return c;
}

json to_json(const GlacierExperimentConfig& c) {
    return json{{"experiment", "glacier"},
                {"seed", c.seed.value},
                {"sizes", c.sizes},
                {"replicates", c.replicates},
                {"combinations", c.combinations},
                {"rank_spatial", c.rank_spatial},
                {"rank_params", c.rank_params},
                {"test_points", c.test_points},
                {"save_emulators", c.save_emulators},
                {"force", c.force},
                {"glacier", glacier_params_json(c.glacier)},
                {"ranges", ranges_json(c.ranges)},
                {"surrogate", surrogate_json(c.surrogate)}};
}

FlatBaselineConfig parse_flat_config(const json& j) {
    check_keys(j, "config",
               {"experiment", "seed", "n_train", "kinds", "test_points", "glacier", "ranges",
                "surrogate"});
    FlatBaselineConfig c;
    c.seed = seed_or(j, c.seed);
    c.n_train = get_or(j, "n_train", c.n_train);
    c.kinds = get_or(j, "kinds", c.kinds);
    c.test_points = get_or(j, "test_points", c.test_points);
    c.glacier = parse_glacier_params(j);
    c.ranges = parse_ranges(j);
    c.surrogate = parse_surrogate(j);
    for (const auto& k : c.kinds) (void)surrogate_kind_from_string(k);
    if (c.n_train < 2 || c.test_points == 0)
        throw ConfigError("flat-baseline config: n_train and test_points must be sensible");
    return c;
}

json to_json(const FlatBaselineConfig& c) {
    return json{{"experiment", "flat-baseline"},
                {"seed", c.seed.value},
                {"n_train", c.n_train},
                {"kinds", c.kinds},
                {"test_points", c.test_points},
                {"glacier", glacier_params_json(c.glacier)},
                {"ranges", ranges_json(c.ranges)},
                {"surrogate", surrogate_json(c.surrogate)}};
}

AbmExperimentConfig parse_abm_config(const json& j) {
    check_keys(j, "config",
               {"experiment", "seed", "n_speeds", "n_radii", "speed_range", "radius_range",
                "agents", "times", "collision_radius", "noise_variance", "shared_noise", "cases",
                "force", "surrogate"});
    AbmExperimentConfig c;
    c.seed = seed_or(j, c.seed);
    c.n_speeds = get_or(j, "n_speeds", c.n_speeds);
    c.n_radii = get_or(j, "n_radii", c.n_radii);
    if (j.contains("speed_range")) {
        const auto v = j.at("speed_range").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("speed_range: expected [lo, hi]");
        c.speed_lo = v[0];
        c.speed_hi = v[1];
    }
    if (j.contains("radius_range")) {
        const auto v = j.at("radius_range").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("radius_range: expected [lo, hi]");
        c.radius_lo = v[0];
        c.radius_hi = v[1];
    }
    c.base.n_agents = get_or<std::size_t>(j, "agents", c.base.n_agents);
    c.base.n_times = get_or<std::size_t>(j, "times", c.base.n_times);
    c.base.collision_radius = get_or(j, "collision_radius", c.base.collision_radius);
    c.base.noise_variance = get_or(j, "noise_variance", c.base.noise_variance);
    c.shared_noise = get_or(j, "shared_noise", c.shared_noise);
    c.force = get_or(j, "force", c.force);
    if (j.contains("cases")) {
        c.cases.clear();
        for (const auto& cj : j.at("cases")) {
            check_keys(cj, "cases[]", {"v", "rho_o"});
            c.cases.emplace_back(cj.at("v").get<double>(), cj.at("rho_o").get<double>());
        }
    }
    c.surrogate = parse_surrogate(j);
    if (c.n_speeds == 0 || c.n_radii == 0 || c.cases.empty())
        throw ConfigError("abm config: design sizes and cases must be nonempty");
    return c;
}

json to_json(const AbmExperimentConfig& c) {
    json cases = json::array();
    for (const auto& [v, r] : c.cases) cases.push_back({{"v", v}, {"rho_o", r}});
    return json{{"experiment", "abm"},
                {"seed", c.seed.value},
                {"n_speeds", c.n_speeds},
                {"n_radii", c.n_radii},
                {"speed_range", {c.speed_lo, c.speed_hi}},
                {"radius_range", {c.radius_lo, c.radius_hi}},
                {"agents", c.base.n_agents},
                {"times", c.base.n_times},
                {"collision_radius", c.base.collision_radius},
                {"noise_variance", c.base.noise_variance},
                {"shared_noise", c.shared_noise},
                {"cases", cases},
                {"force", c.force},
                {"surrogate", surrogate_json(c.surrogate)}};
}

CalibrateRunConfig parse_calibrate_config(const json& j) {
    check_keys(j, "config",
               {"experiment", "seed", "emulator_x", "emulator_y", "observations", "priors",
                "grid_points", "iterations", "burn_in"});
    CalibrateRunConfig c;
    c.seed = seed_or(j, c.seed);
    if (!j.contains("emulator_x") || !j.contains("emulator_y") || !j.contains("observations"))
        throw ConfigError("calibrate config: emulator_x, emulator_y, observations are required");
    c.emulator_x = j.at("emulator_x").get<std::string>();
    c.emulator_y = j.at("emulator_y").get<std::string>();
    c.observations = j.at("observations").get<std::string>();
    if (j.contains("priors")) {
        const json& p = j.at("priors");
        check_keys(p, "priors", {"rho_o", "v", "sigma2"});
        auto pair2 = [&](const char* key, double& lo, double& hi) {
            if (!p.contains(key)) return;
            const auto v = p.at(key).get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError(std::string("priors.") + key + ": [lo, hi]");
            lo = v[0];
            hi = v[1];
        };
        pair2("rho_o", c.priors.rho_lo, c.priors.rho_hi);
        pair2("v", c.priors.v_lo, c.priors.v_hi);
        if (p.contains("sigma2")) {
            const json& s = p.at("sigma2");
            check_keys(s, "priors.sigma2", {"shape", "scale"});
            c.priors.sigma2_shape = get_or(s, "shape", c.priors.sigma2_shape);
            c.priors.sigma2_scale = get_or(s, "scale", c.priors.sigma2_scale);
        }
    }
    c.grid_points = get_or(j, "grid_points", c.grid_points);
    c.iterations = get_or(j, "iterations", c.iterations);
    c.burn_in = get_or(j, "burn_in", c.burn_in);
    if (c.burn_in >= c.iterations) throw ConfigError("calibrate config: burn_in >= iterations");
    c.priors.validate();
    return c;
}

json to_json(const CalibrateRunConfig& c) {
    return json{{"experiment", "calibrate"},
                {"seed", c.seed.value},
                {"emulator_x", c.emulator_x.string()},
                {"emulator_y", c.emulator_y.string()},
                {"observations", c.observations.string()},
                {"priors",
                 {{"rho_o", {c.priors.rho_lo, c.priors.rho_hi}},
                  {"v", {c.priors.v_lo, c.priors.v_hi}},
                  {"sigma2", {{"shape", c.priors.sigma2_shape}, {"scale", c.priors.sigma2_scale}}}}},
                {"grid_points", c.grid_points},
                {"iterations", c.iterations},
                {"burn_in", c.burn_in}};
}

FitConfig parse_fit_config(const json& j) {
    check_keys(j, "config",
               {"experiment", "seed", "tensor", "ranks", "modes", "output", "force", "surrogate"});
    FitConfig c;
    c.seed = seed_or(j, c.seed);
    if (!j.contains("tensor") || !j.contains("modes"))
        throw ConfigError("fit config: tensor and modes are required");
    c.tensor = j.at("tensor").get<std::string>();
    c.ranks = get_or(j, "ranks", c.ranks);
    for (const auto& mj : j.at("modes")) {
        check_keys(mj, "modes[]", {"type", "kind", "inputs"});
        FitModeConfig m;
        const auto type = mj.at("type").get<std::string>();
        if (type == "grid") {
            m.learned = false;
        } else if (type == "learned") {
            m.learned = true;
            m.kind = surrogate_kind_from_string(mj.at("kind").get<std::string>());
            m.inputs_csv = mj.at("inputs").get<std::string>();
        } else {
            throw ConfigError("modes[].type must be 'grid' or 'learned'");
        }
        c.modes.push_back(std::move(m));
    }
    c.output = get_or<std::string>(j, "output", c.output.string());
    c.force = get_or(j, "force", c.force);
    c.surrogate = parse_surrogate(j);
    return c;
}

json to_json(const FitConfig& c) {
    json modes = json::array();
    for (const auto& m : c.modes) {
        if (m.learned)
            modes.push_back({{"type", "learned"},
                             {"kind", to_string(m.kind)},
                             {"inputs", m.inputs_csv.string()}});
        else
            modes.push_back({{"type", "grid"}});
    }
    return json{{"experiment", "fit"},    {"seed", c.seed.value},
                {"tensor", c.tensor.string()}, {"ranks", c.ranks},
                {"modes", modes},         {"output", c.output.string()},
                {"force", c.force},       {"surrogate", surrogate_json(c.surrogate)}};
}

void write_resolved_config(const std::filesystem::path& out_dir, const json& j) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "resolved_config.json");
    if (!out) throw IoError("cannot write resolved config in " + out_dir.string());
    out << j.dump(2) << "\n";
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" +
                              cell + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path.string() + ": no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t jj = 0; jj < width; ++jj)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) = rows[i][jj];
    return m;
}

}  // namespace temu
