// temu: multi-surrogate tensor emulation toolkit.
//
// Subcommands: glacier-experiment, flat-baseline, abm-experiment, fit,
// predict, bootstrap, calibrate, tensor-info. Every run is deterministic
// given its config and seed, and writes the resolved config next to its
// outputs.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "temu/config.hpp"
#include "temu/error.hpp"
#include "temu/io.hpp"

namespace fs = std::filesystem;
using temu::ConfigError;

namespace {

// 0 success, 2 config/argument, 3 resource guard, 4 numerical, 5 I/O.
enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kConfig = 2,
    kResource = 3,
    kNumerical = 4,
    kIo = 5,
};

struct GlobalOpts {
    std::string config_path;
    fs::path out_dir = "out";
    std::uint64_t seed = 0;  // 0: keep the config's seed
    int workers = 0;         // 0: OpenMP default
};

nlohmann::json load_and_check(const GlobalOpts& g, const std::string& expected) {
    if (g.config_path.empty()) throw ConfigError("--config is required for this subcommand");
    auto j = temu::load_config_file(g.config_path);
    if (j.contains("experiment") && j.at("experiment").get<std::string>() != expected)
        throw ConfigError("config experiment '" + j.at("experiment").get<std::string>() +
                          "' does not match subcommand '" + expected + "'");
    return j;
}

template <class Cfg>
void apply_overrides(Cfg& cfg, const GlobalOpts& g) {
    if (g.seed != 0) cfg.seed = temu::RngSeed{g.seed};
}

std::vector<temu::Query> read_queries(const fs::path& path, const temu::TensorEmulator& emu) {
    const Eigen::MatrixXd m = temu::read_matrix_csv(path);
    std::vector<Eigen::Index> widths;
    Eigen::Index total = 0;
    for (std::size_t k = 0; k < emu.order(); ++k)
        if (emu.specs[k].learned) {
            widths.push_back(emu.specs[k].inputs.cols());
            total += widths.back();
        }
    if (m.cols() != total)
        throw temu::ArgumentError("query file has " + std::to_string(m.cols()) +
                                  " columns; emulator expects " + std::to_string(total));
    std::vector<temu::Query> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        temu::Query q;
        Eigen::Index at = 0;
        for (Eigen::Index w : widths) {
            q.push_back(m.row(i).segment(at, w).transpose());
            at += w;
        }
        out.push_back(std::move(q));
    }
    return out;
}

void cmd_predict(const GlobalOpts& g, const std::string& emulator_path,
                 const std::string& query_path) {
    const auto emu = temu::load_emulator(emulator_path);
    const auto queries = read_queries(query_path, emu);
    fs::create_directories(g.out_dir);

    bool scalar = true;
    for (std::size_t k = 0; k < emu.order(); ++k)
        if (!emu.specs[k].learned) scalar = false;

    if (scalar) {
        std::vector<std::vector<double>> rows;
        for (const auto& q : queries) {
            std::vector<double> row;
            for (const auto& v : q)
                for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
            row.push_back(temu::emulate_scalar(emu, q));
            rows.push_back(std::move(row));
        }
        std::vector<std::string> header;
        for (std::size_t c = 0; c + 1 < rows.front().size(); ++c)
            header.push_back("q" + std::to_string(c));
        header.push_back("prediction");
        temu::write_csv(g.out_dir / "predictions.csv", header, rows);
        std::cout << "wrote " << (g.out_dir / "predictions.csv").string() << "\n";
        return;
    }

    std::vector<std::vector<double>> index;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const temu::Tensor t = temu::emulate(emu, queries[i]);
        char name[32];
        std::snprintf(name, sizeof name, "prediction_%04zu.temu", i);
        temu::write_tensor(g.out_dir / name, t);
        index.push_back({static_cast<double>(i)});
    }
    temu::write_csv(g.out_dir / "predictions_index.csv", {"query_row"}, index);
    std::cout << "wrote " << queries.size() << " prediction tensors to " << g.out_dir.string()
              << "\n";
}

void cmd_bootstrap(const GlobalOpts& g, const std::string& emulator_path,
                   const std::string& query_path, std::size_t replicates, bool keep_samples) {
    const auto emu = temu::load_emulator(emulator_path);
    const auto queries = read_queries(query_path, emu);
    if (queries.size() != 1)
        throw temu::ArgumentError("bootstrap expects exactly one query row, got " +
                                  std::to_string(queries.size()));
    fs::create_directories(g.out_dir);
    const temu::RngSeed seed{g.seed != 0 ? g.seed : 20240601};
    const auto samples = temu::bootstrap_predict(emu, queries[0], replicates, seed);

    if (samples.front().size() == 1) {
        std::vector<std::vector<double>> rows;
        for (std::size_t b = 0; b < samples.size(); ++b)
            rows.push_back({static_cast<double>(b), samples[b][0]});
        temu::write_csv(g.out_dir / "bootstrap_samples.csv", {"replicate", "value"}, rows);
        std::cout << "wrote " << (g.out_dir / "bootstrap_samples.csv").string() << "\n";
        return;
    }

    // Tensor-valued output: mean and standard deviation tensors, plus the raw
    // replicates when asked for.
    temu::Tensor mean(samples.front().dims());
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
    for (std::size_t i = 0; i < mean.size(); ++i)
        mean[i] /= static_cast<double>(samples.size());
    temu::Tensor sd(samples.front().dims());
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = s[i] - mean[i];
            sd[i] += d * d;
        }
    for (std::size_t i = 0; i < sd.size(); ++i)
        sd[i] = std::sqrt(sd[i] / static_cast<double>(samples.size()));
    temu::write_tensor(g.out_dir / "bootstrap_mean.temu", mean);
    temu::write_tensor(g.out_dir / "bootstrap_sd.temu", sd);
    if (keep_samples) {
        for (std::size_t b = 0; b < samples.size(); ++b) {
            char name[32];
            std::snprintf(name, sizeof name, "bootstrap_%05zu.temu", b);
            temu::write_tensor(g.out_dir / name, samples[b]);
        }
    }
    std::cout << "wrote bootstrap mean/sd tensors to " << g.out_dir.string() << "\n";
}

void cmd_fit(const GlobalOpts& g) {
    auto j = load_and_check(g, "fit");
    auto cfg = temu::parse_fit_config(j);
    apply_overrides(cfg, g);
    const temu::Tensor t = temu::read_tensor(cfg.tensor);
    if (cfg.modes.size() != t.order())
        throw ConfigError("fit: config has " + std::to_string(cfg.modes.size()) +
                          " modes but tensor has order " + std::to_string(t.order()));

    std::vector<std::size_t> ranks = cfg.ranks.empty()
                                         ? t.dims()
                                         : cfg.ranks;
    if (ranks.size() != t.order()) throw ConfigError("fit: ranks length != tensor order");
    for (std::size_t k = 0; k < ranks.size(); ++k)
        if (ranks[k] == 0) ranks[k] = t.dim(k);  // 0 means full rank
    std::size_t core_cells = 1;
    for (std::size_t r : ranks) core_cells *= r;
    if (core_cells > 1000000)
        std::cerr << "warning: core tensor has " << core_cells
                  << " cells; consider truncating ranks\n";

    std::vector<temu::ModeSpec> specs;
    for (const auto& m : cfg.modes) {
        if (!m.learned) {
            specs.push_back(temu::ModeSpec::grid());
        } else {
            specs.push_back(temu::ModeSpec::learn(m.kind, temu::read_matrix_csv(m.inputs_csv),
                                                  cfg.surrogate));
        }
    }
    const auto emu = temu::build_emulator(t, ranks, std::move(specs), cfg.seed);
    fs::create_directories(g.out_dir);
    const fs::path out = cfg.output.is_absolute() ? cfg.output : g.out_dir / cfg.output;
    temu::save_emulator(out, emu);
    temu::write_resolved_config(g.out_dir, temu::to_json(cfg));
    std::cout << "wrote " << out.string() << "\n";
}

void cmd_tensor_info(const std::string& path) {
    const temu::Tensor t = temu::read_tensor(path);
    std::cout << "order: " << t.order() << "\ndims:";
    for (std::size_t d : t.dims()) std::cout << ' ' << d;
    double mn = t[0], mx = t[0];
    for (std::size_t i = 1; i < t.size(); ++i) {
        mn = std::min(mn, t[i]);
        mx = std::max(mx, t[i]);
    }
    std::cout << "\ncells: " << t.size() << "\nfrobenius_norm: " << t.frobenius_norm()
              << "\nmin: " << mn << "\nmax: " << mx << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-surrogate tensor emulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--out-dir", g.out_dir, "output directory (default: out)");
    app.add_option("--seed", g.seed, "override the config seed (nonzero)");
    app.add_option("--workers", g.workers, "OpenMP thread count (0: default)");

    auto* sc_glacier = app.add_subcommand("glacier-experiment",
                                          "tensor-emulator accuracy study on the glacier solver");
    auto* sc_flat = app.add_subcommand("flat-baseline",
                                       "surrogates on raw 5-tuples, no tensor decomposition");
    auto* sc_abm = app.add_subcommand("abm-experiment",
                                      "collective-movement emulation study");
    auto* sc_fit = app.add_subcommand("fit", "fit an emulator from a TEMU1 tensor file");
    auto* sc_cal = app.add_subcommand("calibrate", "Gibbs calibration from observed trajectories");

    auto* sc_pred = app.add_subcommand("predict", "evaluate a fitted emulator at query points");
    std::string emulator_path, query_path;
    sc_pred->add_option("--emulator", emulator_path, "emulator file")->required();
    sc_pred->add_option("--query", query_path, "query CSV")->required();

    auto* sc_boot = app.add_subcommand("bootstrap", "bootstrap predictive samples at one query");
    std::size_t replicates = 1000;
    bool keep_samples = false;
    sc_boot->add_option("--emulator", emulator_path, "emulator file")->required();
    sc_boot->add_option("--query", query_path, "query CSV (single row)")->required();
    sc_boot->add_option("--replicates", replicates, "number of bootstrap replicates");
    sc_boot->add_flag("--samples", keep_samples, "also write every replicate tensor");

    auto* sc_info = app.add_subcommand("tensor-info", "describe a TEMU1 tensor file");
    std::string tensor_path;
    sc_info->add_option("file", tensor_path, "TEMU1 file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    if (g.workers > 0) omp_set_num_threads(g.workers);

    try {
        if (sc_glacier->parsed()) {
            auto cfg = temu::parse_glacier_config(load_and_check(g, "glacier"));
            apply_overrides(cfg, g);
            temu::write_resolved_config(g.out_dir, temu::to_json(cfg));
            temu::cmd_glacier_experiment(cfg, g.out_dir);
        } else if (sc_flat->parsed()) {
            auto cfg = temu::parse_flat_config(load_and_check(g, "flat-baseline"));
            apply_overrides(cfg, g);
            temu::write_resolved_config(g.out_dir, temu::to_json(cfg));
            temu::cmd_flat_baseline(cfg, g.out_dir);
        } else if (sc_abm->parsed()) {
            auto cfg = temu::parse_abm_config(load_and_check(g, "abm"));
            apply_overrides(cfg, g);
            temu::write_resolved_config(g.out_dir, temu::to_json(cfg));
            temu::cmd_abm_experiment(cfg, g.out_dir);
        } else if (sc_cal->parsed()) {
            auto cfg = temu::parse_calibrate_config(load_and_check(g, "calibrate"));
            apply_overrides(cfg, g);
            temu::write_resolved_config(g.out_dir, temu::to_json(cfg));
            temu::cmd_calibrate(cfg, g.out_dir);
        } else if (sc_fit->parsed()) {
            cmd_fit(g);
        } else if (sc_pred->parsed()) {
            cmd_predict(g, emulator_path, query_path);
        } else if (sc_boot->parsed()) {
            cmd_bootstrap(g, emulator_path, query_path, replicates, keep_samples);
        } else if (sc_info->parsed()) {
            cmd_tensor_info(tensor_path);
        }
    } catch (const temu::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const temu::ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kConfig;
    } catch (const temu::ResourceError& e) {
        std::cerr << "resource guard: " << e.what() << "\n";
        std::cerr << "hint: reduce the design size, or set \"force\": true to override\n";
        return kResource;
    } catch (const temu::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const temu::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kNumerical;
    } catch (const temu::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOk;
}
