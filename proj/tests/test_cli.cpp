#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "temu/config.hpp"
#include "temu/error.hpp"
#include "temu/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("temu_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TEMU_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("config parsing rejects unknown keys and bad values") {
    CHECK_THROWS_AS((void)temu::parse_glacier_config(json{{"szies", {10}}}), temu::ConfigError);
    CHECK_THROWS_AS((void)temu::parse_glacier_config(json{{"combinations", {"boost"}}}),
                    temu::ConfigError);
    CHECK_THROWS_AS((void)temu::parse_abm_config(json{{"cases", json::array({json{{"v", 1.0}}})}}),
                    temu::ConfigError);
    CHECK_THROWS_AS((void)temu::parse_calibrate_config(json::object()), temu::ConfigError);
    CHECK_THROWS_AS((void)temu::parse_flat_config(json{{"n_train", 1}}), temu::ConfigError);
    CHECK_THROWS_AS((void)temu::parse_glacier_config(json{{"seed", "abc"}}), temu::ConfigError);
}

TEST_CASE("config round-trips through json with defaults resolved") {
    const auto cfg = temu::parse_glacier_config(json{{"sizes", {4, 6}}, {"replicates", 2}});
    const json j = temu::to_json(cfg);
    CHECK(j.at("sizes").get<std::vector<std::size_t>>() == std::vector<std::size_t>{4, 6});
    CHECK(j.at("rank_spatial").get<std::size_t>() == 50);
    const auto back = temu::parse_glacier_config(j);
    CHECK(back.replicates == 2);
    CHECK(temu::to_json(back) == j);
}

TEST_CASE("tensor-info runs and bad paths fail with the io exit code") {
    TempDir tmp;
    temu::Tensor t({2, 3});
    for (std::size_t i = 0; i < 6; ++i) t[i] = static_cast<double>(i);
    temu::write_tensor(tmp.path / "t.temu", t);
    CHECK(run_cli("tensor-info " + (tmp.path / "t.temu").string()) == 0);
    CHECK(run_cli("tensor-info " + (tmp.path / "missing.temu").string()) == 5);
}

TEST_CASE("unknown subcommand and missing config exit with the config code") {
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("glacier-experiment") == 2);
}

TEST_CASE("resource guard exits with its own code") {
    TempDir tmp;
    write_file(tmp.path / "cfg.json",
               R"({"experiment":"glacier","sizes":[41],"combinations":["mixed"]})");
    CHECK(run_cli("glacier-experiment --config " + (tmp.path / "cfg.json").string() +
                  " --out-dir " + (tmp.path / "out").string()) == 3);
}

TEST_CASE("mismatched experiment kind is a config error") {
    TempDir tmp;
    write_file(tmp.path / "cfg.json", R"({"experiment":"abm"})");
    CHECK(run_cli("glacier-experiment --config " + (tmp.path / "cfg.json").string()) == 2);
}

TEST_CASE("tiny glacier experiment produces its outputs deterministically") {
    TempDir tmp;
    write_file(tmp.path / "cfg.json",
               R"({"experiment":"glacier","sizes":[3],"replicates":1,
                   "combinations":["mixed"],"test_points":5,"seed":99,
                   "surrogate":{"rf":{"n_trees":25}}})");
    const std::string base = "glacier-experiment --config " + (tmp.path / "cfg.json").string();
    CHECK(run_cli(base + " --out-dir " + (tmp.path / "a").string()) == 0);
    CHECK(fs::exists(tmp.path / "a" / "glacier_errors.csv"));
    CHECK(fs::exists(tmp.path / "a" / "resolved_config.json"));
    CHECK(fs::exists(tmp.path / "a" / "design_xy_s3_r0.csv"));

    CHECK(run_cli(base + " --out-dir " + (tmp.path / "b").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "glacier_errors.csv") ==
          slurp(tmp.path / "b" / "glacier_errors.csv"));

    // Worker count must not change the numbers.
    CHECK(run_cli(base + " --out-dir " + (tmp.path / "c").string() + " --workers 1") == 0);
    CHECK(slurp(tmp.path / "a" / "glacier_errors.csv") ==
          slurp(tmp.path / "c" / "glacier_errors.csv"));
}

TEST_CASE("fit, predict, and bootstrap pipeline on a small tensor") {
    TempDir tmp;
    // 4 x 5 tensor plus 1-D mode-1 coordinates.
    temu::Tensor t({4, 5});
    temu::Rng rng(temu::RngSeed{301});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 1.0);
    temu::write_tensor(tmp.path / "t.temu", t);
    {
        Eigen::MatrixXd inputs(5, 1);
        for (int i = 0; i < 5; ++i) inputs(i, 0) = 0.2 * i;
        temu::write_design_csv(tmp.path / "inputs.csv", {"theta"}, inputs);
    }
    write_file(tmp.path / "fit.json", R"({"experiment":"fit","tensor":")" +
                                          (tmp.path / "t.temu").string() +
                                          R"(","modes":[{"type":"grid"},
               {"type":"learned","kind":"gp","inputs":")" +
                                          (tmp.path / "inputs.csv").string() +
                                          R"("}],"output":"emu.temuem","seed":7})");
    CHECK(run_cli("fit --config " + (tmp.path / "fit.json").string() + " --out-dir " +
                  (tmp.path / "out").string()) == 0);
    CHECK(fs::exists(tmp.path / "out" / "emu.temuem"));

    write_file(tmp.path / "query.csv", "theta\n0.1\n0.5\n0.9\n");
    CHECK(run_cli("predict --emulator " + (tmp.path / "out" / "emu.temuem").string() +
                  " --query " + (tmp.path / "query.csv").string() + " --out-dir " +
                  (tmp.path / "pred").string()) == 0);
    CHECK(fs::exists(tmp.path / "pred" / "prediction_0000.temu"));
    CHECK(fs::exists(tmp.path / "pred" / "prediction_0002.temu"));
    const auto p0 = temu::read_tensor(tmp.path / "pred" / "prediction_0000.temu");
    CHECK(p0.dims() == std::vector<std::size_t>{4});

    write_file(tmp.path / "one.csv", "theta\n0.5\n");
    CHECK(run_cli("bootstrap --emulator " + (tmp.path / "out" / "emu.temuem").string() +
                  " --query " + (tmp.path / "one.csv").string() + " --replicates 64 --out-dir " +
                  (tmp.path / "boot").string()) == 0);
    CHECK(fs::exists(tmp.path / "boot" / "bootstrap_mean.temu"));
    CHECK(fs::exists(tmp.path / "boot" / "bootstrap_sd.temu"));

    // Wrong query width is an argument error (config exit code).
    write_file(tmp.path / "bad.csv", "a,b\n0.5,0.5\n");
    CHECK(run_cli("predict --emulator " + (tmp.path / "out" / "emu.temuem").string() +
                  " --query " + (tmp.path / "bad.csv").string() + " --out-dir " +
                  (tmp.path / "pred2").string()) == 2);
}

TEST_CASE("abm experiment and calibrate run end to end at toy scale") {
    TempDir tmp;
    write_file(tmp.path / "abm.json",
               R"({"experiment":"abm","seed":11,"n_speeds":6,"n_radii":6,
                   "agents":4,"times":8,"cases":[{"v":0.5,"rho_o":20}],
                   "surrogate":{"rf":{"n_trees":25}}})");
    const fs::path out = tmp.path / "abm_out";
    CHECK(run_cli("abm-experiment --config " + (tmp.path / "abm.json").string() + " --out-dir " +
                  out.string()) == 0);
    CHECK(fs::exists(out / "abm_x.temu"));
    CHECK(fs::exists(out / "abm_emulator_x_mixed.temuem"));
    CHECK(fs::exists(out / "case1_sim.csv"));
    CHECK(fs::exists(out / "case1_emulated_mixed_metrics.csv"));
    CHECK(fs::exists(out / "abm_case_errors.csv"));

    // Calibrate against the simulated case-1 trajectory.
    write_file(tmp.path / "cal.json", R"({"experiment":"calibrate","seed":13,
        "emulator_x":")" + (out / "abm_emulator_x_mixed.temuem").string() +
                                          R"(","emulator_y":")" +
                                          (out / "abm_emulator_y_rf.temuem").string() +
                                          R"(","observations":")" + (out / "case1_sim.csv").string() +
                                          R"(","grid_points":12,"iterations":60,"burn_in":20})");
    const fs::path cal_out = tmp.path / "cal_out";
    CHECK(run_cli("calibrate --config " + (tmp.path / "cal.json").string() + " --out-dir " +
                  cal_out.string()) == 0);
    CHECK(fs::exists(cal_out / "chain.csv"));
    CHECK(fs::exists(cal_out / "summary.csv"));
    const auto chain_rows =
        temu::read_csv(cal_out / "chain.csv", {"iteration", "rho_o", "v", "sigma2_x", "sigma2_y"});
    CHECK(chain_rows.size() == 60);

    // A 1-iteration run yields exactly one data row.
    write_file(tmp.path / "cal1.json", R"({"experiment":"calibrate","seed":13,
        "emulator_x":")" + (out / "abm_emulator_x_mixed.temuem").string() +
                                           R"(","emulator_y":")" +
                                           (out / "abm_emulator_y_rf.temuem").string() +
                                           R"(","observations":")" +
                                           (out / "case1_sim.csv").string() +
                                           R"(","grid_points":12,"iterations":1,"burn_in":0})");
    const fs::path cal1 = tmp.path / "cal1_out";
    CHECK(run_cli("calibrate --config " + (tmp.path / "cal1.json").string() + " --out-dir " +
                  cal1.string()) == 0);
    CHECK(temu::read_csv(cal1 / "chain.csv", {"iteration", "rho_o", "v", "sigma2_x", "sigma2_y"})
              .size() == 1);
}

TEST_SUITE_END();
