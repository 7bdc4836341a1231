#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "smgi/config.hpp"
#include "smgi/io.hpp"

namespace fs = std::filesystem;
using smgi::Json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string stdout_text;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const fs::path out = fs::temp_directory_path() / "smgi_cli_stdout.txt";
    const std::string cmd = env_prefix + std::string(SMGI_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(out);
    std::stringstream buffer;
    buffer << in.rdbuf();
    result.stdout_text = buffer.str();
    return result;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return Json::parse(in);
}

std::string write_simulate_config(const fs::path& dir) {
    Json cfg;
    cfg["model"] = smgi::config::metamodel_to_json(smgi::fixture_down_drift_chain().model);
    cfg["kernel"] = {{"kind", "down_drift_chain"}, {"top", 10}, {"p_down", 0.9}};
    cfg["s0"] = {{"counter", 10}, {"hypothesis", "h0"}};
    cfg["horizon"] = 50;
    cfg["witness"] = {{"kind", "counter"}, {"alpha", 0.09}, {"beta", 0.0}};
    const fs::path p = dir / "simulate.json";
    std::ofstream out(p);
    out << cfg.dump(2);
    return p.string();
}

} // namespace

TEST_CASE("cli: certify --fixture closure_fail exits 1 with a closure failure") {
    const fs::path out_dir = fresh_dir("smgi_cli_closure");
    const auto result = run_cli("certify --fixture closure_fail --out " + out_dir.string());
    CHECK(result.exit_code == 1);
    const Json report = read_json(out_dir / "certificate.json");
    CHECK(report.at("pass").get<bool>() == false);
    bool closure_failed = false;
    for (const auto& sub : report.at("sub_reports"))
        if (sub.at("name") == "U1_closure") closure_failed = !sub.at("pass").get<bool>();
    CHECK(closure_failed);
    CHECK(fs::exists(out_dir / "manifest.json"));
}

TEST_CASE("cli: bound --preset structural prints the worked total") {
    const auto result =
        run_cli("bound --preset structural --rhat 0.10 --n 100 --kl 2 --delta 0.05 --L 0.5 --B 1 --V0 0");
    CHECK(result.exit_code == 0);
    CHECK(result.stdout_text.find("1.3009") != std::string::npos);
}

TEST_CASE("cli: fixtures --suite minimality exits 1 with the diagonal matrix") {
    const fs::path out_dir = fresh_dir("smgi_cli_minimality");
    const auto result = run_cli("fixtures --suite minimality --out " + out_dir.string());
    CHECK(result.exit_code == 1);
    const Json summary = read_json(out_dir / "minimality.json");
    CHECK(summary.at("diagonal_fail_pattern").get<bool>());
    CHECK(summary.at("verdict_matrix").size() == 4);
}

TEST_CASE("cli: simulate writes outputs and reproduces digests") {
    const fs::path cfg_dir = fresh_dir("smgi_cli_cfg");
    const std::string cfg = write_simulate_config(cfg_dir);

    const fs::path out_a = fresh_dir("smgi_cli_sim_a");
    const fs::path out_b = fresh_dir("smgi_cli_sim_b");
    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --out " + out_a.string()).exit_code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --out " + out_b.string()).exit_code == 0);

    const Json manifest_a = read_json(out_a / "manifest.json");
    const Json manifest_b = read_json(out_b / "manifest.json");
    CHECK(manifest_a.at("files") == manifest_b.at("files"));
    CHECK(fs::exists(out_a / "trajectory.csv"));
}

TEST_CASE("cli: SMGI_SEED environment variable overrides --seed") {
    const fs::path cfg_dir = fresh_dir("smgi_cli_cfg_env");
    const std::string cfg = write_simulate_config(cfg_dir);

    const fs::path out_env = fresh_dir("smgi_cli_env");
    const fs::path out_direct = fresh_dir("smgi_cli_direct");
    CHECK(run_cli("simulate --config " + cfg + " --seed 1 --out " + out_env.string(),
                  "SMGI_SEED=42 ").exit_code == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 42 --out " + out_direct.string()).exit_code == 0);
    CHECK(read_json(out_env / "manifest.json").at("files") ==
          read_json(out_direct / "manifest.json").at("files"));
}

TEST_CASE("cli: unknown configuration fields exit 2") {
    const fs::path cfg_dir = fresh_dir("smgi_cli_badcfg");
    Json cfg;
    cfg["model"] = smgi::config::metamodel_to_json(smgi::fixture_down_drift_chain().model);
    cfg["kernel"] = {{"kind", "identity"}};
    cfg["s0"] = {{"counter", 0}};
    cfg["horizon"] = 5;
    cfg["typo_field"] = true;
    const fs::path p = cfg_dir / "bad.json";
    std::ofstream(p) << cfg.dump(2);
    const auto result = run_cli("simulate --config " + p.string() + " --out " +
                                (cfg_dir / "out").string());
    CHECK(result.exit_code == 2);
    CHECK(result.stdout_text.find("typo_field") != std::string::npos);
}

TEST_CASE("cli: gsrm minimizes the worked instance") {
    const fs::path cfg_dir = fresh_dir("smgi_cli_gsrm");
    Json cfg;
    cfg["step_losses"] = {{0.1, 0.5}, {0.6, 0.2}, {0.1, 0.5}};
    cfg["alpha"] = 0.5;
    cfg["beta"] = 0.0;
    const fs::path p = cfg_dir / "gsrm.json";
    std::ofstream(p) << cfg.dump(2);
    const fs::path out_dir = fresh_dir("smgi_cli_gsrm_out");
    const auto result = run_cli("gsrm --config " + p.string() + " --out " + out_dir.string());
    CHECK(result.exit_code == 0);
    const Json res = read_json(out_dir / "gsrm_result.json");
    CHECK_THAT(res.at("value").get<double>(), Catch::Matchers::WithinAbs(0.8, 1e-12));
    CHECK(res.at("sequence") == Json::array({0, 0, 0}));
}

TEST_CASE("cli: protocol preset runs and flags the baseline") {
    const fs::path out_dir = fresh_dir("smgi_cli_protocol");
    const auto result =
        run_cli("protocol --preset antagonism --n-steps 50 --n-seeds 2 --seed 3 --out " +
                out_dir.string());
    CHECK(result.exit_code == 1); // baseline fails at full reversal
    const Json report = read_json(out_dir / "protocol.json");
    const auto& levels = report.at("levels");
    CHECK(levels.back().at("baseline").at("first_failure") == "evaluative_coherence");
    CHECK(levels.back().at("smgi").at("pass_all").get<bool>());
    CHECK(fs::exists(out_dir / "protocol.csv"));
}

TEST_CASE("shipped example configurations load cleanly") {
    const fs::path config_dir = fs::path(SMGI_CONFIG_DIR);
    REQUIRE(fs::exists(config_dir));
    int checked = 0;
    for (const auto& entry : fs::directory_iterator(config_dir)) {
        if (entry.path().extension() != ".json") continue;
        const Json j = read_json(entry.path());
        if (j.contains("model")) {
            CHECK_NOTHROW(smgi::config::load_metamodel(j.at("model")));
            ++checked;
        } else if (j.contains("step_losses")) {
            CHECK_NOTHROW(smgi::config::load_gsrm_instance(j));
            ++checked;
        }
    }
    CHECK(checked >= 2);
}
