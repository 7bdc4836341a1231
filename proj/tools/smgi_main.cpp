// smgi: load configurations, run simulations / certificates / bounds / gsrm /
// fixtures / protocol, and emit machine-first reports (JSON + CSV) with a
// manifest of content digests.
//
// Exit codes: 0 all-pass, 1 failed certificate (report still written),
// 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smgi/smgi.hpp"

namespace {

using namespace smgi;

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("parse error in '" + path + "': " + e.what());
    }
    return j;
}

std::uint64_t effective_seed(std::uint64_t cli_seed) {
    if (const char* env = std::getenv("SMGI_SEED")) return std::strtoull(env, nullptr, 10);
    return cli_seed;
}

int run_simulate(const std::string& config_path, int horizon, std::uint64_t seed,
                 const std::string& out_dir) {
    const Json j = load_json_file(config_path);
    config::require_keys(j, {"model", "transform", "kernel", "s0", "horizon", "witness"}, "simulate");
    const MetaModel model = config::load_metamodel(config::require_field(j, "model", "simulate"));
    TransformSpec transform = TransformSpec::identity_transform();
    if (j.contains("transform")) transform = config::load_transform(j.at("transform"), "simulate.transform");
    const TransitionKernel kernel = config::load_kernel(config::require_field(j, "kernel", "simulate"),
                                                        "simulate.kernel");
    const State s0 = config::load_state(config::require_field(j, "s0", "simulate"), "simulate.s0");
    if (horizon <= 0 && j.contains("horizon")) horizon = j.at("horizon").get<int>();
    if (horizon <= 0) throw ConfigError("simulate: horizon must be positive");
    std::function<double(const State&)> lyap;
    if (j.contains("witness")) lyap = config::load_witness(j.at("witness"), "simulate.witness").as_function();

    const Trajectory traj = simulate(model, transform, kernel, s0, horizon, seed, lyap);
    RunWriter writer(out_dir);
    writer.write("trajectory.csv", traj.to_csv());
    Json summary;
    summary["seed"] = seed;
    summary["horizon"] = horizon;
    summary["empirical_risk"] = empirical_risk(traj);
    writer.write_json("simulate_summary.json", summary);
    writer.finalize_manifest();
    std::cout << "simulate: horizon " << horizon << ", empirical risk " << empirical_risk(traj)
              << ", outputs in " << writer.dir().string() << "\n";
    return 0;
}

int run_certify_fixture(const std::string& name, const std::string& out_dir) {
    FixtureEntry f;
    if (name == "closure_fail") f = fixture_closure_fail();
    else if (name == "stability_fail") f = fixture_stability_fail();
    else if (name == "capacity_fail") f = fixture_capacity_fail();
    else if (name == "invariance_fail") f = fixture_invariance_fail();
    else if (name == "down_drift_chain") f = fixture_down_drift_chain();
    else throw ConfigError("unknown fixture '" + name + "'");

    const CertificateReport bundle = run_fixture_bundle(f);
    RunWriter writer(out_dir);
    writer.write_json("certificate.json", bundle.to_json());
    writer.write_json("fixture.json", config::fixture_to_json(f));
    writer.finalize_manifest();

    const auto v = obligation_verdicts(bundle);
    std::cout << "fixture " << f.id << ": closure=" << (v.closure ? "pass" : "FAIL")
              << " stability=" << (v.stability ? "pass" : "FAIL")
              << " capacity=" << (v.capacity ? "pass" : "FAIL")
              << " invariance=" << (v.invariance ? "pass" : "FAIL") << "\n";
    return bundle.pass ? 0 : 1;
}

int run_certify_config(const std::string& config_path, bool theorem, std::uint64_t seed,
                       const std::string& out_dir) {
    const Json j = load_json_file(config_path);
    config::require_keys(j,
                         {"model", "transform", "transforms", "kernel", "witness", "lipschitz_ell",
                          "capacity", "admissible_set", "s0"},
                         "certify");
    const MetaModel model = config::load_metamodel(config::require_field(j, "model", "certify"));
    const TransitionKernel kernel =
        config::load_kernel(config::require_field(j, "kernel", "certify"), "certify.kernel");
    const LyapunovWitness witness =
        config::load_witness(config::require_field(j, "witness", "certify"), "certify.witness");
    const AdmissibleSet s_star = config::load_admissible_set(
        config::require_field(j, "admissible_set", "certify"), "certify.admissible_set");
    double lipschitz_ell = 1.0;
    if (j.contains("lipschitz_ell")) lipschitz_ell = j.at("lipschitz_ell").get<double>();

    CapacityFunctional capacity;
    const Json& cap = config::require_field(j, "capacity", "certify");
    config::require_keys(cap, {"kind", "bound"}, "certify.capacity");
    const std::string cap_kind = config::require_field(cap, "kind", "certify.capacity").get<std::string>();
    if (cap_kind == "log2_cardinality") capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    else if (cap_kind == "kl_vs_prior") capacity.kind = CapacityFunctional::Kind::kl_vs_prior;
    else if (cap_kind == "description_bits") capacity.kind = CapacityFunctional::Kind::description_bits;
    else throw ConfigError("certify.capacity.kind: unknown kind '" + cap_kind + "'");
    capacity.bound = config::require_field(cap, "bound", "certify.capacity").get<double>();
    std::vector<CapacityConfiguration> configs = {{"declared_class", model.hypothesis_class, {}, {}}};

    BundleOptions opt;
    opt.seed = seed;

    CertificateReport report;
    if (theorem) {
        std::vector<TransformSpec> transforms;
        if (j.contains("transforms")) {
            std::size_t i = 0;
            for (const auto& t : j.at("transforms"))
                transforms.push_back(config::load_transform(t, "certify.transforms[" + std::to_string(i++) + "]"));
        } else if (j.contains("transform")) {
            transforms.push_back(config::load_transform(j.at("transform"), "certify.transform"));
        } else {
            transforms.push_back(TransformSpec::identity_transform());
        }
        std::vector<TransitionKernel> kernels(transforms.size(), kernel);
        report = check_theorem_closure(model, transforms, kernels, witness, capacity, configs,
                                       model.evaluators.protected_core, s_star, opt);
    } else {
        TransformSpec transform = TransformSpec::identity_transform();
        if (j.contains("transform")) transform = config::load_transform(j.at("transform"), "certify.transform");
        report = check_bundle(model, transform, kernel, witness, lipschitz_ell, capacity, configs, s_star,
                              opt);
    }

    RunWriter writer(out_dir);
    writer.write_json("certificate.json", report.to_json());
    writer.finalize_manifest();
    std::cout << report.name << ": " << (report.pass ? "pass" : "FAIL") << " ("
              << to_string(report.mode) << " mode), report in " << writer.dir().string() << "\n";
    return report.pass ? 0 : 1;
}

int run_bound(const std::string& preset, double rhat, double kl, std::uint64_t n, double delta, double L,
              double B, double V0, double gen, double l_ell, double eps_max, double c_v, double v_max,
              const std::vector<std::uint64_t>& sweep_n, const std::string& out_dir) {
    if (!sweep_n.empty()) {
        if (preset != "basic" && preset != "structural")
            throw ConfigError("--sweep-n supports the basic and structural presets");
        const std::string csv = config::bound_sweep_csv(preset, rhat, kl, delta, L, B, V0, sweep_n);
        if (out_dir.empty()) {
            std::cout << csv;
        } else {
            RunWriter writer(out_dir);
            writer.write("bound_sweep.csv", csv);
            writer.finalize_manifest();
            std::cout << "bound sweep over " << sweep_n.size() << " grid points written to "
                      << writer.dir().string() << "\n";
        }
        return 0;
    }
    BoundReport report;
    if (preset == "basic") {
        report = pacbayes_basic(rhat, kl, n, delta);
    } else if (preset == "structural") {
        report = structural_bound(rhat, kl, n, delta, L, B, V0);
    } else if (preset == "unified") {
        report = unified_bound(rhat, gen, l_ell, eps_max, c_v,
                               std::vector<double>(static_cast<std::size_t>(n), V0));
    } else if (preset == "azuma") {
        const double term = azuma_drift_term(L, v_max, n, delta);
        std::cout << "azuma drift term = " << term << "\n";
        if (!out_dir.empty()) {
            RunWriter writer(out_dir);
            Json j;
            j["azuma_drift_term"] = term;
            writer.write_json("bound.json", j);
            writer.finalize_manifest();
        }
        return 0;
    } else {
        throw ConfigError("unknown bound preset '" + preset + "'");
    }
    std::cout << report.formula << " bound: total = " << report.total
              << " (empirical " << report.empirical_risk << ", confidence " << report.confidence_term
              << ", shift " << report.shift_term << ", drift " << report.drift_term << ")\n";
    if (!out_dir.empty()) {
        RunWriter writer(out_dir);
        writer.write_json("bound.json", report.to_json());
        writer.finalize_manifest();
    }
    return 0;
}

int run_gsrm(const std::string& config_path, const std::string& mode, const std::string& out_dir) {
    const Json j = load_json_file(config_path);
    const GsrmInstance inst = config::load_gsrm_instance(j);
    const GsrmMode m = mode == "exhaustive" ? GsrmMode::exhaustive : GsrmMode::dynamic_programming;
    const GsrmSolution sol = gsrm_minimize(inst, m);

    std::ostringstream csv;
    csv.precision(17);
    csv << "t,regime\n";
    for (std::size_t t = 0; t < sol.regimes.size(); ++t) csv << (t + 1) << "," << sol.regimes[t] << "\n";

    RunWriter writer(out_dir);
    Json result;
    result["mode"] = mode;
    result["value"] = sol.value;
    result["sequence"] = sol.regimes;
    writer.write_json("gsrm_result.json", result);
    writer.write("gsrm_sequence.csv", csv.str());
    writer.finalize_manifest();
    std::cout << "gsrm minimum " << sol.value << " with " << sol.regimes.size() << " steps, outputs in "
              << writer.dir().string() << "\n";
    return 0;
}

int run_fixture_suite(const std::string& suite, const std::string& out_dir) {
    RunWriter writer(out_dir);
    bool all_pass = true;

    if (suite == "minimality" || suite == "all") {
        const MinimalityOutcome out = run_minimality_suite();
        Json matrix = Json::array();
        for (std::size_t row = 0; row < out.fixture_ids.size(); ++row) {
            const auto& v = out.verdicts[row];
            Json r;
            r["fixture"] = out.fixture_ids[row];
            r["closure"] = v.closure;
            r["stability"] = v.stability;
            r["capacity"] = v.capacity;
            r["evaluative_invariance"] = v.invariance;
            matrix.push_back(r);
            writer.write_json("bundle_" + out.fixture_ids[row] + ".json", out.bundles[row].to_json());
        }
        Json summary;
        summary["suite"] = "minimality";
        summary["verdict_matrix"] = matrix;
        summary["diagonal_fail_pattern"] = out.diagonal_fail_pattern();
        writer.write_json("minimality.json", summary);
        // A correct minimality run has four failing certificates.
        all_pass = false;
        std::cout << "minimality matrix (rows = fixtures, single fail expected on the diagonal):\n";
        for (std::size_t row = 0; row < out.fixture_ids.size(); ++row) {
            const auto& v = out.verdicts[row];
            std::cout << "  " << out.fixture_ids[row] << ": " << (v.closure ? "." : "F")
                      << (v.stability ? "." : "F") << (v.capacity ? "." : "F")
                      << (v.invariance ? "." : "F") << "\n";
        }
        std::cout << "  diagonal pattern: " << (out.diagonal_fail_pattern() ? "confirmed" : "VIOLATED")
                  << "\n";
    }
    if (suite == "strict_inclusion" || suite == "all") {
        const StrictInclusionFixture f = fixture_strict_inclusion();
        const CertificateReport eq = check_core_equivalence(f.risk_matrix, f.candidate_grid);
        writer.write_json("strict_inclusion.json", eq.to_json());
        const CertificateReport embedding = run_fixture_bundle(f.k1_embedding);
        writer.write_json("k1_embedding.json", embedding.to_json());
        std::cout << "strict inclusion: impossibility flag "
                  << (eq.evidence.at("impossibility") == 1.0 ? "raised" : "NOT raised")
                  << ", K=1 embedding " << (embedding.pass ? "passes" : "FAILS") << "\n";
        if (eq.evidence.at("impossibility") != 1.0 || !embedding.pass) all_pass = false;
        if (suite == "strict_inclusion" && eq.evidence.at("impossibility") == 1.0 && embedding.pass)
            all_pass = true;
    }
    if (suite == "two_regime" || suite == "all") {
        const TwoRegimeFixture f = fixture_two_regime_tooluse();
        const auto inadmissible = cert_update(f.model.evaluators.protected_core, f.model.evaluators,
                                              f.inadmissible_candidate, WeightDivergence::squared_euclidean,
                                              f.admissible_set);
        const auto admissible = cert_update(f.model.evaluators.protected_core, f.model.evaluators,
                                            f.admissible_candidate, WeightDivergence::squared_euclidean,
                                            f.admissible_set);
        writer.write_json("two_regime_model.json", config::metamodel_to_json(f.model));
        writer.write_json("cert_update_inadmissible.json", inadmissible.report.to_json());
        writer.write_json("cert_update_admissible.json", admissible.report.to_json());
        std::cout << "two-regime: inadmissible candidate projected to ("
                  << inadmissible.weights.weights[0] << ", " << inadmissible.weights.weights[1]
                  << "), admissible candidate unchanged="
                  << (admissible.weights == f.admissible_candidate ? "yes" : "NO") << "\n";
        if (suite == "two_regime")
            all_pass = inadmissible.report.pass && admissible.report.pass &&
                       admissible.weights == f.admissible_candidate;
    }
    writer.finalize_manifest();
    return all_pass ? 0 : 1;
}

int run_protocol_cmd(const std::string& preset, std::vector<double> levels, int n_steps, int n_seeds,
                     std::uint64_t seed, const std::string& out_dir) {
    if (preset != "antagonism" && preset != "switch_frequency")
        throw ConfigError("unknown protocol preset '" + preset + "'");
    ProtocolInstance inst = make_antagonism_instance();
    if (preset == "switch_frequency") inst.axis.kind = GrowthAxis::Kind::regime_switch_frequency;
    if (!levels.empty()) inst.axis.levels = std::move(levels);
    ProtocolBudget budget;
    budget.n_steps = n_steps;
    budget.n_seeds = n_seeds;

    const ProtocolReport report = run_protocol(inst.smgi, inst.baseline, inst.axis, budget, seed);
    RunWriter writer(out_dir);
    writer.write_json("protocol.json", report.to_json());
    writer.write("protocol.csv", report.to_csv());
    writer.finalize_manifest();

    bool baseline_ever_fails = false;
    bool smgi_always_passes = true;
    for (const auto& lvl : report.levels) {
        std::cout << "level " << lvl.level << ": smgi "
                  << (lvl.smgi.verdicts.all() ? "pass" : "FAIL(" + lvl.smgi.first_failure + ")")
                  << ", baseline "
                  << (lvl.baseline.verdicts.all() ? "pass" : "FAIL(" + lvl.baseline.first_failure + ")")
                  << "\n";
        baseline_ever_fails = baseline_ever_fails || !lvl.baseline.verdicts.all();
        smgi_always_passes = smgi_always_passes && lvl.smgi.verdicts.all();
    }
    std::cout << "outputs in " << writer.dir().string() << "\n";
    return baseline_ever_fails ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMGI kernel: certified learning dynamics, admissibility certificates, bounds"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "smgi_out", fixture_name, suite = "minimality";
    std::string preset = "structural", proto_preset = "antagonism", mode = "dp";
    std::uint64_t seed = 0;
    int horizon = 0, n_steps = 200, n_seeds = 8;
    bool theorem = false;
    double rhat = 0.0, kl = 0.0, delta = 0.05, L = 0.0, B = 1.0, V0 = 0.0;
    double gen = 0.0, l_ell = 0.0, eps_max = 0.0, c_v = 0.0, v_max = 1.0;
    std::uint64_t n = 100;
    std::vector<double> levels;
    std::vector<std::uint64_t> sweep_n;

    auto* sim = app.add_subcommand("simulate", "simulate a trajectory from a configuration");
    sim->add_option("--config", config_path, "run configuration JSON")->required();
    sim->add_option("--horizon", horizon, "override the configured horizon");
    sim->add_option("--seed", seed, "seed (SMGI_SEED overrides)");
    sim->add_option("--out", out_dir, "output directory");

    auto* cert = app.add_subcommand("certify", "run admissibility certificates");
    cert->add_option("--config", config_path, "run configuration JSON");
    cert->add_option("--fixture", fixture_name, "run a named fixture instead of a config");
    cert->add_flag("--theorem", theorem, "run the structural-closure theorem checker");
    cert->add_option("--seed", seed, "seed (SMGI_SEED overrides)");
    cert->add_option("--out", out_dir, "output directory");

    auto* bound = app.add_subcommand("bound", "evaluate a bound formula");
    bound->add_option("--preset", preset, "basic | structural | unified | azuma")->required();
    bound->add_option("--rhat", rhat, "empirical risk");
    bound->add_option("--kl", kl, "KL(Q||P)");
    bound->add_option("--n", n, "sample / step count");
    bound->add_option("--delta", delta, "confidence level delta");
    bound->add_option("--L", L, "loss-to-state sensitivity");
    bound->add_option("--B", B, "drift constant");
    bound->add_option("--V0", V0, "initial Lyapunov value");
    bound->add_option("--gen", gen, "Gen_n term (unified)");
    bound->add_option("--l-ell", l_ell, "evaluator shift Lipschitz constant (unified)");
    bound->add_option("--eps-max", eps_max, "transformation magnitude (unified)");
    bound->add_option("--c-v", c_v, "stability coefficient (unified)");
    bound->add_option("--v-max", v_max, "Lyapunov sublevel bound (azuma)");
    bound->add_option("--sweep-n", sweep_n, "emit a CSV sweep over these n values");
    bound->add_option("--out", out_dir, "output directory (optional)");

    auto* gsrm_cmd = app.add_subcommand("gsrm", "minimize a GSRM instance");
    gsrm_cmd->add_option("--config", config_path, "GSRM instance JSON")->required();
    gsrm_cmd->add_option("--mode", mode, "dp | exhaustive");
    gsrm_cmd->add_option("--out", out_dir, "output directory");

    auto* fx = app.add_subcommand("fixtures", "run fixture suites");
    fx->add_option("--suite", suite, "minimality | strict_inclusion | two_regime | all");
    fx->add_option("--out", out_dir, "output directory");

    auto* proto = app.add_subcommand("protocol", "run the environment-growth protocol");
    proto->add_option("--preset", proto_preset, "antagonism | switch_frequency");
    proto->add_option("--levels", levels, "axis levels (strictly increasing)");
    proto->add_option("--n-steps", n_steps, "steps per trajectory");
    proto->add_option("--n-seeds", n_seeds, "trajectories per level");
    proto->add_option("--seed", seed, "seed (SMGI_SEED overrides)");
    proto->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        seed = effective_seed(seed);
        if (sim->parsed()) return run_simulate(config_path, horizon, seed, out_dir);
        if (cert->parsed()) {
            if (!fixture_name.empty()) return run_certify_fixture(fixture_name, out_dir);
            if (config_path.empty()) throw ConfigError("certify needs --config or --fixture");
            return run_certify_config(config_path, theorem, seed, out_dir);
        }
        if (bound->parsed())
            return run_bound(preset, rhat, kl, n, delta, L, B, V0, gen, l_ell, eps_max, c_v, v_max,
                             sweep_n, bound->count("--out") ? out_dir : "");
        if (gsrm_cmd->parsed()) return run_gsrm(config_path, mode, out_dir);
        if (fx->parsed()) return run_fixture_suite(suite, out_dir);
        if (proto->parsed())
            return run_protocol_cmd(proto_preset, levels, n_steps, n_seeds, seed, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
