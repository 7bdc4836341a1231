#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "smgi/dynamics.hpp"
#include "smgi/fixtures.hpp"

using namespace smgi;

TEST_CASE("step worked cases") {
    RngState rng(1);
    const State s5 = State::with_counter(5);

    SECTION("identity kernel returns the state") {
        CHECK(step(TransitionKernel::identity(), s5, 0.0, rng) == s5);
    }
    SECTION("constant kernel maps 0 to 1") {
        const auto kernel = TransitionKernel::constant_to(State::with_counter(1));
        CHECK(step(kernel, State::with_counter(0), 0.3, rng) == State::with_counter(1));
    }
    SECTION("counter kernel increments") {
        CHECK(step(TransitionKernel::counter_increment(), s5, 0.0, rng) == State::with_counter(6));
    }
    SECTION("counter overflow is an error") {
        const State top = State::with_counter(std::numeric_limits<std::int64_t>::max());
        CHECK_THROWS_AS(step(TransitionKernel::counter_increment(), top, 0.0, rng), CounterOverflow);
    }
    SECTION("table kernel rejects states outside its table") {
        const auto kernel = TransitionKernel::down_drift_chain(3, 0.9);
        CHECK_THROWS_AS(step(kernel, State::with_counter(99), 0.0, rng), DomainError);
    }
}

TEST_CASE("kernel stochasticity matches table rows") {
    const auto kernel = TransitionKernel::down_drift_chain(10, 0.9);
    RngState rng(77);
    const State s = State::with_counter(5);
    const int n = 100000;
    int down = 0;
    for (int i = 0; i < n; ++i)
        if (*step(kernel, s, 0.0, rng).counter == 4) ++down;
    const double tol = 3.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(down) / n - 0.9) <= tol);
}

TEST_CASE("simulate worked cases") {
    SECTION("degenerate run: identity kernel, constant loss zero") {
        MetaModel m = fixture_closure_fail().model;
        m.evaluators = EvaluatorFamily::single(Evaluator::constant_loss(0.0));
        const State s0 = State::with_counter(0, "h0");
        const Trajectory traj = simulate(m, TransformSpec::identity_transform(),
                                         TransitionKernel::identity(), s0, 1, 42);
        REQUIRE(traj.states.size() == 2);
        CHECK(traj.states[0] == s0);
        CHECK(traj.states[1] == s0);
        REQUIRE(traj.losses.size() == 1);
        CHECK(traj.losses[0] == 0.0);
    }
    SECTION("counter kernel from 0 over horizon 5") {
        MetaModel m = fixture_stability_fail().model;
        const Trajectory traj = simulate(m, TransformSpec::identity_transform(),
                                         TransitionKernel::counter_increment(),
                                         State::with_counter(0, "h0"), 5, 7);
        REQUIRE(traj.states.size() == 6);
        for (std::int64_t t = 0; t <= 5; ++t) CHECK(*traj.states[static_cast<std::size_t>(t)].counter == t);
    }
    SECTION("length invariants and loss range") {
        const FixtureEntry chain = fixture_down_drift_chain();
        const Trajectory traj = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, 50, 3,
                                         chain.witness.as_function());
        CHECK(traj.states.size() == traj.observations.size() + 1);
        CHECK(traj.regimes.size() == traj.observations.size());
        CHECK(traj.losses.size() == traj.observations.size());
        CHECK(traj.lyapunov_values.size() == traj.states.size());
        for (double l : traj.losses) {
            CHECK(l >= 0.0);
            CHECK(l <= 1.0);
        }
    }
    SECTION("out-of-range loss raises EvaluatorError") {
        MetaModel m = fixture_closure_fail().model;
        m.evaluators = EvaluatorFamily::single(Evaluator::constant_loss(1.5));
        CHECK_THROWS_AS(simulate(m, TransformSpec::identity_transform(), TransitionKernel::identity(),
                                 State::with_counter(0, "h0"), 1, 0),
                        EvaluatorError);
    }
    SECTION("unresolvable s0 hypothesis raises DomainError") {
        const MetaModel m = fixture_closure_fail().model;
        CHECK_THROWS_AS(simulate(m, TransformSpec::identity_transform(), TransitionKernel::identity(),
                                 State::with_counter(0, "not_a_member"), 1, 0),
                        DomainError);
    }
}

TEST_CASE("simulate is deterministic given the seed") {
    const FixtureEntry chain = fixture_down_drift_chain();
    const Trajectory a = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, 200, 99,
                                  chain.witness.as_function());
    const Trajectory b = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, 200, 99,
                                  chain.witness.as_function());
    CHECK(a == b);
    CHECK(a.to_csv() == b.to_csv());

    const Trajectory c = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, 200, 100,
                                  chain.witness.as_function());
    CHECK(a.observations != c.observations);
}

TEST_CASE("drift chain trajectories descend from the top state") {
    // Monte-Carlo mean of V over 1000 seeds vs the exact per-step expectation
    // computed by forward propagation of the chain distribution.
    const FixtureEntry chain = fixture_down_drift_chain();
    const int horizon = 100;

    std::vector<double> dist(11, 0.0);
    dist[10] = 1.0;
    double exact_mean_sum = 10.0; // includes V(s_0)
    for (int t = 0; t < horizon; ++t) {
        std::vector<double> next(11, 0.0);
        next[0] = dist[0] + 0.9 * dist[1];
        for (int s = 1; s <= 10; ++s) {
            next[s] = 0.1 * dist[s];
            if (s + 1 <= 10) next[s] += 0.9 * dist[s + 1];
        }
        dist = next;
        for (int s = 0; s <= 10; ++s) exact_mean_sum += s * dist[s];
    }
    const double exact_traj_mean = exact_mean_sum / (horizon + 1);

    double mc_sum = 0.0;
    for (int seedling = 0; seedling < 1000; ++seedling) {
        const Trajectory traj = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, horizon,
                                         static_cast<std::uint64_t>(seedling), chain.witness.as_function());
        double traj_mean = 0.0;
        for (double v : traj.lyapunov_values) traj_mean += v;
        mc_sum += traj_mean / static_cast<double>(traj.lyapunov_values.size());
    }
    const double mc_mean = mc_sum / 1000.0;
    CHECK(mc_mean < 10.0); // strictly below V(s_0)
    CHECK_THAT(mc_mean, Catch::Matchers::WithinAbs(exact_traj_mean, 0.15));
}

TEST_CASE("check_closure worked cases") {
    ObservationDomain domain;
    domain.points = {0.0, 1.0};

    SECTION("identity kernel passes exhaustively") {
        const auto set = AdmissibleSet::from_states({State::with_counter(0), State::with_counter(1)});
        const auto report = check_closure(TransitionKernel::identity(), set, domain);
        CHECK(report.pass);
        CHECK(report.mode == CheckMode::exhaustive);
    }
    SECTION("T==1 against S*={0} fails with the successor witness") {
        const auto set = AdmissibleSet::from_states({State::with_counter(0)});
        const auto kernel = TransitionKernel::constant_to(State::with_counter(1));
        const auto report = check_closure(kernel, set, domain);
        CHECK_FALSE(report.pass);
        REQUIRE_FALSE(report.witnesses.empty());
        CHECK(report.witnesses[0].find("c=1") != std::string::npos);
    }
    SECTION("counter kernel on the full counter domain passes in sampled mode") {
        const auto set = AdmissibleSet::from_predicate(
            [](const State& s) { return s.counter && *s.counter >= 0; },
            [](RngState& rng) { return State::with_counter(static_cast<std::int64_t>(rng.next_below(1 << 20))); });
        const auto report = check_closure(TransitionKernel::counter_increment(), set, domain, 2000, 5);
        CHECK(report.pass);
        CHECK(report.mode == CheckMode::sampled);
        CHECK(report.evidence.at("sample_count") == 2000.0);
        CHECK(report.evidence.count("confidence_radius") == 1);
    }
    SECTION("empty finite set is vacuous, not a pass") {
        const AdmissibleSet empty = AdmissibleSet::from_states({});
        CHECK_THROWS_AS(check_closure(TransitionKernel::identity(), empty, domain), EmptyAdmissibleSet);
    }
}

TEST_CASE("exhaustive closure pass implies simulated containment") {
    const FixtureEntry chain = fixture_down_drift_chain();
    const Environment& env = chain.model.environments.instances[0];
    const auto report = check_closure(chain.kernel, chain.s_star, env.domain);
    REQUIRE(report.pass);
    REQUIRE(report.mode == CheckMode::exhaustive);

    // 10,000 sampled steps never leave S*.
    RngState rng(123);
    int steps_taken = 0;
    while (steps_taken < 10000) {
        State s = chain.s_star.states[rng.next_below(chain.s_star.states.size())];
        for (int burst = 0; burst < 50 && steps_taken < 10000; ++burst, ++steps_taken) {
            const double z = env.domain.points[rng.next_below(env.domain.points.size())];
            s = step(chain.kernel, s, z, rng);
            REQUIRE(chain.s_star.contains(s));
        }
    }
}

TEST_CASE("empirical risk") {
    Trajectory traj;
    traj.states.resize(4);
    traj.observations = {0, 0, 0};
    traj.regimes = {0, 0, 0};
    traj.lyapunov_values.resize(4, 0.0);

    traj.losses = {0.0, 0.0, 0.0};
    CHECK(empirical_risk(traj) == 0.0);

    traj.losses = {0.2, 0.4};
    traj.observations = {0, 0};
    traj.regimes = {0, 0};
    CHECK_THAT(empirical_risk(traj), Catch::Matchers::WithinAbs(0.3, 1e-15));

    Trajectory h1 = traj, h2 = traj;
    h1.losses = {0.1, 0.1};
    h2.losses = {0.3, 0.3};
    CHECK_THAT(empirical_risk_posterior({h1, h2}, {0.5, 0.5}), Catch::Matchers::WithinAbs(0.2, 1e-15));
    CHECK_THROWS_AS(empirical_risk_posterior({h1}, {0.5, 0.5}), ConfigError);
}

TEST_CASE("trajectory csv shape") {
    const FixtureEntry chain = fixture_down_drift_chain();
    const Trajectory traj = simulate(chain.model, chain.transforms[0], chain.kernel, chain.s0, 3, 1,
                                     chain.witness.as_function());
    const std::string csv = traj.to_csv();
    CHECK(csv.rfind("t,state_repr,hypothesis_id,regime,loss,lyapunov_value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5); // header + t=0..3
}
