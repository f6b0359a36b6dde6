#include <doctest.h>

#include "helpers.hpp"
#include "lifted/errors.hpp"
#include "lifted/grounded.hpp"
#include "lifted/scenario.hpp"

using namespace lifted;
using namespace testutil;

TEST_CASE("ground_initial") {
    SUBCASE("nine-one state grounds to ten equally likely states") {
        const GroundBelief b = ground_initial({{Rational(1), canonicalize(nine_one_state())}});
        REQUIRE(b.size() == 10);
        for (const auto& [key, entry] : b.states) CHECK(entry.first == Rational(1, 10));
    }
    SUBCASE("all-dirac initial state is a single ground state") {
        const LiftedState s = make_state({{3, {{"loc", "LP"}}}},
                                         {{"LP", Distribution::dirac(V("parking"))}});
        CHECK(ground_initial({{Rational(1), canonicalize(s)}}).size() == 1);
    }
    SUBCASE("invalid state propagates a validity error") {
        LiftedState s = make_state({{11, {{"ID", "LID"}}}},
                                   {{"LID", Distribution::urn(fleet(10))}});
        CHECK_THROWS_AS(ground_initial({{Rational(1, 1), CanonicalState{s, "raw"}}}), Error);
    }
}

TEST_CASE("ground_step tracks a deterministic chain") {
    // One entity walking a -> b -> c through forced moves.
    auto walk = [](const std::string& from, const std::string& to) {
        ActionSchema s;
        s.name = "walk_" + from + "_" + to;
        s.participants = {{Constraint{"loc", Constraint::Op::eq, {V(from)}}}};
        s.effects = {Effect::set(0, "loc", SlotSource::value(V(to)))};
        return s;
    };
    const std::vector<ActionSchema> schemas{walk("a", "b"), walk("b", "c")};
    const LiftedState init = make_state({{1, {{"loc", "LA"}}}},
                                        {{"LA", Distribution::dirac(V("a"))}});
    GroundBelief b = ground_initial({{Rational(1), canonicalize(init)}});
    Observation empty_obs;
    b = ground_step(b, empty_obs, schemas, {});
    REQUIRE(b.size() == 1);
    CHECK(b.states.begin()->second.second.entities.begin()->first.at("loc") == V("b"));
    b = ground_step(b, empty_obs, schemas, {});
    REQUIRE(b.size() == 1);
    CHECK(b.states.begin()->second.second.entities.begin()->first.at("loc") == V("c"));
}

TEST_CASE("three-forklift step agrees with the lifted engine both ways") {
    const Scenario scenario = builtin_scenario("warehouse:n=3");
    const Trace trace = sample_trace(scenario, 21, 5);
    LiftedBelief lifted_b = make_belief(scenario.initial);
    GroundBelief ground_b = ground_initial(scenario.initial);
    for (const auto& obs : trace.observations) {
        lifted_b = update(lifted_b, obs, scenario.sensors);
        ground_b = ground_update(ground_b, obs, scenario.sensors);

        // Aggregating the lifted belief's grounds reproduces the ground belief.
        GroundDist from_lifted;
        for (const auto& [key, hyp] : lifted_b.hypotheses) {
            for (const auto& [gkey, entry] : ground(hyp.second->state)) {
                from_lifted[gkey] += hyp.first * entry.second;
            }
        }
        REQUIRE(from_lifted.size() == ground_b.size());
        for (const auto& [gkey, entry] : ground_b.states) {
            CHECK(from_lifted.at(gkey) == entry.first);
        }

        lifted_b = predict(lifted_b, scenario.schemas);
        ground_b = ground_predict(ground_b, scenario.schemas);
    }
}

TEST_CASE("ten-forklift prediction blows past a small guard") {
    const Scenario scenario = builtin_scenario("warehouse");
    GroundBelief b = ground_initial(scenario.initial, 1000000);
    CHECK(b.size() == 1);
    CHECK_THROWS_AS(ground_predict(ground_predict(b, scenario.schemas, 100000),
                                   scenario.schemas, 100000),
                    ExplosionGuard);
}

TEST_CASE("compare") {
    SUBCASE("identical runs have zero diff") {
        MarginalSeries a;
        a.marginals = {{{V("x"), Rational(1, 3)}, {V("y"), Rational(2, 3)}}};
        a.hypothesis_counts = {4};
        MarginalSeries b = a;
        b.hypothesis_counts = {9};
        const CompareReport r = compare(a, b);
        CHECK(!r.length_mismatch);
        CHECK(r.max_abs_diff == Rational(0));
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].n_lifted == 4);
        CHECK(r.rows[0].n_grounded == 9);
    }
    SUBCASE("differences are reported") {
        MarginalSeries a, b;
        a.marginals = {{{V("x"), Rational(1, 2)}}};
        b.marginals = {{{V("x"), Rational(1, 4)}, {V("y"), Rational(1, 4)}}};
        a.hypothesis_counts = {1};
        b.hypothesis_counts = {1};
        const CompareReport r = compare(a, b);
        CHECK(r.max_abs_diff == Rational(1, 4));
    }
    SUBCASE("length mismatch is flagged") {
        MarginalSeries a, b;
        a.marginals = {{}};
        a.hypothesis_counts = {1};
        const CompareReport r = compare(a, b);
        CHECK(r.length_mismatch);
    }
}
