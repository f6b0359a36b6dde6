#include <doctest.h>

#include "helpers.hpp"
#include "lifted/errors.hpp"

using namespace lifted;
using namespace testutil;

TEST_CASE("validate") {
    SUBCASE("well-formed warehouse state") { CHECK(!validate(nine_one_state())); }
    SUBCASE("dangling label is rule 1") {
        LiftedState s = nine_one_state();
        s.context.bindings.erase("LID");
        auto v = validate(s);
        REQUIRE(v);
        CHECK(v->rule == 1);
    }
    SUBCASE("urn capacity is rule 2") {
        // 11 entities drawing from a ten-identifier urn.
        LiftedState s = make_state({{11, {{"ID", "LID"}}}},
                                   {{"LID", Distribution::urn(fleet(10))}});
        auto v = validate(s);
        REQUIRE(v);
        CHECK(v->rule == 2);
    }
}

TEST_CASE("canonicalize") {
    SUBCASE("invariant under label renaming") {
        LiftedState a = nine_one_state();
        LiftedState b = make_state({{9, {{"loc", "KS1"}, {"ID", "KX"}}},
                                    {1, {{"loc", "KS2"}, {"ID", "KX"}}}},
                                   {{"KX", Distribution::urn(fleet(10))},
                                    {"KS1", Distribution::dirac(V("storage1"))},
                                    {"KS2", Distribution::dirac(V("storage2"))}});
        CHECK(canonicalize(a).key == canonicalize(b).key);
        CHECK(canonicalize(a).state == canonicalize(b).state);
    }
    SUBCASE("identical groups fuse") {
        LiftedState a = make_state({{4, {{"loc", "L1"}}}, {5, {{"loc", "L2"}}}},
                                   {{"L1", Distribution::dirac(V("s"))},
                                    {"L2", Distribution::dirac(V("s"))}});
        const CanonicalState c = canonicalize(a);
        REQUIRE(c.state.formula.groups.size() == 1);
        CHECK(c.state.formula.groups.begin()->second == 9);
    }
    SUBCASE("idempotent") {
        const CanonicalState once = canonicalize(nine_one_state());
        const CanonicalState twice = canonicalize(once.state);
        CHECK(once.key == twice.key);
        CHECK(once.state == twice.state);
    }
    SUBCASE("unreferenced labels dropped") {
        LiftedState s = nine_one_state();
        s.context.bindings.emplace("LZOMBIE", Distribution::dirac(V("z")));
        CHECK(canonicalize(s).key == canonicalize(nine_one_state()).key);
    }
    SUBCASE("single-value urn behaves like dirac") {
        LiftedState a = make_state({{2, {{"p", "L"}}}}, {{"L", Distribution::urn(std::vector<Value>{V("a"), V("a")})}});
        LiftedState b = make_state({{2, {{"p", "L"}}}}, {{"L", Distribution::dirac(V("a"))}});
        CHECK(canonicalize(a).key == canonicalize(b).key);
    }
    SUBCASE("shared urn stays distinct from separate equal urns") {
        LiftedState shared = make_state({{1, {{"p", "LU"}}}, {1, {{"q", "LU"}}}},
                                        {{"LU", Distribution::urn(values({"a", "b"}))}});
        LiftedState separate = make_state({{1, {{"p", "LU1"}}}, {1, {{"q", "LU2"}}}},
                                          {{"LU1", Distribution::urn(values({"a", "b"}))},
                                           {"LU2", Distribution::urn(values({"a", "b"}))}});
        CHECK(canonicalize(shared).key != canonicalize(separate).key);
        CHECK(!same_ground_dist(ground_dist(shared), ground_dist(separate)));
    }
}

TEST_CASE("ground") {
    SUBCASE("two entities over a shared two-value urn") {
        LiftedState s = make_state({{1, {{"loc", "LA"}, {"id", "LU"}}},
                                    {1, {{"loc", "LB"}, {"id", "LU"}}}},
                                   {{"LA", Distribution::dirac(V("A"))},
                                    {"LB", Distribution::dirac(V("B"))},
                                    {"LU", Distribution::urn(values({"x", "y"}))}});
        const auto grounds = ground(s);
        REQUIRE(grounds.size() == 2);
        for (const auto& [key, entry] : grounds) CHECK(entry.second == Rational(1, 2));
    }
    SUBCASE("nine-one state has ten equally likely grounds") {
        // Independent expectation: the only freedom is which identifier
        // sits in storage room 2.
        const auto grounds = ground(nine_one_state());
        REQUIRE(grounds.size() == 10);
        for (const auto& [key, entry] : grounds) CHECK(entry.second == Rational(1, 10));
    }
    SUBCASE("all-dirac state has a single ground") {
        LiftedState s = make_state({{3, {{"loc", "L"}}}}, {{"L", Distribution::dirac(V("s"))}});
        const auto grounds = ground(s);
        REQUIRE(grounds.size() == 1);
        CHECK(grounds.begin()->second.second == Rational(1));
    }
    SUBCASE("probabilities sum to one") {
        StateGenerator gen(7);
        for (int i = 0; i < 50; ++i) {
            Rational total(0);
            for (const auto& [key, entry] : ground_dist(gen.next())) total += entry;
            CHECK(total == Rational(1));
        }
    }
    SUBCASE("explosion guard") {
        LiftedState s = make_state({{6, {{"p", "LC"}}}},
                                   {{"LC", Distribution::categorical(
                                               {{V("a"), Rational(1, 2)},
                                                {V("b"), Rational(1, 4)},
                                                {V("c"), Rational(1, 4)}})}});
        CHECK_THROWS_AS(ground(s, 10), ExplosionGuard);
    }
}

TEST_CASE("split on the warehouse nine-one state") {
    // Splitting on ID=fl1 must produce the 8+1+1 state with weight 9/10
    // and the 9+identified state with weight 1/10.
    const auto branches = split_on_slot_value(nine_one_state(), "ID", V("fl1"));
    REQUIRE(branches.size() == 2);
    const std::vector<Value> all_ids = fleet(10);
    const std::vector<Value> rest(all_ids.begin() + 1, all_ids.end());

    const LiftedState expected_heavy =
        make_state({{8, {{"loc", "LS1"}, {"ID", "LIDr"}}},
                    {1, {{"loc", "LS1"}, {"ID", "LF1"}}},
                    {1, {{"loc", "LS2"}, {"ID", "LIDr"}}}},
                   {{"LIDr", Distribution::urn(rest)},
                    {"LF1", Distribution::dirac(V("fl1"))},
                    {"LS1", Distribution::dirac(V("storage1"))},
                    {"LS2", Distribution::dirac(V("storage2"))}});
    const LiftedState expected_light =
        make_state({{9, {{"loc", "LS1"}, {"ID", "LIDr"}}},
                    {1, {{"loc", "LS2"}, {"ID", "LF1"}}}},
                   {{"LIDr", Distribution::urn(rest)},
                    {"LF1", Distribution::dirac(V("fl1"))},
                    {"LS1", Distribution::dirac(V("storage1"))},
                    {"LS2", Distribution::dirac(V("storage2"))}});

    std::map<std::string, Rational> got;
    for (const auto& [w, cs] : branches) got.emplace(cs.key, w);
    REQUIRE(got.count(canonicalize(expected_heavy).key));
    REQUIRE(got.count(canonicalize(expected_light).key));
    CHECK(got.at(canonicalize(expected_heavy).key) == Rational(9, 10));
    CHECK(got.at(canonicalize(expected_light).key) == Rational(1, 10));

    // Weighted union of grounds is exactly the original ground distribution.
    CHECK(same_ground_dist(weighted_ground_union(branches), ground_dist(nine_one_state())));
}

TEST_CASE("split edge cases") {
    SUBCASE("already determined value") {
        LiftedState s = make_state({{1, {{"ID", "LF"}}}}, {{"LF", Distribution::dirac(V("fl1"))}});
        const auto branches = split_on_slot_value(s, "ID", V("fl1"));
        REQUIRE(branches.size() == 1);
        CHECK(branches[0].first == Rational(1));
        CHECK(branches[0].second.key == canonicalize(s).key);
    }
    SUBCASE("single group consuming the whole urn") {
        LiftedState s = make_state({{3, {{"p", "LU"}}}},
                                   {{"LU", Distribution::urn(values({"a", "b", "c"}))}});
        const auto branches = split_on_slot_value(s, "p", V("a"));
        REQUIRE(branches.size() == 1);
        CHECK(branches[0].first == Rational(1));
        CHECK(same_ground_dist(weighted_ground_union(branches), ground_dist(s)));
    }
    SUBCASE("undrawn copies leave an absent branch") {
        LiftedState s = make_state({{1, {{"p", "LU"}}}},
                                   {{"LU", Distribution::urn(values({"a", "b", "c"}))}});
        const auto branches = split_on_slot_value(s, "p", V("a"));
        REQUIRE(branches.size() == 2);
        CHECK(same_ground_dist(weighted_ground_union(branches), ground_dist(s)));
    }
    SUBCASE("absent slot") {
        CHECK_THROWS_AS(split_on_slot_value(nine_one_state(), "load", V("x")), SlotAbsent);
    }
    SUBCASE("impossible value") {
        CHECK_THROWS_AS(split_on_slot_value(nine_one_state(), "ID", V("fl99")), ValueImpossible);
    }
}

TEST_CASE("merge") {
    const CanonicalState a = canonicalize(nine_one_state());
    const CanonicalState b = canonicalize(all_in_one_state());
    SUBCASE("equal canonical forms combine") {
        WeightedStates in{{Rational(3, 10), a}, {Rational(2, 10), a}};
        const auto out = merge(in);
        REQUIRE(out.size() == 1);
        CHECK(out[0].first == Rational(1, 2));
    }
    SUBCASE("distinct states unchanged") {
        WeightedStates in{{Rational(1, 2), a}, {Rational(1, 2), b}};
        CHECK(merge(in).size() == 2);
    }
    SUBCASE("total weight preserved") {
        WeightedStates in{{Rational(1, 3), a}, {Rational(1, 3), a}, {Rational(1, 3), b}};
        Rational total(0);
        for (const auto& [w, cs] : merge(in)) total += w;
        CHECK(total == Rational(1));
    }
}

TEST_CASE("unsplit recombines a complete split family") {
    const auto branches = split_on_slot_value(nine_one_state(), "ID", V("fl1"));
    REQUIRE(branches.size() == 2);
    const auto rejoined = unsplit(branches);
    REQUIRE(rejoined.size() == 1);
    CHECK(rejoined[0].first == Rational(1));
    CHECK(rejoined[0].second.key == canonicalize(nine_one_state()).key);
    // Ground distribution is preserved through split and unsplit.
    CHECK(same_ground_dist(weighted_ground_union(rejoined), ground_dist(nine_one_state())));
}

TEST_CASE("unsplit leaves incomplete or reweighted families alone") {
    auto branches = split_on_slot_value(nine_one_state(), "ID", V("fl1"));
    SUBCASE("missing branch") {
        branches.pop_back();
        CHECK(unsplit(branches).size() == branches.size());
    }
    SUBCASE("wrong proportion") {
        branches[0].first = Rational(1, 2);
        branches[1].first = Rational(1, 2);
        CHECK(unsplit(branches).size() == 2);
    }
}

TEST_CASE("unsplit absorbs a broken-out entity at the same location") {
    // One identified forklift among nine anonymous ones, all parked: the
    // identity carries no information, so the urn can take it back.
    const std::vector<Value> all_ids = fleet(10);
    LiftedState s = make_state({{1, {{"loc", "LP"}, {"ID", "LF1"}}},
                                {9, {{"loc", "LP"}, {"ID", "LID9"}}}},
                               {{"LP", Distribution::dirac(V("parking"))},
                                {"LF1", Distribution::dirac(V("fl1"))},
                                {"LID9", Distribution::urn(std::vector<Value>(
                                             all_ids.begin() + 1, all_ids.end()))}});
    const auto rejoined = unsplit({{Rational(1), canonicalize(s)}});
    REQUIRE(rejoined.size() == 1);
    CHECK(rejoined[0].second.key == canonicalize(make_state(
                                        {{10, {{"loc", "LP"}, {"ID", "LID"}}}},
                                        {{"LP", Distribution::dirac(V("parking"))},
                                         {"LID", Distribution::urn(fleet(10))}}))
                                        .key);
    CHECK(same_ground_dist(weighted_ground_union(rejoined), ground_dist(s)));
}

TEST_CASE("marginal") {
    SUBCASE("nine-one state locates fl1") {
        const auto m = marginal(nine_one_state(), "ID", V("fl1"), "loc");
        REQUIRE(m.size() == 2);
        CHECK(m.at(V("storage1")) == Rational(9, 10));
        CHECK(m.at(V("storage2")) == Rational(1, 10));
    }
    SUBCASE("all forklifts in one room") {
        const auto m = marginal(all_in_one_state(), "ID", V("fl1"), "loc");
        REQUIRE(m.size() == 1);
        CHECK(m.at(V("storage1")) == Rational(1));
    }
    SUBCASE("selector value impossible") {
        CHECK(marginal(nine_one_state(), "ID", V("fl99"), "loc").empty());
    }
    SUBCASE("ambiguous selector") {
        LiftedState s = make_state({{2, {{"ID", "LF"}, {"loc", "LP"}}}},
                                   {{"LF", Distribution::dirac(V("fl1"))},
                                    {"LP", Distribution::dirac(V("parking"))}});
        CHECK_THROWS_AS(marginal(s, "ID", V("fl1"), "loc"), SelectorAmbiguous);
    }
}

TEST_CASE("marginal agrees with brute force over grounds") {
    StateGenerator gen(42);
    int checked = 0;
    for (int i = 0; i < 120 && checked < 60; ++i) {
        const LiftedState s = gen.next();
        const CanonicalState cs = canonicalize(s);
        // Query the first slot pair we can find.
        for (const auto& value : {V("a"), V("b"), V("c")}) {
            std::map<Value, Rational> lifted_m;
            try {
                lifted_m = marginal(cs.state, "p", value, "q");
            } catch (const SelectorAmbiguous&) {
                continue;
            } catch (const Error&) {
                continue;
            }
            // Brute force on the ground distribution.
            std::map<Value, Rational> ground_m;
            bool ambiguous = false;
            for (const auto& [key, entry] : ground(cs.state)) {
                const GroundEntity* match = nullptr;
                long matches = 0;
                for (const auto& [ge, mult] : entry.first.entities) {
                    auto it = ge.find("p");
                    if (it != ge.end() && it->second == value) {
                        matches += mult;
                        match = &ge;
                    }
                }
                if (matches > 1) {
                    ambiguous = true;
                    break;
                }
                if (matches == 0) continue;
                auto q = match->find("q");
                if (q == match->end()) continue;
                ground_m[q->second] += entry.second;
            }
            if (ambiguous) continue;
            ++checked;
            REQUIRE(lifted_m.size() == ground_m.size());
            for (const auto& [v, p] : ground_m) CHECK(lifted_m.at(v) == p);
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("split soundness on random states") {
    StateGenerator gen(1234);
    int splits_checked = 0;
    for (int i = 0; i < 150; ++i) {
        const LiftedState s = gen.next();
        const GroundDist before = ground_dist(s);
        for (const auto& value : {V("a"), V("b")}) {
            WeightedStates branches;
            try {
                branches = split_on_slot_value(s, "p", value);
            } catch (const Error&) {
                continue;
            }
            Rational total(0);
            for (const auto& [w, cs] : branches) total += w;
            CHECK(total == Rational(1));
            CHECK(same_ground_dist(weighted_ground_union(branches), before));
            ++splits_checked;
        }
    }
    CHECK(splits_checked >= 50);
}

TEST_CASE("render mirrors the multiset notation") {
    const CanonicalState c = canonicalize(nine_one_state());
    CHECK(render(c.state) ==
          "{ 9*[ID:x00, loc:x01], 1*[ID:x00, loc:x02] } "
          "ctx{ x00: U(fl1,fl10,fl2,fl3,fl4,fl5,fl6,fl7,fl8,fl9), "
          "x01: d(storage1), x02: d(storage2) }");
}

TEST_CASE("fast canonical keys agree with full canonicalization") {
    StateGenerator gen(5150);
    for (int i = 0; i < 200; ++i) {
        const LiftedState s = gen.next();
        const CanonicalState full = canonicalize(s);
        std::vector<std::pair<const Entity*, long>> view;
        for (const auto& [entity, mult] : s.formula.groups) view.emplace_back(&entity, mult);
        const std::string fast = canonical_key_fast_view(view, [&](const Label& l) {
            auto it = s.context.bindings.find(l);
            return it == s.context.bindings.end() ? nullptr : &it->second;
        });
        CHECK(fast == full.key);
        // Keys are complete: parsing one back reproduces the state.
        const CanonicalState back = state_from_key(full.key);
        CHECK(back.state == full.state);
        CHECK(canonicalize(back.state).key == full.key);
    }
}
