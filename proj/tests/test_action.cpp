#include <doctest.h>

#include "helpers.hpp"
#include "lifted/action.hpp"
#include "lifted/errors.hpp"

using namespace lifted;
using namespace testutil;

namespace {

ActionSchema unary(const std::string& name, std::vector<Constraint> pre,
                   std::vector<Effect> effects, Rational rate = Rational(1)) {
    ActionSchema s;
    s.name = name;
    s.participants.push_back(std::move(pre));
    s.effects = std::move(effects);
    s.rate = rate;
    return s;
}

Constraint eq(const SlotName& slot, const std::string& v) {
    return Constraint{slot, Constraint::Op::eq, {V(v)}};
}

const ActionSchema lift_heavy = unary(
    "fl1_lift_heavy", {eq("ID", "fl1")}, {Effect::set(0, "load", SlotSource::value(V("heavy")))});

}  // namespace

TEST_CASE("applicability") {
    SUBCASE("identified forklift satisfies an identity precondition") {
        const auto branches = split_on_slot_value(nine_one_state(), "ID", V("fl1"));
        REQUIRE(branches.size() == 2);
        for (const auto& [w, cs] : branches) {
            const Applicability a = applicability(cs.state, lift_heavy);
            CHECK(a.status == Applicability::Status::applicable);
            REQUIRE(a.bindings.size() == 1);
            const auto groups = group_list(cs.state);
            const Entity& bound = groups[a.bindings[0][0]].first;
            const Distribution& d = cs.state.context.bindings.at(bound.slots.at("ID"));
            CHECK(d.is_dirac());
            CHECK(d.dirac_value() == V("fl1"));
        }
    }
    SUBCASE("pooled identities are indeterminate and ask for a split") {
        const Applicability a = applicability(nine_one_state(), lift_heavy);
        CHECK(a.status == Applicability::Status::indeterminate);
        REQUIRE(a.split);
        CHECK(a.split->slot == "ID");
        CHECK(a.split->value == V("fl1"));
    }
    SUBCASE("value absent from every label") {
        const ActionSchema wants_missing = unary("needs_fl99", {eq("ID", "fl99")}, {});
        const Applicability a = applicability(nine_one_state(), wants_missing);
        CHECK(a.status == Applicability::Status::inapplicable);
    }
}

TEST_CASE("enumerate maximal compounds") {
    const LiftedState one = make_state({{1, {{"loc", "LS"}}}},
                                       {{"LS", Distribution::dirac(V("stor1"))}});
    SUBCASE("single unary schema gives the unique maximal step") {
        const auto compounds =
            enumerate_maximal_compounds(one, {unary("go", {eq("loc", "stor1")}, {})});
        REQUIRE(compounds.size() == 1);
        CHECK(compounds[0].second == Rational(1));
        CHECK(compounds[0].first.instances.size() == 1);
    }
    SUBCASE("stay and go with equal rates halve the mass") {
        const std::vector<ActionSchema> schemas{
            unary("stay", {eq("loc", "stor1")}, {}),
            unary("go", {eq("loc", "stor1")},
                  {Effect::set(0, "loc", SlotSource::value(V("stor2")))})};
        const auto compounds = enumerate_maximal_compounds(one, schemas);
        REQUIRE(compounds.size() == 2);
        CHECK(compounds[0].second == Rational(1, 2));
        CHECK(compounds[1].second == Rational(1, 2));
    }
    SUBCASE("nothing applicable leaves the empty compound") {
        const auto compounds =
            enumerate_maximal_compounds(one, {unary("far", {eq("loc", "x")}, {})});
        REQUIRE(compounds.size() == 1);
        CHECK(compounds[0].first.empty());
        CHECK(compounds[0].second == Rational(1));
    }
    SUBCASE("weights sum to one and compounds are maximal") {
        const std::vector<ActionSchema> schemas{
            unary("stay", {eq("loc", "storage1")}, {}),
            unary("go", {eq("loc", "storage1")},
                  {Effect::set(0, "loc", SlotSource::value(V("storage2")))}),
            unary("back", {eq("loc", "storage2")},
                  {Effect::set(0, "loc", SlotSource::value(V("storage1")))})};
        const LiftedState s = canonicalize(nine_one_state()).state;
        const auto compounds = enumerate_maximal_compounds(s, schemas);
        Rational total(0);
        const auto groups = group_list(s);
        for (const auto& [compound, w] : compounds) {
            total += w;
            // Maximality: every instance type must be blocked on the residual.
            std::vector<long> residual;
            for (const auto& [e, m] : groups) residual.push_back(m);
            for (const auto& [type, count] : compound.instances) {
                for (auto gi : type.binding) residual[gi] -= count;
            }
            for (const auto& schema : schemas) {
                const Applicability a = applicability(s, schema);
                for (const auto& binding : a.bindings) {
                    std::map<std::size_t, long> need;
                    for (auto gi : binding) ++need[gi];
                    bool fits = true;
                    for (const auto& [gi, n] : need) {
                        if (residual[gi] < n) fits = false;
                    }
                    CHECK(!fits);
                }
            }
        }
        CHECK(total == Rational(1));
    }
}

TEST_CASE("apply compound") {
    SUBCASE("setting a slot on the identified entity") {
        const auto branches = split_on_slot_value(nine_one_state(), "ID", V("fl1"));
        const LiftedState& s = branches[0].second.state;
        const auto compounds = enumerate_maximal_compounds(s, {lift_heavy});
        REQUIRE(compounds.size() == 1);
        const LiftedState next = apply_compound(s, compounds[0].first, {lift_heavy});
        bool found = false;
        for (const auto& [entity, mult] : next.formula.groups) {
            auto it = entity.slots.find("load");
            if (it == entity.slots.end()) continue;
            found = true;
            CHECK(mult == 1);
            CHECK(next.context.bindings.at(it->second) == Distribution::dirac(V("heavy")));
            CHECK(next.context.bindings.at(entity.slots.at("ID")) ==
                  Distribution::dirac(V("fl1")));
        }
        CHECK(found);
    }
    SUBCASE("empty compound is the identity") {
        const CanonicalState c = canonicalize(nine_one_state());
        const LiftedState next = apply_compound(c.state, CompoundAction{}, {});
        CHECK(canonicalize(next).key == c.key);
    }
    SUBCASE("moving one of nine shifts the group counts to eight and two") {
        const std::vector<ActionSchema> schemas{
            unary("stay1", {eq("loc", "storage1")}, {}),
            unary("stay2", {eq("loc", "storage2")}, {}),
            unary("move12", {eq("loc", "storage1")},
                  {Effect::set(0, "loc", SlotSource::value(V("storage2")))})};
        const LiftedState s = canonicalize(nine_one_state()).state;
        const auto compounds = enumerate_maximal_compounds(s, schemas);
        bool checked = false;
        for (const auto& [compound, w] : compounds) {
            long movers = 0;
            for (const auto& [type, count] : compound.instances) {
                if (schemas[type.schema].name == "move12") movers += count;
            }
            if (movers != 1) continue;
            const LiftedState next = apply_compound(s, compound, schemas);
            std::map<std::string, long> by_loc;
            for (const auto& [entity, mult] : next.formula.groups) {
                const auto& d = next.context.bindings.at(entity.slots.at("loc"));
                by_loc[d.dirac_value().symbol] += mult;
            }
            CHECK(by_loc.at("storage1") == 8);
            CHECK(by_loc.at("storage2") == 2);
            checked = true;
            break;
        }
        CHECK(checked);
    }
    SUBCASE("consume and produce") {
        const LiftedState s = make_state({{2, {{"kind", "LK"}}}},
                                         {{"LK", Distribution::dirac(V("raw"))}});
        ActionSchema transform = unary(
            "transform", {eq("kind", "raw")},
            {Effect::consume(0), Effect::produce({{"kind", SlotSource::value(V("cooked"))}})});
        const auto compounds = enumerate_maximal_compounds(s, {transform});
        REQUIRE(compounds.size() == 1);
        const LiftedState next = apply_compound(s, compounds[0].first, {transform});
        REQUIRE(next.formula.groups.size() == 1);
        const auto& [entity, mult] = *next.formula.groups.begin();
        CHECK(mult == 2);
        CHECK(next.context.bindings.at(entity.slots.at("kind")) ==
              Distribution::dirac(V("cooked")));
    }
    SUBCASE("effect referencing a missing slot") {
        const LiftedState s = make_state({{1, {{"loc", "LS"}}}},
                                         {{"LS", Distribution::dirac(V("stor1"))}});
        ActionSchema bad = unary("bad", {eq("loc", "stor1")},
                                 {Effect::set(0, "x", SlotSource::copy(0, "missing"))});
        const auto compounds = enumerate_maximal_compounds(s, {bad});
        CHECK_THROWS_AS(apply_compound(s, compounds[0].first, {bad}), InvalidEffect);
    }
}

TEST_CASE("binary schema consumes two entities at once") {
    // A handover: a loaded carrier passes its load to an empty one.
    const LiftedState s = make_state({{1, {{"role", "LG"}, {"item", "LI"}}},
                                      {1, {{"role", "LR"}, {"item", "LN"}}}},
                                     {{"LG", Distribution::dirac(V("giver"))},
                                      {"LR", Distribution::dirac(V("taker"))},
                                      {"LI", Distribution::dirac(V("box"))},
                                      {"LN", Distribution::dirac(V("none"))}});
    ActionSchema handover;
    handover.name = "handover";
    handover.participants = {{eq("role", "giver")}, {eq("role", "taker")}};
    handover.effects = {Effect::set(1, "item", SlotSource::copy(0, "item")),
                        Effect::set(0, "item", SlotSource::value(V("none")))};
    handover.rate = Rational(1);

    const auto compounds = enumerate_maximal_compounds(s, {handover});
    REQUIRE(compounds.size() == 1);
    const LiftedState next = apply_compound(s, compounds[0].first, {handover});
    for (const auto& [entity, mult] : next.formula.groups) {
        const auto& role = next.context.bindings.at(entity.slots.at("role"));
        const auto& item = next.context.bindings.at(entity.slots.at("item"));
        if (role.dirac_value() == V("giver")) CHECK(item.dirac_value() == V("none"));
        if (role.dirac_value() == V("taker")) CHECK(item.dirac_value() == V("box"));
    }
}

TEST_CASE("lifted stepping commutes with ground-level maximal steps") {
    const std::vector<ActionSchema> schemas{
        unary("stay_a", {eq("p", "a")}, {}),
        unary("go_ab", {eq("p", "a")}, {Effect::set(0, "p", SlotSource::value(V("b")))}),
        unary("go_ba", {eq("p", "b")}, {Effect::set(0, "p", SlotSource::value(V("a")))},
              Rational(2))};
    StateGenerator gen(99);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        const LiftedState s = gen.next();
        const GroundDist via_ground = ground_forward_ground(s, schemas);
        const GroundDist via_lifted = lifted_forward_ground(s, schemas);
        CHECK(same_ground_dist(via_lifted, via_ground));
        ++checked;
    }
    CHECK(checked >= 30);
}
