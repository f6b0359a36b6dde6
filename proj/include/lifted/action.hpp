#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifted/state.hpp"

namespace lifted {

/// Decidable per-slot precondition.
struct Constraint {
    enum class Op { eq, neq, in_set };
    SlotName slot;
    Op op = Op::eq;
    std::vector<Value> operands;  // eq/neq use exactly one

    friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Where an effect takes its value from: a literal or another
/// participant's slot (label-sharing, which preserves dependence).
struct SlotSource {
    std::optional<Value> literal;
    std::optional<std::pair<int, SlotName>> copy_from;

    static SlotSource value(Value v) { return {std::move(v), std::nullopt}; }
    static SlotSource copy(int participant, SlotName slot) {
        return {std::nullopt, std::make_pair(participant, std::move(slot))};
    }
};

struct Effect {
    enum class Kind { set_slot, remove_slot, consume, produce };
    Kind kind = Kind::set_slot;
    int participant = 0;                           // set/remove/consume
    SlotName slot;                                 // set/remove
    SlotSource source;                             // set
    std::map<SlotName, SlotSource> produced;       // produce

    static Effect set(int participant, SlotName slot, SlotSource src);
    static Effect remove(int participant, SlotName slot);
    static Effect consume(int participant);
    static Effect produce(std::map<SlotName, SlotSource> slots);
};

struct ActionSchema {
    std::string name;
    std::vector<std::vector<Constraint>> participants;  // one constraint set per participant
    std::vector<Effect> effects;
    Rational rate{1};

    std::size_t arity() const { return participants.size(); }
};

/// Participant groups of one rule instance, as indices into the
/// canonical group list of the state the compound was enumerated from.
using Binding = std::vector<std::size_t>;

struct InstanceType {
    std::size_t schema;
    Binding binding;

    friend bool operator==(const InstanceType&, const InstanceType&) = default;
    friend auto operator<=>(const InstanceType&, const InstanceType&) = default;
};

/// Multiset of simultaneously executed rule instances.
struct CompoundAction {
    std::map<InstanceType, long> instances;

    bool empty() const { return instances.empty(); }
};

struct SplitRequest {
    SlotName slot;
    Value value;
};

struct Applicability {
    enum class Status { applicable, inapplicable, indeterminate };
    Status status = Status::inapplicable;
    std::vector<Binding> bindings;        // when applicable
    std::optional<SplitRequest> split;    // when indeterminate
};

/// Tests whether the schema can fire in s. If any constraint's truth
/// depends on an uncertain label, reports the (slot, value) to split on.
Applicability applicability(const LiftedState& s, const ActionSchema& schema);

/// All maximal multisets of simultaneously applicable instances, with
/// normalized probabilities derived from rates and the number of
/// distinct participant selections each compound represents. Requires
/// every schema to be determinate on s (split first). Always returns at
/// least one compound; the empty compound appears iff nothing applies.
std::vector<std::pair<CompoundAction, Rational>> enumerate_maximal_compounds(
    const LiftedState& s, const std::vector<ActionSchema>& schemas);

/// Consumes the instances' participants and applies their effects.
/// The result is canonical and valid.
LiftedState apply_compound(const LiftedState& s, const CompoundAction& c,
                           const std::vector<ActionSchema>& schemas);

/// As apply_compound, but keeps the canonical key alongside the state.
CanonicalState apply_compound_canonical(const LiftedState& s, const CompoundAction& c,
                                        const std::vector<ActionSchema>& schemas);

/// Distribution over maximal-step successors of a determinate state,
/// keyed by canonical form, probabilities summing to 1. Equivalent to
/// enumerating maximal compounds and applying each, but effect-equal
/// schemas are pooled, successors are assembled directly, and weights
/// are counted in integer arithmetic, so large fan-outs stay cheap.
/// States can be rebuilt from the keys via state_from_key.
std::vector<std::pair<std::string, Rational>> maximal_step_distribution(
    const LiftedState& s, const std::vector<ActionSchema>& schemas);

/// Canonical group list used by Binding indices.
std::vector<std::pair<Entity, long>> group_list(const LiftedState& s);

}  // namespace lifted
