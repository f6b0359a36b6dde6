#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifted/distribution.hpp"

namespace lifted {

using SlotName = std::string;
using Label = std::string;

/// Structure of one entity: named slots bound to distribution labels.
struct Entity {
    std::map<SlotName, Label> slots;

    friend bool operator==(const Entity&, const Entity&) = default;
    friend auto operator<=>(const Entity&, const Entity&) = default;
};

/// Multiset of entity structures.
struct StateFormula {
    std::map<Entity, long> groups;

    friend bool operator==(const StateFormula&, const StateFormula&) = default;
};

/// Bindings from distribution labels to distribution representations.
struct Context {
    std::map<Label, Distribution> bindings;

    friend bool operator==(const Context& a, const Context& b) {
        return a.bindings == b.bindings;
    }
};

/// A state formula paired with a context; compactly represents a
/// weighted set of ground states.
struct LiftedState {
    StateFormula formula;
    Context context;

    friend bool operator==(const LiftedState&, const LiftedState&) = default;
};

/// Fully concrete state: multiset of slot->value maps.
using GroundEntity = std::map<SlotName, Value>;

struct GroundState {
    std::map<GroundEntity, long> entities;

    friend bool operator==(const GroundState&, const GroundState&) = default;
    friend auto operator<=>(const GroundState&, const GroundState&) = default;
};

std::string encode_ground(const GroundState& g);

struct Violation {
    int rule;  // 1: dangling label, 2: capacity exceeded, 0: structural
    std::string message;
};

/// Checks context validity against the formula; nullopt means ok.
std::optional<Violation> validate(const LiftedState& s);

struct CanonicalState {
    LiftedState state;
    std::string key;
};

/// Deterministic normal form: slots sorted, groups fused and ordered,
/// labels renamed so that renaming-equivalent states compare equal.
/// Unreferenced labels are dropped; single-value urns become Dirac;
/// structurally equal Dirac and categorical labels are pooled (their
/// draws are exchangeable or independent, so sharing is sound — urns
/// are never pooled).
CanonicalState canonicalize(const LiftedState& s);

std::string canonical_key(const LiftedState& s);

/// Canonical key computed without materializing the canonical state.
/// `lookup` resolves labels to distributions (a context plus, e.g.,
/// pending fresh labels). Byte-identical to canonicalize(...).key.
std::string canonical_key_fast(
    const StateFormula& formula,
    const std::function<const Distribution*(const Label&)>& lookup);

/// As canonical_key_fast, over a flat group view. Entries may repeat
/// and need not be sorted; multiplicities of equal entities are summed.
std::string canonical_key_fast_view(
    const std::vector<std::pair<const Entity*, long>>& groups,
    const std::function<const Distribution*(const Label&)>& lookup);

/// Rebuilds the canonical state a key encodes (keys are complete).
CanonicalState state_from_key(const std::string& key);

/// Enumerates every ground state the lifted state represents, with
/// exact probabilities summing to 1. Throws ExplosionGuard when the
/// enumeration exceeds `guard` states.
std::map<std::string, std::pair<GroundState, Rational>> ground(const LiftedState& s,
                                                               std::size_t guard = 1000000);

using WeightedStates = std::vector<std::pair<Rational, CanonicalState>>;

/// Partitions the state by where one copy of `v` drawn for `slot`-bound
/// labels can sit. Weights sum to 1 and the weighted union of grounds
/// equals ground(s) exactly. If every `slot` binding is already decided
/// for `v`, returns the state unchanged with weight 1. Repeated splits
/// fully decide the predicate slot==v.
WeightedStates split_on_slot_value(const LiftedState& s, const SlotName& slot, const Value& v);

/// split_on_slot_value for a state that is already canonical.
WeightedStates split_canonical(const CanonicalState& s, const SlotName& slot, const Value& v);

/// True when another split would still refine the predicate slot==v.
bool split_pending(const LiftedState& s, const SlotName& slot, const Value& v);

/// Per-thread running count of performed split operations (metrics).
long split_operations();

/// Combines states with equal canonical form by summing weights.
WeightedStates merge(const WeightedStates& states);

/// A candidate split family this state could have come from: splitting
/// `parent` reproduces exactly the listed branch keys with the listed
/// weights (which sum to 1).
struct UnsplitFamily {
    CanonicalState parent;
    std::vector<std::pair<std::string, Rational>> branches;
};

/// Candidate parents of s, found by handing one Dirac-bound value back
/// to an urn and re-splitting.
std::vector<UnsplitFamily> unsplit_candidates(const CanonicalState& s);

using WeightedStateMap = std::map<std::string, std::pair<Rational, CanonicalState>>;

/// Collapses complete, exactly proportional split families in place
/// until none is left. `families` supplies (and may cache) the
/// candidates per state.
void unsplit_fixpoint(
    WeightedStateMap& items,
    const std::function<const std::vector<UnsplitFamily>&(const CanonicalState&)>& families,
    long* collapse_count = nullptr);

/// Inverse of split: exhaustively recombines complete split families
/// whose weights are exactly proportional to the split weights.
WeightedStates unsplit(const WeightedStates& states, long* collapse_count = nullptr);

/// Distribution of query_slot for the unique entity whose selector_slot
/// holds selector_value, via non-destructive splits. Total mass may be
/// below 1 when no entity can hold the selector value.
std::map<Value, Rational> marginal(const LiftedState& s, const SlotName& selector_slot,
                                   const Value& selector_value, const SlotName& query_slot);

/// Human-readable rendering: multiset with multiplicities plus context block.
std::string render(const LiftedState& s);

}  // namespace lifted
