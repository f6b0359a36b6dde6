#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifted/action.hpp"
#include "lifted/state.hpp"

namespace lifted {

struct SensorSpec {
    enum class Kind { presence, identify };
    std::string id;
    Kind kind = Kind::presence;
    SlotName slot;          // watched slot (typically the location slot)
    Value value;            // watched value (the location)
    Rational false_positive{0};
    Rational false_negative{0};
    SlotName id_slot = "ID";  // identify sensors: the slot they reveal
};

/// One sensor reading: boolean for presence sensors, a set of revealed
/// values for identify sensors.
struct Reading {
    std::optional<bool> presence;
    std::optional<std::vector<Value>> ids;

    static Reading of(bool b) { return {b, std::nullopt}; }
    static Reading of(std::vector<Value> v);
};

struct Observation {
    long t = 0;
    std::map<std::string, Reading> readings;  // sensor id -> reading
};

struct PresenceEval {
    std::optional<Rational> likelihood;
    std::optional<SplitRequest> split;  // occupancy undecided: split first
};

/// P(reading | s) for a presence sensor. Occupancy is the multiplicity
/// of entities whose watched slot is pinned to the watched value; if
/// some entity's slot is uncertain about the watched value, a split
/// request is returned instead.
PresenceEval presence_likelihood(const LiftedState& s, const SensorSpec& spec, bool reading);

/// Noise-free identify update: branches of s weighted by
/// split-weight x {0,1} likelihood, where surviving branches have
/// exactly the read values at the watched location. Weights are not
/// normalized; an empty result means the reading is impossible.
WeightedStates identify_likelihood_update(const LiftedState& s, const SensorSpec& spec,
                                          const std::vector<Value>& ids);
WeightedStates identify_likelihood_update(const CanonicalState& s, const SensorSpec& spec,
                                          const std::vector<Value>& ids);

}  // namespace lifted
