#pragma once

#include <stdexcept>
#include <string>

namespace lifted {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A requested value has zero multiplicity in an urn.
struct ValueAbsent : Error {
    using Error::Error;
};

// More draws requested than the distribution can supply.
struct CapacityExceeded : Error {
    using Error::Error;
};

// Enumeration would exceed the configured state-count guard.
struct ExplosionGuard : Error {
    ExplosionGuard(const std::string& what, std::size_t count)
        : Error(what), count(count) {}
    std::size_t count;
};

// No entity carries the named slot.
struct SlotAbsent : Error {
    using Error::Error;
};

// The split value has zero probability under every relevant label.
struct ValueImpossible : Error {
    using Error::Error;
};

// More than one entity could hold the selector value at once.
struct SelectorAmbiguous : Error {
    using Error::Error;
};

// An effect references a missing slot or participant.
struct InvalidEffect : Error {
    using Error::Error;
};

// Total observation likelihood is zero: model and trace disagree.
struct ImpossibleObservation : Error {
    ImpossibleObservation(const std::string& what, long t)
        : Error(what), timestep(t) {}
    long timestep;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct UnknownScenario : Error {
    using Error::Error;
};

}  // namespace lifted
