#pragma once

#include <map>
#include <string>
#include <vector>

#include "lifted/action.hpp"
#include "lifted/observation.hpp"
#include "lifted/state.hpp"

namespace lifted {

/// Exact forward filter over fully enumerated ground states. Written
/// independently of the lifted engine (individual entities, no groups,
/// no splits) so the two can check each other.
struct GroundBelief {
    std::map<std::string, std::pair<Rational, GroundState>> states;

    std::size_t size() const { return states.size(); }
};

GroundBelief ground_initial(const WeightedStates& initial, std::size_t guard = 1000000);

/// P(reading | g) for one sensor on a concrete state.
Rational ground_likelihood(const GroundState& g, const SensorSpec& spec, const Reading& reading);

/// Successor distribution of one ground state under maximal parallel
/// steps, enumerated over individual entities.
std::vector<std::pair<GroundState, Rational>> ground_maximal_steps(
    const GroundState& g, const std::vector<ActionSchema>& schemas);

/// Samples one maximal step by its weight. For all-unary schema sets the
/// per-entity choices factorize and no enumeration is needed; otherwise
/// this falls back to enumerating the successor distribution.
/// `uniform01` supplies randomness in [0,1).
GroundState sample_maximal_step(const GroundState& g, const std::vector<ActionSchema>& schemas,
                                const std::function<double()>& uniform01);

GroundBelief ground_update(const GroundBelief& b, const Observation& obs,
                           const std::vector<SensorSpec>& sensors);

GroundBelief ground_predict(const GroundBelief& b, const std::vector<ActionSchema>& schemas,
                            std::size_t guard = 1000000);

/// update followed by predict, mirroring one lifted filter step.
GroundBelief ground_step(const GroundBelief& b, const Observation& obs,
                         const std::vector<ActionSchema>& schemas,
                         const std::vector<SensorSpec>& sensors, std::size_t guard = 1000000);

std::map<Value, Rational> ground_query(const GroundBelief& b, const SlotName& selector_slot,
                                       const Value& selector_value, const SlotName& query_slot);

/// Per-timestep marginals and hypothesis counts of one engine's run.
struct MarginalSeries {
    std::vector<std::map<Value, Rational>> marginals;  // one map per timestep
    std::vector<std::size_t> hypothesis_counts;
};

struct CompareRow {
    long t = 0;
    Rational max_abs_diff{0};
    std::size_t n_lifted = 0;
    std::size_t n_grounded = 0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    bool length_mismatch = false;
    Rational max_abs_diff{0};
};

CompareReport compare(const MarginalSeries& lifted_run, const MarginalSeries& ground_run);

}  // namespace lifted
