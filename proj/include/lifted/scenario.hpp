#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lifted/action.hpp"
#include "lifted/filter.hpp"
#include "lifted/observation.hpp"
#include "lifted/state.hpp"

namespace lifted {

struct Scenario {
    long format_version = 1;
    std::string name;
    std::vector<std::string> locations;
    std::vector<std::pair<std::string, std::string>> edges;  // undirected
    SlotName location_slot = "loc";
    WeightedStates initial;  // weighted lifted hypotheses, summing to 1
    std::vector<ActionSchema> schemas;
    std::vector<SensorSpec> sensors;
    long horizon = 0;  // default trace length
};

/// Parses and validates a .scn file (JSON document).
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);

/// Built-in scenarios with parameters, e.g. "warehouse", "warehouse:n=3",
/// "office:n=3:items=water+paper".
Scenario builtin_scenario(const std::string& name_with_params);

/// Sampled ground truth and observations; deterministic given the seed.
struct Trace {
    long format_version = 1;
    std::string scenario;
    std::uint64_t seed = 0;
    long horizon = 0;
    std::vector<GroundState> truth;        // truth[t] for t = 0..horizon-1 (or just t=0)
    std::vector<Observation> observations;  // one per t = 0..horizon-1
};

Trace sample_trace(const Scenario& scenario, std::uint64_t seed, long horizon);

void write_trace(const Trace& trace, const std::string& path);
void write_truth(const Trace& trace, const std::string& path);
Trace read_trace(const std::string& path);

}  // namespace lifted
