#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lifted/action.hpp"
#include "lifted/observation.hpp"
#include "lifted/state.hpp"

namespace lifted {

/// Normalized probability distribution over canonical lifted states,
/// keyed by canonical form. States are shared, never mutated.
using SharedState = std::shared_ptr<const CanonicalState>;

struct LiftedBelief {
    std::map<std::string, std::pair<Rational, SharedState>> hypotheses;

    std::size_t size() const { return hypotheses.size(); }
    Rational total() const;
};

/// Builds a belief from weighted states: canonical merge, positivity
/// check and exact normalization. The incoming weights must sum to 1
/// within 1e-9.
LiftedBelief make_belief(const WeightedStates& states);

/// Memo shared across filter steps of one run: states recur over time,
/// so their predict expansions and unsplit families are computed once
/// and successor states are interned. Valid only for a fixed schema
/// set. Thread-safe; interned states live as long as the cache.
class ExpansionCache {
public:
    struct Expansion {
        std::vector<std::pair<Rational, SharedState>> successors;  // sum to 1
        long splits = 0;  // split operations one expansion costs
    };

    std::shared_ptr<const Expansion> predict_expansion(const CanonicalState& s,
                                                       const std::vector<ActionSchema>& schemas);
    const std::vector<UnsplitFamily>& families(const CanonicalState& s);

private:
    SharedState find_state(const std::string& key);
    SharedState intern(CanonicalState&& cs);

    std::mutex mu_;
    std::map<std::string, SharedState> states_;
    std::map<std::string, std::shared_ptr<const Expansion>> expansions_;
    std::map<std::string, std::vector<UnsplitFamily>> families_;
    std::size_t cached_successors_ = 0;
};

struct FilterOptions {
    std::size_t hypothesis_guard = 1000000;
    bool prune_enabled = false;
    Rational prune_epsilon{0};
    int threads = 1;
    ExpansionCache* cache = nullptr;  // optional, owned by the caller
};

struct StepMetrics {
    long t = 0;
    std::size_t n_hyp_pre = 0;
    std::size_t n_hyp_post_update = 0;
    std::size_t n_hyp_post_update_unmerged = 0;
    std::size_t n_hyp_post_predict = 0;
    std::size_t n_hyp_post_predict_unmerged = 0;
    long n_splits = 0;
    long n_merges = 0;
    double ms = 0.0;
};

/// Observation update: per-hypothesis sensor-demanded splits, likelihood
/// reweighting, exact renormalization, merge. Throws
/// ImpossibleObservation when the total likelihood is zero.
LiftedBelief update(const LiftedBelief& b, const Observation& obs,
                    const std::vector<SensorSpec>& sensors, const FilterOptions& options = {},
                    StepMetrics* metrics = nullptr);

/// Prediction: resolve indeterminate preconditions by splitting,
/// enumerate maximal compounds, apply them, merge. Mass is preserved
/// exactly.
LiftedBelief predict(const LiftedBelief& b, const std::vector<ActionSchema>& schemas,
                     const FilterOptions& options = {}, StepMetrics* metrics = nullptr);

/// Belief-level marginal; the belief itself is never modified.
std::map<Value, Rational> query(const LiftedBelief& b, const SlotName& selector_slot,
                                const Value& selector_value, const SlotName& query_slot);

struct StepResult {
    LiftedBelief updated;
    LiftedBelief predicted;
    StepMetrics metrics;
};

/// One timestep: update with the observation, then predict; queries run
/// against `updated` between the phases.
StepResult step(const LiftedBelief& b, const Observation& obs,
                const std::vector<ActionSchema>& schemas, const std::vector<SensorSpec>& sensors,
                const FilterOptions& options = {});

}  // namespace lifted
