#pragma once

// Shared construction helpers and ground-distribution oracles for tests.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "lifted/distribution.hpp"
#include "lifted/filter.hpp"
#include "lifted/grounded.hpp"
#include "lifted/state.hpp"

namespace testutil {

using namespace lifted;

inline Value V(const std::string& s) { return Value(s); }

inline std::vector<Value> values(std::initializer_list<const char*> names) {
    std::vector<Value> out;
    for (const char* n : names) out.emplace_back(n);
    return out;
}

inline std::vector<Value> fleet(int n, const std::string& prefix = "fl") {
    std::vector<Value> out;
    for (int i = 1; i <= n; ++i) out.emplace_back(prefix + std::to_string(i));
    return out;
}

struct GroupSpec {
    long count;
    std::map<SlotName, Label> slots;
};

inline LiftedState make_state(const std::vector<GroupSpec>& groups,
                              const std::map<Label, Distribution>& context) {
    LiftedState s;
    for (const auto& g : groups) {
        Entity e;
        e.slots = g.slots;
        s.formula.groups[e] += g.count;
    }
    s.context.bindings = context;
    return s;
}

/// Warehouse state with 9 forklifts in storage room 1 and one in storage
/// room 2, identities pooled in a ten-identifier urn.
inline LiftedState nine_one_state(int n = 10) {
    return make_state({{n - 1, {{"loc", "LS1"}, {"ID", "LID"}}},
                       {1, {{"loc", "LS2"}, {"ID", "LID"}}}},
                      {{"LID", Distribution::urn(fleet(n))},
                       {"LS1", Distribution::dirac(V("storage1"))},
                       {"LS2", Distribution::dirac(V("storage2"))}});
}

/// All forklifts in storage room 1.
inline LiftedState all_in_one_state(int n = 10) {
    return make_state({{n, {{"loc", "LS1"}, {"ID", "LID"}}}},
                      {{"LID", Distribution::urn(fleet(n))},
                       {"LS1", Distribution::dirac(V("storage1"))}});
}

using GroundDist = std::map<std::string, Rational>;

inline GroundDist ground_dist(const LiftedState& s, std::size_t guard = 200000) {
    GroundDist out;
    for (const auto& [key, entry] : ground(s, guard)) out.emplace(key, entry.second);
    return out;
}

inline GroundDist weighted_ground_union(const WeightedStates& states,
                                        std::size_t guard = 200000) {
    GroundDist out;
    for (const auto& [w, cs] : states) {
        for (const auto& [key, entry] : ground(cs.state, guard)) {
            auto it = out.find(key);
            if (it == out.end()) {
                out.emplace(key, w * entry.second);
            } else {
                it->second += w * entry.second;
            }
        }
    }
    for (auto it = out.begin(); it != out.end();) {
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
    }
    return out;
}

inline bool same_ground_dist(const GroundDist& a, const GroundDist& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [key, p] : a) {
        auto it = b.find(key);
        if (it == b.end() || !(it->second == p)) return false;
    }
    return true;
}

/// Forward step at the lifted level (splits, maximal compounds, apply),
/// reported as a ground distribution.
inline GroundDist lifted_forward_ground(const LiftedState& s,
                                        const std::vector<ActionSchema>& schemas) {
    LiftedBelief b = make_belief({{Rational(1), canonicalize(s)}});
    const LiftedBelief next = predict(b, schemas);
    WeightedStates ws;
    for (const auto& [key, hyp] : next.hypotheses) ws.emplace_back(hyp.first, *hyp.second);
    return weighted_ground_union(ws);
}

/// Forward step entirely at the ground level: enumerate grounds, step
/// each with ground-level maximal parallel semantics, aggregate.
inline GroundDist ground_forward_ground(const LiftedState& s,
                                        const std::vector<ActionSchema>& schemas) {
    GroundDist out;
    for (const auto& [key, entry] : ground(s)) {
        for (const auto& [succ, q] : ground_maximal_steps(entry.first, schemas)) {
            out[encode_ground(succ)] += entry.second * q;
        }
    }
    for (auto it = out.begin(); it != out.end();) {
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
    }
    return out;
}

/// Random valid lifted states over a small value pool, for property tests.
class StateGenerator {
public:
    explicit StateGenerator(std::uint64_t seed) : rng_(seed) {}

    LiftedState next() {
        for (;;) {
            LiftedState s = candidate();
            if (!validate(s)) return s;
        }
    }

private:
    long pick(long lo, long hi) {  // inclusive
        return lo + static_cast<long>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    LiftedState candidate() {
        static const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
        static const std::vector<std::string> slot_names = {"p", "q", "r"};
        LiftedState s;

        const long n_labels = pick(1, 4);
        std::vector<Label> labels;
        for (long i = 0; i < n_labels; ++i) {
            const Label label = "L" + std::to_string(i);
            labels.push_back(label);
            switch (pick(0, 2)) {
                case 0:
                    s.context.bindings.emplace(label,
                                               Distribution::dirac(V(pool[pick(0, 4)])));
                    break;
                case 1: {
                    std::map<Value, long> counts;
                    const long distinct = pick(1, 3);
                    for (long k = 0; k < distinct; ++k) counts[V(pool[pick(0, 4)])] += pick(1, 2);
                    s.context.bindings.emplace(label, Distribution::urn(counts));
                    break;
                }
                default: {
                    std::map<Value, Rational> probs;
                    const long distinct = pick(2, 3);
                    std::vector<long> raw;
                    std::vector<Value> vals;
                    long total = 0;
                    for (long k = 0; k < distinct; ++k) {
                        Value v = V(pool[pick(0, 4)]);
                        if (probs.count(v)) continue;
                        probs.emplace(v, Rational(0));
                        vals.push_back(v);
                        raw.push_back(pick(1, 5));
                        total += raw.back();
                    }
                    for (std::size_t k = 0; k < vals.size(); ++k) {
                        probs[vals[k]] = Rational(raw[k], total);
                    }
                    if (probs.size() < 2) {
                        probs.clear();
                        probs.emplace(V("a"), Rational(1, 2));
                        probs.emplace(V("b"), Rational(1, 2));
                    }
                    s.context.bindings.emplace(label, Distribution::categorical(probs));
                    break;
                }
            }
        }

        const long n_groups = pick(1, 3);
        for (long g = 0; g < n_groups; ++g) {
            Entity e;
            const long n_slots = pick(1, 2);
            for (long k = 0; k < n_slots; ++k) {
                e.slots[slot_names[pick(0, static_cast<long>(slot_names.size()) - 1)]] =
                    labels[pick(0, n_labels - 1)];
            }
            s.formula.groups[e] += pick(1, 3);
        }
        return s;
    }

    std::mt19937_64 rng_;
};

}  // namespace testutil
