#include "lifted/observation.hpp"

#include <algorithm>
#include <set>

#include "lifted/errors.hpp"

namespace lifted {

Reading Reading::of(std::vector<Value> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return {std::nullopt, std::move(v)};
}

namespace {

/// Occupancy at the watched location, or a split request when some
/// entity's watched slot is undecided about the watched value.
struct Occupancy {
    std::optional<long> count;
    std::optional<SplitRequest> split;
};

Occupancy occupancy(const LiftedState& s, const SlotName& slot, const Value& value) {
    long count = 0;
    for (const auto& [entity, mult] : s.formula.groups) {
        auto it = entity.slots.find(slot);
        if (it == entity.slots.end()) continue;
        const Distribution& d = s.context.bindings.at(it->second);
        const Rational p = d.draw_probability(value);
        if (p.is_zero()) continue;
        if (!d.determinate_value()) {
            return {std::nullopt, SplitRequest{slot, value}};
        }
        count += mult;
    }
    return {count, std::nullopt};
}

}  // namespace

PresenceEval presence_likelihood(const LiftedState& s, const SensorSpec& spec, bool reading) {
    const Occupancy occ = occupancy(s, spec.slot, spec.value);
    if (!occ.count) return {std::nullopt, occ.split};
    const bool occupied = *occ.count >= 1;
    Rational lik = reading ? (occupied ? Rational(1) - spec.false_negative : spec.false_positive)
                           : (occupied ? spec.false_negative : Rational(1) - spec.false_positive);
    return {lik, std::nullopt};
}

WeightedStates identify_likelihood_update(const LiftedState& s, const SensorSpec& spec,
                                          const std::vector<Value>& ids) {
    return identify_likelihood_update(canonicalize(s), spec, ids);
}

WeightedStates identify_likelihood_update(const CanonicalState& s, const SensorSpec& spec,
                                          const std::vector<Value>& ids) {
    std::vector<Value> wanted(ids);
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    WeightedStates work{{Rational(1), s}};

    // Decide, id by id, whether an entity holds the id at the watched
    // location; branches that cannot are dropped (zero likelihood).
    for (const auto& id : wanted) {
        WeightedStates next;
        while (!work.empty()) {
            auto [w, cs] = std::move(work.back());
            work.pop_back();
            const LiftedState& st = cs.state;

            // Is there a decided holder of this id at the watched location?
            bool holder_here = false;
            bool location_undecided = false;
            for (const auto& [entity, mult] : st.formula.groups) {
                auto idit = entity.slots.find(spec.id_slot);
                if (idit == entity.slots.end()) continue;
                const Distribution& idd = st.context.bindings.at(idit->second);
                if (!(idd.is_dirac() && idd.dirac_value() == id)) continue;
                auto locit = entity.slots.find(spec.slot);
                if (locit == entity.slots.end()) continue;  // holder not at any location
                const Distribution& locd = st.context.bindings.at(locit->second);
                const Rational p = locd.draw_probability(spec.value);
                if (p.is_zero()) continue;
                if (locd.determinate_value()) {
                    holder_here = true;
                } else {
                    location_undecided = true;
                }
            }
            if (holder_here) {
                next.emplace_back(std::move(w), std::move(cs));
                continue;
            }
            if (location_undecided) {
                for (auto& [bw, bcs] : split_canonical(cs, spec.slot, spec.value)) {
                    work.emplace_back(w * bw, std::move(bcs));
                }
                continue;
            }
            if (split_pending(st, spec.id_slot, id)) {
                for (auto& [bw, bcs] : split_canonical(cs, spec.id_slot, id)) {
                    work.emplace_back(w * bw, std::move(bcs));
                }
                continue;
            }
            // Decided: nobody holds the id at the watched location.
        }
        work = merge(next);
    }

    // Finally the occupancy at the watched location must equal |ids|:
    // the sensor reveals everyone who is there.
    WeightedStates out;
    while (!work.empty()) {
        auto [w, cs] = std::move(work.back());
        work.pop_back();
        const Occupancy occ = occupancy(cs.state, spec.slot, spec.value);
        if (occ.count) {
            if (*occ.count == static_cast<long>(wanted.size())) {
                out.emplace_back(std::move(w), std::move(cs));
            }
            continue;
        }
        for (auto& [bw, bcs] : split_canonical(cs, occ.split->slot, occ.split->value)) {
            work.emplace_back(w * bw, std::move(bcs));
        }
    }
    return merge(out);
}

}  // namespace lifted
