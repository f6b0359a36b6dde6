#include "lifted/grounded.hpp"

#include <algorithm>
#include <functional>

#include "lifted/errors.hpp"

namespace lifted {

GroundBelief ground_initial(const WeightedStates& initial, std::size_t guard) {
    GroundBelief b;
    for (const auto& [w, cs] : initial) {
        for (const auto& [key, entry] : ground(cs.state, guard)) {
            auto it = b.states.find(key);
            if (it == b.states.end()) {
                b.states.emplace(key, std::make_pair(w * entry.second, entry.first));
            } else {
                it->second.first += w * entry.second;
            }
            if (b.states.size() > guard) {
                throw ExplosionGuard("initial ground belief exceeds guard", b.states.size());
            }
        }
    }
    return b;
}

namespace {

bool satisfies(const GroundEntity& e, const Constraint& c) {
    auto it = e.find(c.slot);
    if (it == e.end()) return false;
    switch (c.op) {
        case Constraint::Op::eq:
            return it->second == c.operands.front();
        case Constraint::Op::neq:
            return it->second != c.operands.front();
        case Constraint::Op::in_set:
            return std::find(c.operands.begin(), c.operands.end(), it->second) !=
                   c.operands.end();
    }
    return false;
}

long occupancy(const GroundState& g, const SlotName& slot, const Value& value) {
    long n = 0;
    for (const auto& [entity, mult] : g.entities) {
        auto it = entity.find(slot);
        if (it != entity.end() && it->second == value) n += mult;
    }
    return n;
}

}  // namespace

Rational ground_likelihood(const GroundState& g, const SensorSpec& spec, const Reading& reading) {
    if (spec.kind == SensorSpec::Kind::presence) {
        if (!reading.presence) throw Error("presence sensor '" + spec.id + "' needs a boolean");
        const bool occupied = occupancy(g, spec.slot, spec.value) >= 1;
        return *reading.presence
                   ? (occupied ? Rational(1) - spec.false_negative : spec.false_positive)
                   : (occupied ? spec.false_negative : Rational(1) - spec.false_positive);
    }
    if (!reading.ids) throw Error("identify sensor '" + spec.id + "' needs ids");
    std::vector<Value> wanted(*reading.ids);
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    std::vector<Value> present;
    long bodies = 0;
    for (const auto& [entity, mult] : g.entities) {
        auto loc = entity.find(spec.slot);
        if (loc == entity.end() || !(loc->second == spec.value)) continue;
        bodies += mult;
        auto idit = entity.find(spec.id_slot);
        if (idit != entity.end()) {
            for (long i = 0; i < mult; ++i) present.push_back(idit->second);
        }
    }
    if (bodies != static_cast<long>(wanted.size())) return Rational(0);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    return present == wanted ? Rational(1) : Rational(0);
}

namespace {

/// Individual-entity view of a ground state.
std::vector<GroundEntity> individuals(const GroundState& g) {
    std::vector<GroundEntity> out;
    for (const auto& [entity, mult] : g.entities) {
        for (long i = 0; i < mult; ++i) out.push_back(entity);
    }
    return out;
}

struct GroundInstance {
    std::size_t schema;
    std::vector<std::size_t> entities;  // indices, pairwise distinct
};

GroundState apply_ground_instances(const std::vector<GroundEntity>& ents,
                                   const std::vector<GroundInstance>& step,
                                   const std::vector<ActionSchema>& schemas) {
    std::vector<bool> consumed_from_state(ents.size(), false);
    GroundState result;
    std::vector<GroundEntity> added;

    for (const auto& inst : step) {
        const ActionSchema& schema = schemas[inst.schema];
        std::vector<std::optional<GroundEntity>> part;
        part.reserve(inst.entities.size());
        for (auto ei : inst.entities) {
            part.emplace_back(ents[ei]);
            consumed_from_state[ei] = true;
        }
        auto live = [&](int p) -> GroundEntity& {
            if (p < 0 || static_cast<std::size_t>(p) >= part.size() || !part[p]) {
                throw InvalidEffect("effect references invalid participant in '" + schema.name +
                                    "'");
            }
            return *part[p];
        };
        auto resolve = [&](const SlotSource& src) -> Value {
            if (src.literal) return *src.literal;
            const auto& [p, slot] = *src.copy_from;
            const GroundEntity& e = live(p);
            auto it = e.find(slot);
            if (it == e.end()) throw InvalidEffect("copy from missing slot '" + slot + "'");
            return it->second;
        };
        for (const auto& effect : schema.effects) {
            switch (effect.kind) {
                case Effect::Kind::set_slot:
                    live(effect.participant)[effect.slot] = resolve(effect.source);
                    break;
                case Effect::Kind::remove_slot:
                    if (!live(effect.participant).erase(effect.slot)) {
                        throw InvalidEffect("removing missing slot '" + effect.slot + "'");
                    }
                    break;
                case Effect::Kind::consume:
                    live(effect.participant);
                    part[effect.participant] = std::nullopt;
                    break;
                case Effect::Kind::produce: {
                    GroundEntity e;
                    for (const auto& [slot, src] : effect.produced) e.emplace(slot, resolve(src));
                    added.push_back(std::move(e));
                    break;
                }
            }
        }
        for (const auto& p : part) {
            if (p) added.push_back(*p);
        }
    }

    for (std::size_t i = 0; i < ents.size(); ++i) {
        if (!consumed_from_state[i]) ++result.entities[ents[i]];
    }
    for (const auto& e : added) ++result.entities[e];
    return result;
}

}  // namespace

std::vector<std::pair<GroundState, Rational>> ground_maximal_steps(
    const GroundState& g, const std::vector<ActionSchema>& schemas) {
    const std::vector<GroundEntity> ents = individuals(g);

    // All rule instances over individual entities.
    std::vector<GroundInstance> instances;
    for (std::size_t si = 0; si < schemas.size(); ++si) {
        const ActionSchema& schema = schemas[si];
        if (schema.arity() == 0) {
            throw Error("zero-arity schema '" + schema.name +
                        "' has no maximal parallel step semantics");
        }
        std::vector<std::vector<std::size_t>> ok(schema.arity());
        for (std::size_t pos = 0; pos < schema.arity(); ++pos) {
            for (std::size_t ei = 0; ei < ents.size(); ++ei) {
                bool all = true;
                for (const auto& c : schema.participants[pos]) {
                    if (!satisfies(ents[ei], c)) {
                        all = false;
                        break;
                    }
                }
                if (all) ok[pos].push_back(ei);
            }
        }
        std::vector<std::size_t> tuple;
        std::function<void(std::size_t)> rec = [&](std::size_t pos) {
            if (pos == schema.arity()) {
                instances.push_back(GroundInstance{si, tuple});
                return;
            }
            for (auto ei : ok[pos]) {
                if (std::find(tuple.begin(), tuple.end(), ei) != tuple.end()) continue;
                tuple.push_back(ei);
                rec(pos + 1);
                tuple.pop_back();
            }
        };
        rec(0);
    }

    // Maximal sets of instances with pairwise disjoint entities.
    std::map<std::string, std::pair<GroundState, Rational>> successors;
    Rational total(0);
    std::vector<bool> used(ents.size(), false);
    std::vector<GroundInstance> chosen;

    auto conflicts = [&](const GroundInstance& inst) {
        for (auto ei : inst.entities) {
            if (used[ei]) return true;
        }
        return false;
    };

    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == instances.size()) {
            for (const auto& inst : instances) {
                if (!conflicts(inst)) return;  // extendable: not maximal
            }
            Rational w(1);
            for (const auto& inst : chosen) w *= schemas[inst.schema].rate;
            GroundState succ = apply_ground_instances(ents, chosen, schemas);
            const std::string key = encode_ground(succ);
            auto it = successors.find(key);
            if (it == successors.end()) {
                successors.emplace(key, std::make_pair(std::move(succ), w));
            } else {
                it->second.second += w;
            }
            total += w;
            return;
        }
        if (!conflicts(instances[i])) {
            for (auto ei : instances[i].entities) used[ei] = true;
            chosen.push_back(instances[i]);
            rec(i + 1);
            chosen.pop_back();
            for (auto ei : instances[i].entities) used[ei] = false;
        }
        rec(i + 1);
    };
    rec(0);

    std::vector<std::pair<GroundState, Rational>> out;
    out.reserve(successors.size());
    for (auto& [key, entry] : successors) {
        out.emplace_back(std::move(entry.first), entry.second / total);
    }
    return out;
}

GroundState sample_maximal_step(const GroundState& g, const std::vector<ActionSchema>& schemas,
                                const std::function<double()>& uniform01) {
    bool all_unary = true;
    for (const auto& schema : schemas) all_unary &= schema.arity() == 1;

    if (!all_unary) {
        const auto steps = ground_maximal_steps(g, schemas);
        double total = 0;
        for (const auto& [succ, p] : steps) total += p.to_double();
        double u = uniform01() * total;
        for (const auto& [succ, p] : steps) {
            u -= p.to_double();
            if (u <= 0) return succ;
        }
        return steps.back().first;
    }

    // Unary schemas: every entity independently picks one applicable
    // schema with probability proportional to its rate, which samples
    // maximal steps exactly by their rate products.
    const std::vector<GroundEntity> ents = individuals(g);
    std::vector<GroundInstance> step;
    for (std::size_t ei = 0; ei < ents.size(); ++ei) {
        std::vector<std::size_t> options;
        double total = 0;
        for (std::size_t si = 0; si < schemas.size(); ++si) {
            bool ok = true;
            for (const auto& c : schemas[si].participants[0]) {
                if (!satisfies(ents[ei], c)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                options.push_back(si);
                total += schemas[si].rate.to_double();
            }
        }
        if (options.empty()) continue;
        double u = uniform01() * total;
        std::size_t chosen = options.back();
        for (auto si : options) {
            u -= schemas[si].rate.to_double();
            if (u <= 0) {
                chosen = si;
                break;
            }
        }
        step.push_back(GroundInstance{chosen, {ei}});
    }
    return apply_ground_instances(ents, step, schemas);
}

GroundBelief ground_update(const GroundBelief& b, const Observation& obs,
                           const std::vector<SensorSpec>& sensors) {
    GroundBelief out;
    Rational total(0);
    for (const auto& [key, entry] : b.states) {
        Rational w = entry.first;
        for (const auto& sensor : sensors) {
            auto it = obs.readings.find(sensor.id);
            if (it == obs.readings.end()) continue;
            w *= ground_likelihood(entry.second, sensor, it->second);
            if (w.is_zero()) break;
        }
        if (w.is_zero()) continue;
        total += w;
        out.states.emplace(key, std::make_pair(w, entry.second));
    }
    if (total.is_zero()) {
        throw ImpossibleObservation("total ground likelihood is zero at t=" +
                                        std::to_string(obs.t),
                                    obs.t);
    }
    for (auto& [key, entry] : out.states) entry.first /= total;
    return out;
}

GroundBelief ground_predict(const GroundBelief& b, const std::vector<ActionSchema>& schemas,
                            std::size_t guard) {
    GroundBelief out;
    for (const auto& [key, entry] : b.states) {
        for (auto& [succ, p] : ground_maximal_steps(entry.second, schemas)) {
            const std::string skey = encode_ground(succ);
            auto it = out.states.find(skey);
            if (it == out.states.end()) {
                out.states.emplace(skey, std::make_pair(entry.first * p, std::move(succ)));
            } else {
                it->second.first += entry.first * p;
            }
            if (out.states.size() > guard) {
                throw ExplosionGuard("ground state count " + std::to_string(out.states.size()) +
                                         " exceeds guard",
                                     out.states.size());
            }
        }
    }
    return out;
}

GroundBelief ground_step(const GroundBelief& b, const Observation& obs,
                         const std::vector<ActionSchema>& schemas,
                         const std::vector<SensorSpec>& sensors, std::size_t guard) {
    return ground_predict(ground_update(b, obs, sensors), schemas, guard);
}

std::map<Value, Rational> ground_query(const GroundBelief& b, const SlotName& selector_slot,
                                       const Value& selector_value, const SlotName& query_slot) {
    std::map<Value, Rational> out;
    for (const auto& [key, entry] : b.states) {
        const GroundEntity* match = nullptr;
        long matches = 0;
        for (const auto& [entity, mult] : entry.second.entities) {
            auto it = entity.find(selector_slot);
            if (it != entity.end() && it->second == selector_value) {
                matches += mult;
                match = &entity;
            }
        }
        if (matches > 1) {
            throw SelectorAmbiguous("selector matches " + std::to_string(matches) +
                                    " ground entities");
        }
        if (matches == 0) continue;
        auto q = match->find(query_slot);
        if (q == match->end()) continue;
        auto it = out.find(q->second);
        if (it == out.end()) {
            out.emplace(q->second, entry.first);
        } else {
            it->second += entry.first;
        }
    }
    return out;
}

CompareReport compare(const MarginalSeries& lifted_run, const MarginalSeries& ground_run) {
    CompareReport report;
    report.length_mismatch = lifted_run.marginals.size() != ground_run.marginals.size() ||
                             lifted_run.hypothesis_counts.size() !=
                                 ground_run.hypothesis_counts.size();
    const std::size_t n = std::min(lifted_run.marginals.size(), ground_run.marginals.size());
    for (std::size_t t = 0; t < n; ++t) {
        CompareRow row;
        row.t = static_cast<long>(t);
        std::map<Value, Rational> diff;
        for (const auto& [v, p] : lifted_run.marginals[t]) diff[v] = p;
        for (const auto& [v, p] : ground_run.marginals[t]) {
            auto it = diff.find(v);
            if (it == diff.end()) {
                diff.emplace(v, -p);
            } else {
                it->second -= p;
            }
        }
        for (const auto& [v, d] : diff) {
            const Rational a = d.sign() < 0 ? -d : d;
            if (row.max_abs_diff < a) row.max_abs_diff = a;
        }
        if (t < lifted_run.hypothesis_counts.size()) {
            row.n_lifted = lifted_run.hypothesis_counts[t];
        }
        if (t < ground_run.hypothesis_counts.size()) {
            row.n_grounded = ground_run.hypothesis_counts[t];
        }
        if (report.max_abs_diff < row.max_abs_diff) report.max_abs_diff = row.max_abs_diff;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace lifted
