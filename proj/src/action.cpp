#include "lifted/action.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "lifted/errors.hpp"

namespace lifted {

Effect Effect::set(int participant, SlotName slot, SlotSource src) {
    Effect e;
    e.kind = Kind::set_slot;
    e.participant = participant;
    e.slot = std::move(slot);
    e.source = std::move(src);
    return e;
}

Effect Effect::remove(int participant, SlotName slot) {
    Effect e;
    e.kind = Kind::remove_slot;
    e.participant = participant;
    e.slot = std::move(slot);
    return e;
}

Effect Effect::consume(int participant) {
    Effect e;
    e.kind = Kind::consume;
    e.participant = participant;
    return e;
}

Effect Effect::produce(std::map<SlotName, SlotSource> slots) {
    Effect e;
    e.kind = Kind::produce;
    e.produced = std::move(slots);
    return e;
}

std::vector<std::pair<Entity, long>> group_list(const LiftedState& s) {
    std::vector<std::pair<Entity, long>> out;
    for (const auto& [entity, mult] : s.formula.groups) out.emplace_back(entity, mult);
    return out;
}

namespace {

enum class Truth { yes, no, unknown };

Truth constraint_truth(const LiftedState& s, const Entity& entity, const Constraint& c,
                       SplitRequest* request) {
    auto it = entity.slots.find(c.slot);
    if (it == entity.slots.end()) return Truth::no;
    const Distribution& dist = s.context.bindings.at(it->second);

    auto membership = [&](const Value& v) -> Truth {
        const Rational p = dist.draw_probability(v);
        if (p.is_zero()) return Truth::no;
        if (dist.determinate_value()) return Truth::yes;
        if (request) *request = SplitRequest{c.slot, v};
        return Truth::unknown;
    };

    switch (c.op) {
        case Constraint::Op::eq:
            return membership(c.operands.front());
        case Constraint::Op::neq: {
            const Truth t = membership(c.operands.front());
            if (t == Truth::yes) return Truth::no;
            if (t == Truth::no) return Truth::yes;
            return Truth::unknown;
        }
        case Constraint::Op::in_set: {
            // True if the support is inside the set, false if disjoint,
            // otherwise split on the first overlapping value.
            bool any_in = false, any_out = false;
            Value overlap;
            for (const auto& v : dist.support()) {
                const bool in =
                    std::find(c.operands.begin(), c.operands.end(), v) != c.operands.end();
                if (in && !any_in) overlap = v;
                any_in |= in;
                any_out |= !in;
            }
            if (!any_in) return Truth::no;
            if (!any_out) return Truth::yes;
            if (request) *request = SplitRequest{c.slot, overlap};
            return Truth::unknown;
        }
    }
    return Truth::no;
}

}  // namespace

Applicability applicability(const LiftedState& s, const ActionSchema& schema) {
    const auto groups = group_list(s);

    // Per participant position, the groups whose entities satisfy the
    // position's constraints.
    std::vector<std::vector<std::size_t>> satisfying(schema.arity());
    for (std::size_t pos = 0; pos < schema.arity(); ++pos) {
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            bool all_yes = true;
            for (const auto& c : schema.participants[pos]) {
                SplitRequest request;
                const Truth t = constraint_truth(s, groups[gi].first, c, &request);
                if (t == Truth::unknown) {
                    Applicability a;
                    a.status = Applicability::Status::indeterminate;
                    a.split = request;
                    return a;
                }
                if (t == Truth::no) {
                    all_yes = false;
                    break;
                }
            }
            if (all_yes) satisfying[pos].push_back(gi);
        }
    }

    // Tuples of groups, one per position, with enough multiplicity for
    // positions that reuse a group.
    Applicability a;
    std::vector<std::size_t> tuple;
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
        if (pos == schema.arity()) {
            std::map<std::size_t, long> need;
            for (auto gi : tuple) ++need[gi];
            for (const auto& [gi, n] : need) {
                if (groups[gi].second < n) return;
            }
            a.bindings.push_back(tuple);
            return;
        }
        for (auto gi : satisfying[pos]) {
            tuple.push_back(gi);
            rec(pos + 1);
            tuple.pop_back();
        }
    };
    rec(0);

    a.status = a.bindings.empty() ? Applicability::Status::inapplicable
                                  : Applicability::Status::applicable;
    return a;
}

namespace {

struct CompoundEnumerator {
    const std::vector<std::pair<Entity, long>>& groups;
    const std::vector<ActionSchema>& schemas;
    std::vector<InstanceType> types;  // canonical order
    std::vector<std::map<std::size_t, long>> type_need;
    std::vector<std::pair<CompoundAction, Rational>> out;  // weight = unnormalized

    CompoundEnumerator(const std::vector<std::pair<Entity, long>>& g,
                       const std::vector<ActionSchema>& s)
        : groups(g), schemas(s) {}

    bool fits(std::size_t ti, const std::vector<long>& residual) const {
        for (const auto& [gi, n] : type_need[ti]) {
            if (residual[gi] < n) return false;
        }
        return true;
    }

    void run() {
        std::vector<long> residual(groups.size());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) residual[gi] = groups[gi].second;
        CompoundAction current;
        dfs(0, residual, current);
    }

    void dfs(std::size_t ti, std::vector<long>& residual, CompoundAction& current) {
        if (ti == types.size()) {
            for (std::size_t t = 0; t < types.size(); ++t) {
                if (fits(t, residual)) return;  // extendable: not maximal
            }
            out.emplace_back(current, weight(current));
            return;
        }
        // Maximum count of this instance type under the residual.
        long max_count = std::numeric_limits<long>::max();
        for (const auto& [gi, n] : type_need[ti]) {
            max_count = std::min(max_count, residual[gi] / n);
        }
        if (max_count == std::numeric_limits<long>::max()) max_count = 1;  // arity-0 schema
        for (long count = 0; count <= max_count; ++count) {
            if (count > 0) {
                for (const auto& [gi, n] : type_need[ti]) residual[gi] -= n;
                current.instances[types[ti]] = count;
            }
            dfs(ti + 1, residual, current);
        }
        // Restore.
        auto it = current.instances.find(types[ti]);
        if (it != current.instances.end()) {
            for (const auto& [gi, n] : type_need[ti]) residual[gi] += n * it->second;
            current.instances.erase(it);
        }
    }

    /// rate product x number of distinct ground-level participant
    /// selections: falling factorials per group over all consumed
    /// positions, divided by count! per repeated instance type.
    Rational weight(const CompoundAction& c) const {
        Rational w(1);
        std::map<std::size_t, long> consumed;
        for (const auto& [type, count] : c.instances) {
            for (long i = 0; i < count; ++i) w *= schemas[type.schema].rate;
            w /= factorial(count);
            for (auto gi : type.binding) consumed[gi] += count;
        }
        for (const auto& [gi, n] : consumed) w *= falling_factorial(groups[gi].second, n);
        return w;
    }
};

}  // namespace

std::vector<std::pair<CompoundAction, Rational>> enumerate_maximal_compounds(
    const LiftedState& s, const std::vector<ActionSchema>& schemas) {
    const auto groups = group_list(s);
    CompoundEnumerator en(groups, schemas);

    for (std::size_t si = 0; si < schemas.size(); ++si) {
        const Applicability a = applicability(s, schemas[si]);
        if (a.status == Applicability::Status::indeterminate) {
            throw Error("enumerate_maximal_compounds requires determinate schemas; split first");
        }
        if (a.status == Applicability::Status::applicable && schemas[si].arity() == 0) {
            throw Error("zero-arity schema '" + schemas[si].name +
                        "' has no maximal parallel step semantics");
        }
        for (const auto& binding : a.bindings) {
            en.types.push_back(InstanceType{si, binding});
        }
    }
    std::sort(en.types.begin(), en.types.end());
    en.type_need.resize(en.types.size());
    for (std::size_t ti = 0; ti < en.types.size(); ++ti) {
        for (auto gi : en.types[ti].binding) ++en.type_need[ti][gi];
    }

    en.run();

    Rational total(0);
    for (const auto& [c, w] : en.out) total += w;
    std::vector<std::pair<CompoundAction, Rational>> out;
    out.reserve(en.out.size());
    for (auto& [c, w] : en.out) out.emplace_back(std::move(c), w / total);
    return out;
}

LiftedState apply_compound(const LiftedState& s, const CompoundAction& c,
                           const std::vector<ActionSchema>& schemas) {
    return apply_compound_canonical(s, c, schemas).state;
}

CanonicalState apply_compound_canonical(const LiftedState& s, const CompoundAction& c,
                                        const std::vector<ActionSchema>& schemas) {
    const auto groups = group_list(s);
    LiftedState result = s;
    long fresh = 0;

    auto fresh_label = [&](const Distribution& d) {
        const Label l = "#e" + std::to_string(fresh++);
        result.context.bindings.insert_or_assign(l, d);
        return l;
    };

    // Take the consumed entities out of the formula first.
    std::map<std::size_t, long> consumed;
    for (const auto& [type, count] : c.instances) {
        for (auto gi : type.binding) consumed[gi] += count;
    }
    for (const auto& [gi, n] : consumed) {
        auto it = result.formula.groups.find(groups[gi].first);
        if (it == result.formula.groups.end() || it->second < n) {
            throw InvalidEffect("compound consumes more entities than present");
        }
        it->second -= n;
        if (it->second == 0) result.formula.groups.erase(it);
    }

    for (const auto& [type, count] : c.instances) {
        const ActionSchema& schema = schemas[type.schema];
        for (long k = 0; k < count; ++k) {
            // Participant entities, modified in place by the effects.
            std::vector<std::optional<Entity>> part;
            part.reserve(type.binding.size());
            for (auto gi : type.binding) part.emplace_back(groups[gi].first);
            std::vector<Entity> produced;

            auto live = [&](int p) -> Entity& {
                if (p < 0 || static_cast<std::size_t>(p) >= part.size() || !part[p]) {
                    throw InvalidEffect("effect references invalid participant " +
                                        std::to_string(p) + " in '" + schema.name + "'");
                }
                return *part[p];
            };
            auto resolve = [&](const SlotSource& src) -> Label {
                if (src.literal) return fresh_label(Distribution::dirac(*src.literal));
                const auto& [p, slot] = *src.copy_from;
                const Entity& e = live(p);
                auto it = e.slots.find(slot);
                if (it == e.slots.end()) {
                    throw InvalidEffect("copy from missing slot '" + slot + "' in '" +
                                        schema.name + "'");
                }
                return it->second;
            };

            for (const auto& effect : schema.effects) {
                switch (effect.kind) {
                    case Effect::Kind::set_slot:
                        live(effect.participant).slots[effect.slot] = resolve(effect.source);
                        break;
                    case Effect::Kind::remove_slot: {
                        Entity& e = live(effect.participant);
                        if (!e.slots.erase(effect.slot)) {
                            throw InvalidEffect("removing missing slot '" + effect.slot +
                                                "' in '" + schema.name + "'");
                        }
                        if (e.slots.empty()) {
                            throw InvalidEffect("entity left with no slots in '" + schema.name +
                                                "'");
                        }
                        break;
                    }
                    case Effect::Kind::consume:
                        live(effect.participant);
                        part[effect.participant] = std::nullopt;
                        break;
                    case Effect::Kind::produce: {
                        Entity e;
                        for (const auto& [slot, src] : effect.produced) {
                            e.slots.emplace(slot, resolve(src));
                        }
                        if (e.slots.empty()) throw InvalidEffect("produced entity has no slots");
                        produced.push_back(std::move(e));
                        break;
                    }
                }
            }

            for (const auto& p : part) {
                if (p) ++result.formula.groups[*p];
            }
            for (const auto& e : produced) ++result.formula.groups[e];
        }
    }

    CanonicalState canon = canonicalize(result);
    if (auto v = validate(canon.state)) {
        throw InvalidEffect("compound produced an invalid state (rule " +
                            std::to_string(v->rule) + "): " + v->message);
    }
    return canon;
}

namespace {

std::string effect_signature(const std::vector<Effect>& effects) {
    std::string out;
    for (const auto& e : effects) {
        switch (e.kind) {
            case Effect::Kind::set_slot:
                out += "s(" + std::to_string(e.participant) + ',' + e.slot + ',';
                if (e.source.literal) {
                    out += '=' + e.source.literal->symbol;
                } else {
                    out += '@' + std::to_string(e.source.copy_from->first) + '.' +
                           e.source.copy_from->second;
                }
                out += ')';
                break;
            case Effect::Kind::remove_slot:
                out += "r(" + std::to_string(e.participant) + ',' + e.slot + ')';
                break;
            case Effect::Kind::consume:
                out += "c(" + std::to_string(e.participant) + ')';
                break;
            case Effect::Kind::produce:
                out += "p(";
                for (const auto& [slot, src] : e.produced) {
                    out += slot + ':';
                    if (src.literal) {
                        out += '=' + src.literal->symbol;
                    } else {
                        out += '@' + std::to_string(src.copy_from->first) + '.' +
                               src.copy_from->second;
                    }
                    out += ';';
                }
                out += ')';
                break;
        }
    }
    return out;
}

/// Entities one rule instance leaves behind (surviving participants and
/// produced entities). Literal values get labels from `literal_label`.
std::vector<Entity> apply_effects_once(
    const ActionSchema& schema, const std::vector<Entity>& participants,
    const std::function<Label(const Value&)>& literal_label) {
    std::vector<std::optional<Entity>> part;
    part.reserve(participants.size());
    for (const auto& p : participants) part.emplace_back(p);
    std::vector<Entity> produced;

    auto live = [&](int p) -> Entity& {
        if (p < 0 || static_cast<std::size_t>(p) >= part.size() || !part[p]) {
            throw InvalidEffect("effect references invalid participant " + std::to_string(p) +
                                " in '" + schema.name + "'");
        }
        return *part[p];
    };
    auto resolve = [&](const SlotSource& src) -> Label {
        if (src.literal) return literal_label(*src.literal);
        const auto& [p, slot] = *src.copy_from;
        const Entity& e = live(p);
        auto it = e.slots.find(slot);
        if (it == e.slots.end()) {
            throw InvalidEffect("copy from missing slot '" + slot + "' in '" + schema.name +
                                "'");
        }
        return it->second;
    };

    for (const auto& effect : schema.effects) {
        switch (effect.kind) {
            case Effect::Kind::set_slot:
                live(effect.participant).slots[effect.slot] = resolve(effect.source);
                break;
            case Effect::Kind::remove_slot: {
                Entity& e = live(effect.participant);
                if (!e.slots.erase(effect.slot)) {
                    throw InvalidEffect("removing missing slot '" + effect.slot + "' in '" +
                                        schema.name + "'");
                }
                if (e.slots.empty()) {
                    throw InvalidEffect("entity left with no slots in '" + schema.name + "'");
                }
                break;
            }
            case Effect::Kind::consume:
                live(effect.participant);
                part[effect.participant] = std::nullopt;
                break;
            case Effect::Kind::produce: {
                Entity e;
                for (const auto& [slot, src] : effect.produced) e.slots.emplace(slot, resolve(src));
                if (e.slots.empty()) throw InvalidEffect("produced entity has no slots");
                produced.push_back(std::move(e));
                break;
            }
        }
    }

    std::vector<Entity> out;
    for (auto& p : part) {
        if (p) out.push_back(std::move(*p));
    }
    for (auto& e : produced) out.push_back(std::move(e));
    return out;
}

}  // namespace

std::vector<std::pair<std::string, Rational>> maximal_step_distribution(
    const LiftedState& s0, const std::vector<ActionSchema>& schemas) {
    const CanonicalState canon = canonicalize(s0);
    const LiftedState& s = canon.state;
    const auto groups = group_list(s);

    // Fresh labels for effect literals, pooled by value.
    std::map<Value, Label> literal_labels;
    std::map<Label, Distribution> literal_dists;
    auto literal_label = [&](const Value& v) -> Label {
        auto it = literal_labels.find(v);
        if (it != literal_labels.end()) return it->second;
        const Label l = "#lit" + std::to_string(literal_labels.size());
        literal_labels.emplace(v, l);
        literal_dists.emplace(l, Distribution::dirac(v));
        return l;
    };

    // Pool schemas with equal binding and equal effects: their rates add
    // (choosing which pooled schema fired is a multinomial that sums out).
    struct StepClass {
        Rational rate{0};
        std::vector<Entity> results;
        std::map<std::size_t, long> need;
    };
    std::map<std::pair<Binding, std::string>, StepClass> classes;
    for (const auto& schema : schemas) {
        const Applicability a = applicability(s, schema);
        if (a.status == Applicability::Status::indeterminate) {
            throw Error("maximal step successors require determinate schemas; split first");
        }
        if (a.status == Applicability::Status::applicable && schema.arity() == 0) {
            throw Error("zero-arity schema '" + schema.name +
                        "' has no maximal parallel step semantics");
        }
        const std::string sig = effect_signature(schema.effects);
        for (const auto& binding : a.bindings) {
            auto [it, inserted] = classes.try_emplace({binding, sig});
            StepClass& cls = it->second;
            cls.rate += schema.rate;
            if (inserted) {
                std::vector<Entity> participants;
                participants.reserve(binding.size());
                for (auto gi : binding) participants.push_back(groups[gi].first);
                cls.results = apply_effects_once(schema, participants, literal_label);
                for (auto gi : binding) ++cls.need[gi];
            }
        }
    }
    std::vector<const StepClass*> order;
    order.reserve(classes.size());
    for (const auto& [key, cls] : classes) order.push_back(&cls);

    auto lookup = [&](const Label& label) -> const Distribution* {
        auto it = s.context.bindings.find(label);
        if (it != s.context.bindings.end()) return &it->second;
        auto lit = literal_dists.find(label);
        return lit == literal_dists.end() ? nullptr : &lit->second;
    };

    std::vector<long> residual(groups.size());
    long largest_group = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        residual[gi] = groups[gi].second;
        largest_group = std::max(largest_group, groups[gi].second);
    }
    std::vector<long> counts(order.size(), 0);
    std::vector<long> max_counts(order.size(), 0);
    for (std::size_t ci = 0; ci < order.size(); ++ci) {
        long cap = std::numeric_limits<long>::max();
        for (const auto& [gi, n] : order[ci]->need) cap = std::min(cap, groups[gi].second / n);
        max_counts[ci] = cap;
    }

    bool unit_rates = largest_group <= 20;
    for (const auto* cls : order) unit_rates &= cls->rate.is_one();

    std::vector<std::pair<std::string, Rational>> out;

    auto build_view = [&]() {
        std::vector<std::pair<const Entity*, long>> view;
        view.reserve(groups.size() + order.size());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            if (residual[gi] > 0) view.emplace_back(&groups[gi].first, residual[gi]);
        }
        for (std::size_t ci = 0; ci < order.size(); ++ci) {
            if (counts[ci] == 0) continue;
            for (const auto& e : order[ci]->results) view.emplace_back(&e, counts[ci]);
        }
        return view;
    };

    auto is_maximal = [&]() {
        for (std::size_t t = 0; t < order.size(); ++t) {
            bool fits = true;
            for (const auto& [gi, n] : order[t]->need) {
                if (residual[gi] < n) {
                    fits = false;
                    break;
                }
            }
            if (fits) return false;  // extendable
        }
        return true;
    };

    if (unit_rates) {
        // All rates are 1 and groups are small: every leaf weight is the
        // integer number of distinct ground selections, scaled by the
        // constant product of cap! over classes. Pure integer counting,
        // no rational canonicalization in the hot loop.
        std::vector<std::vector<unsigned long>> class_ratio(order.size());
        for (std::size_t ci = 0; ci < order.size(); ++ci) {
            auto& table = class_ratio[ci];  // cap! / n!
            table.assign(max_counts[ci] + 1, 1);
            for (long n = max_counts[ci] - 1; n >= 0; --n) {
                table[n] = table[n + 1] * static_cast<unsigned long>(n + 1);
            }
        }
        std::vector<std::vector<unsigned long>> group_ff(groups.size());
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            auto& table = group_ff[gi];
            const long m = groups[gi].second;
            table.assign(m + 1, 1);
            for (long c = 1; c <= m; ++c) {
                table[c] = table[c - 1] * static_cast<unsigned long>(m - c + 1);
            }
        }

        struct BigInt {
            mpz_t z;
            BigInt() { mpz_init(z); }
            BigInt(const BigInt& o) { mpz_init_set(z, o.z); }
            BigInt& operator=(const BigInt&) = delete;
            ~BigInt() { mpz_clear(z); }
        };
        std::map<std::string, BigInt> acc;
        BigInt total, leaf;

        std::function<void(std::size_t)> dfs = [&](std::size_t ci) {
            if (ci == order.size()) {
                if (!is_maximal()) return;
                mpz_set_ui(leaf.z, 1);
                for (std::size_t c = 0; c < order.size(); ++c) {
                    mpz_mul_ui(leaf.z, leaf.z, class_ratio[c][counts[c]]);
                }
                for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                    const long consumed = groups[gi].second - residual[gi];
                    if (consumed > 0) mpz_mul_ui(leaf.z, leaf.z, group_ff[gi][consumed]);
                }
                mpz_add(total.z, total.z, leaf.z);
                std::string key = canonical_key_fast_view(build_view(), lookup);
                auto it = acc.find(key);
                if (it == acc.end()) {
                    mpz_set(acc[std::move(key)].z, leaf.z);
                } else {
                    mpz_add(it->second.z, it->second.z, leaf.z);
                }
                return;
            }
            long feasible = max_counts[ci];
            for (const auto& [gi, n] : order[ci]->need) {
                feasible = std::min(feasible, residual[gi] / n);
            }
            for (long c = 0; c <= feasible; ++c) {
                counts[ci] = c;
                if (c > 0) {
                    for (const auto& [gi, n] : order[ci]->need) residual[gi] -= n;
                }
                dfs(ci + 1);
            }
            for (const auto& [gi, n] : order[ci]->need) residual[gi] += n * feasible;
            counts[ci] = 0;
        };
        dfs(0);

        out.reserve(acc.size());
        for (auto& [key, num] : acc) {
            out.emplace_back(key, Rational::quotient(num.z, total.z));
        }
        return out;
    }

    // General path: rational rates.
    std::vector<std::vector<Rational>> class_factor(order.size());
    for (std::size_t ci = 0; ci < order.size(); ++ci) {
        auto& table = class_factor[ci];  // rate^n / n!
        table.reserve(max_counts[ci] + 1);
        table.emplace_back(1);
        for (long n = 1; n <= max_counts[ci]; ++n) {
            table.push_back(table.back() * order[ci]->rate / Rational(n));
        }
    }
    std::vector<std::vector<Rational>> group_factor(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& table = group_factor[gi];
        const long m = groups[gi].second;
        table.reserve(m + 1);
        table.emplace_back(1);
        for (long c = 1; c <= m; ++c) table.push_back(table.back() * Rational(m - c + 1));
    }

    std::map<std::string, Rational> acc;
    Rational total(0);
    std::function<void(std::size_t)> dfs = [&](std::size_t ci) {
        if (ci == order.size()) {
            if (!is_maximal()) return;
            Rational w(1);
            for (std::size_t c = 0; c < order.size(); ++c) {
                if (counts[c] > 0) w *= class_factor[c][counts[c]];
            }
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                const long consumed = groups[gi].second - residual[gi];
                if (consumed > 0) w *= group_factor[gi][consumed];
            }
            total += w;
            std::string key = canonical_key_fast_view(build_view(), lookup);
            auto it = acc.find(key);
            if (it == acc.end()) {
                acc.emplace(std::move(key), std::move(w));
            } else {
                it->second += w;
            }
            return;
        }
        long feasible = max_counts[ci];
        for (const auto& [gi, n] : order[ci]->need) {
            feasible = std::min(feasible, residual[gi] / n);
        }
        for (long c = 0; c <= feasible; ++c) {
            counts[ci] = c;
            if (c > 0) {
                for (const auto& [gi, n] : order[ci]->need) residual[gi] -= n;
            }
            dfs(ci + 1);
        }
        for (const auto& [gi, n] : order[ci]->need) residual[gi] += n * feasible;
        counts[ci] = 0;
    };
    dfs(0);

    out.reserve(acc.size());
    for (auto& [key, w] : acc) out.emplace_back(key, w / total);
    return out;
}

}  // namespace lifted
