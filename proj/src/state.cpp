#include "lifted/state.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstring>
#include <functional>
#include <numeric>
#include <set>

#include "lifted/errors.hpp"

namespace lifted {

namespace {

/// Reference count of a label: one per (entity instance, slot) pair.
long reference_count(const LiftedState& s, const Label& label) {
    long refs = 0;
    for (const auto& [entity, mult] : s.formula.groups) {
        for (const auto& [slot, l] : entity.slots) {
            if (l == label) refs += mult;
        }
    }
    return refs;
}

std::set<Label> referenced_labels(const LiftedState& s) {
    std::set<Label> out;
    for (const auto& [entity, mult] : s.formula.groups) {
        for (const auto& [slot, l] : entity.slots) out.insert(l);
    }
    return out;
}

std::string label_name(std::size_t index, std::size_t width) {
    std::string n = std::to_string(index);
    if (n.size() < width) n.insert(0, width - n.size(), '0');
    return "x" + n;
}

}  // namespace

std::string encode_ground(const GroundState& g) {
    std::string out;
    for (const auto& [entity, mult] : g.entities) {
        out += std::to_string(mult);
        out += "*{";
        for (auto it = entity.begin(); it != entity.end(); ++it) {
            if (it != entity.begin()) out += ',';
            out += it->first;
            out += '=';
            out += it->second.symbol;
        }
        out += "};";
    }
    return out;
}

std::optional<Violation> validate(const LiftedState& s) {
    for (const auto& [entity, mult] : s.formula.groups) {
        if (mult < 1) return Violation{0, "group multiplicity below 1"};
        if (entity.slots.empty()) return Violation{0, "entity with no slots"};
    }
    for (const auto& [label, dist] : s.context.bindings) {
        if (dist.empty()) return Violation{0, "empty urn bound to '" + label + "'"};
    }
    for (const auto& [entity, mult] : s.formula.groups) {
        for (const auto& [slot, label] : entity.slots) {
            if (!s.context.bindings.count(label)) {
                return Violation{1, "label '" + label + "' referenced by slot '" + slot +
                                        "' is not bound in the context"};
            }
        }
    }
    for (const auto& [label, dist] : s.context.bindings) {
        if (auto cap = dist.capacity()) {
            const long refs = reference_count(s, label);
            if (refs > *cap) {
                return Violation{2, "label '" + label + "' has " + std::to_string(refs) +
                                        " references but capacity " + std::to_string(*cap)};
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

namespace {

struct PreparedState {
    std::vector<std::pair<Entity, long>> groups;      // fused, arbitrary label names
    std::map<Label, Distribution> bindings;           // referenced labels only
};

/// Garbage-collects labels, rewrites single-value urns to Dirac and pools
/// structurally equal Dirac/categorical labels.
PreparedState prepare(const LiftedState& s) {
    std::map<Label, Distribution> live;
    const auto refs = referenced_labels(s);
    for (const auto& label : refs) {
        auto it = s.context.bindings.find(label);
        if (it == s.context.bindings.end()) {
            throw Error("cannot canonicalize: dangling label '" + label + "'");
        }
        Distribution d = it->second;
        if (d.is_urn() && d.urn_counts().size() == 1) {
            d = Distribution::dirac(d.urn_counts().begin()->first);
        }
        live.emplace(label, std::move(d));
    }

    // Pool Dirac/categorical duplicates (draws independent of other refs).
    std::map<std::string, Label> pool;  // encoded dist -> representative
    std::map<Label, Label> rename;
    for (const auto& [label, dist] : live) {
        if (dist.is_urn()) {
            rename.emplace(label, label);
            continue;
        }
        const std::string enc = dist.encoded();
        auto [it, inserted] = pool.emplace(enc, label);
        rename.emplace(label, it->second);
    }

    PreparedState out;
    std::map<Entity, long> fused;
    for (const auto& [entity, mult] : s.formula.groups) {
        Entity e;
        for (const auto& [slot, label] : entity.slots) e.slots.emplace(slot, rename.at(label));
        fused[e] += mult;
    }
    for (auto& [entity, mult] : fused) out.groups.emplace_back(entity, mult);
    for (const auto& [label, dist] : live) {
        if (rename.at(label) == label) out.bindings.emplace(label, dist);
    }
    return out;
}

/// Color refinement over labels; returns labels grouped into ordered
/// classes such that any isomorphism maps classes onto classes.
std::vector<std::vector<Label>> refine_label_classes(const PreparedState& p) {
    std::vector<Label> labels;
    for (const auto& [label, dist] : p.bindings) labels.push_back(label);

    std::map<Label, std::string> color;
    for (const auto& [label, dist] : p.bindings) color[label] = dist.encoded();

    // Distinct distribution contents already separate every label; the
    // common case needs no refinement.
    {
        std::map<std::string, std::vector<Label>> by_color;
        for (const auto& [label, c] : color) by_color[c].push_back(label);
        if (by_color.size() == labels.size()) {
            std::vector<std::vector<Label>> out;
            for (auto& [c, ls] : by_color) out.push_back(std::move(ls));
            return out;
        }
    }

    auto class_count = [&]() {
        std::set<std::string> distinct;
        for (const auto& [l, c] : color) distinct.insert(c);
        return distinct.size();
    };

    std::size_t classes = class_count();
    for (std::size_t round = 0; round < labels.size(); ++round) {
        // Entity signatures under current colors.
        std::vector<std::string> sig(p.groups.size());
        for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
            const auto& [entity, mult] = p.groups[gi];
            std::string s = std::to_string(mult) + "|";
            for (const auto& [slot, label] : entity.slots) {
                s += slot;
                s += ':';
                s += color.at(label);
                s += ';';
            }
            sig[gi] = std::move(s);
        }
        std::map<Label, std::string> next;
        for (const auto& label : labels) {
            std::vector<std::string> occ;
            for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
                const auto& [entity, mult] = p.groups[gi];
                for (const auto& [slot, l] : entity.slots) {
                    if (l == label) occ.push_back(slot + '@' + sig[gi]);
                }
            }
            std::sort(occ.begin(), occ.end());
            std::string c = color.at(label) + '#';
            for (const auto& o : occ) c += o + '%';
            next[label] = std::move(c);
        }
        // Compress colors to ranks to keep strings short.
        std::set<std::string> distinct;
        for (const auto& [l, c] : next) distinct.insert(c);
        std::map<std::string, std::size_t> rank;
        for (const auto& c : distinct) rank.emplace(c, rank.size());
        for (auto& [l, c] : next) c = std::to_string(rank.at(c));
        color = std::move(next);
        if (distinct.size() == classes) break;
        classes = distinct.size();
    }

    std::map<std::string, std::vector<Label>> by_color;
    for (const auto& label : labels) {
        by_color[std::to_string(color.at(label).size()) + '.' + color.at(label)].push_back(label);
    }
    // Numeric rank strings: order classes by numeric value via the
    // (length, lexicographic) key built above.
    std::vector<std::vector<Label>> out;
    for (auto& [c, ls] : by_color) {
        std::sort(ls.begin(), ls.end());
        out.push_back(std::move(ls));
    }
    return out;
}

struct Candidate {
    std::vector<std::pair<Entity, long>> groups;  // renamed, sorted
    std::map<Label, Distribution> bindings;       // renamed
    std::string encoding;
};

Candidate build_candidate(const PreparedState& p, const std::map<Label, std::size_t>& rank) {
    const std::size_t width = std::max<std::size_t>(2, std::to_string(p.bindings.size()).size());
    Candidate c;
    std::map<Entity, long> sorted;
    for (const auto& [entity, mult] : p.groups) {
        Entity e;
        for (const auto& [slot, label] : entity.slots) {
            e.slots.emplace(slot, label_name(rank.at(label), width));
        }
        sorted[e] += mult;
    }
    for (auto& [entity, mult] : sorted) c.groups.emplace_back(entity, mult);
    for (const auto& [label, dist] : p.bindings) {
        c.bindings.emplace(label_name(rank.at(label), width), dist);
    }

    c.encoding += "S{";
    for (const auto& [entity, mult] : c.groups) {
        c.encoding += std::to_string(mult);
        c.encoding += "*[";
        for (auto it = entity.slots.begin(); it != entity.slots.end(); ++it) {
            if (it != entity.slots.begin()) c.encoding += ',';
            c.encoding += it->first;
            c.encoding += ':';
            c.encoding += it->second;
        }
        c.encoding += ']';
    }
    c.encoding += "}C{";
    for (const auto& [label, dist] : c.bindings) {
        c.encoding += label;
        c.encoding += '=';
        dist.encode(c.encoding);
        c.encoding += ';';
    }
    c.encoding += '}';
    return c;
}

}  // namespace

CanonicalState canonicalize(const LiftedState& s) {
    PreparedState p = prepare(s);
    const auto classes = refine_label_classes(p);

    // Enumerate label orders: class order is fixed by refinement, ties
    // within a class are broken by trying every permutation and keeping
    // the lexicographically smallest encoding.
    std::size_t candidates = 1;
    for (const auto& cls : classes) {
        std::size_t f = 1;
        for (std::size_t i = 2; i <= cls.size(); ++i) f *= i;
        candidates *= f;
        if (candidates > 20000) {
            throw Error("canonicalization tie explosion (too many symmetric labels)");
        }
    }

    std::optional<Candidate> best;
    std::vector<std::vector<Label>> perms = classes;
    std::function<void(std::size_t, std::map<Label, std::size_t>&)> rec =
        [&](std::size_t ci, std::map<Label, std::size_t>& rank) {
            if (ci == perms.size()) {
                Candidate c = build_candidate(p, rank);
                if (!best || c.encoding < best->encoding) best = std::move(c);
                return;
            }
            auto& cls = perms[ci];
            std::sort(cls.begin(), cls.end());
            std::size_t base = 0;
            for (std::size_t j = 0; j < ci; ++j) base += perms[j].size();
            do {
                for (std::size_t i = 0; i < cls.size(); ++i) rank[cls[i]] = base + i;
                rec(ci + 1, rank);
            } while (std::next_permutation(cls.begin(), cls.end()));
        };
    std::map<Label, std::size_t> rank;
    rec(0, rank);

    CanonicalState out;
    for (const auto& [entity, mult] : best->groups) out.state.formula.groups.emplace(entity, mult);
    out.state.context.bindings = best->bindings;
    out.key = best->encoding;
    return out;
}

std::string canonical_key(const LiftedState& s) { return canonicalize(s).key; }

std::string canonical_key_fast(
    const StateFormula& formula,
    const std::function<const Distribution*(const Label&)>& lookup) {
    std::vector<std::pair<const Entity*, long>> view;
    view.reserve(formula.groups.size());
    for (const auto& [entity, mult] : formula.groups) view.emplace_back(&entity, mult);
    return canonical_key_fast_view(view, lookup);
}

namespace {

void append_label_name(std::string& out, std::size_t index, std::size_t width) {
    out += 'x';
    const std::string n = std::to_string(index);
    for (std::size_t i = n.size(); i < width; ++i) out += '0';
    out += n;
}

}  // namespace

std::string canonical_key_fast_view(
    const std::vector<std::pair<const Entity*, long>>& groups,
    const std::function<const Distribution*(const Label&)>& lookup) {
    // Referenced labels with their effective distributions.
    std::vector<const Label*> labels;
    for (const auto& [entity, mult] : groups) {
        for (const auto& [slot, label] : entity->slots) labels.push_back(&label);
    }
    std::sort(labels.begin(), labels.end(),
              [](const Label* a, const Label* b) { return *a < *b; });
    labels.erase(std::unique(labels.begin(), labels.end(),
                             [](const Label* a, const Label* b) { return *a == *b; }),
                 labels.end());

    // Effective distribution per label: single-value urns read as Dirac.
    std::vector<Distribution> rewritten;
    rewritten.reserve(labels.size());
    std::vector<const Distribution*> dist(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Distribution* d = lookup(*labels[i]);
        if (!d) throw Error("cannot canonicalize: dangling label '" + *labels[i] + "'");
        if (d->is_urn() && d->urn_counts().size() == 1) {
            // reserve() above keeps these pointers stable
            rewritten.push_back(Distribution::dirac(d->urn_counts().begin()->first));
            dist[i] = &rewritten.back();
        } else {
            dist[i] = d;
        }
    }

    // Pool Dirac/categorical duplicates, then order by encoding. Equal
    // encodings among the pooled set (shared-content urns) need the full
    // refinement machinery.
    std::vector<int> pooled_to(labels.size(), -1);  // index of representative
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (dist[i]->is_urn()) {
            pooled_to[i] = static_cast<int>(i);
            reps.push_back(i);
            continue;
        }
        int found = -1;
        for (auto r : reps) {
            if (!dist[r]->is_urn() && dist[r]->encoded() == dist[i]->encoded()) {
                found = static_cast<int>(r);
                break;
            }
        }
        if (found < 0) {
            pooled_to[i] = static_cast<int>(i);
            reps.push_back(i);
        } else {
            pooled_to[i] = found;
        }
    }
    std::vector<std::size_t> order = reps;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist[a]->encoded() < dist[b]->encoded();
    });
    bool collision = false;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (dist[order[i]]->encoded() == dist[order[i + 1]]->encoded()) {
            collision = true;
            break;
        }
    }
    if (collision) {
        // Fall back: materialize and run the full canonicalization.
        LiftedState s;
        for (const auto& [entity, mult] : groups) s.formula.groups[*entity] += mult;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            s.context.bindings.emplace(*labels[i], *lookup(*labels[i]));
        }
        return canonicalize(s).key;
    }

    std::vector<int> rank(labels.size(), -1);
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
    auto rank_of_label = [&](const Label& l) {
        const auto it = std::lower_bound(labels.begin(), labels.end(), &l,
                                         [](const Label* a, const Label* b) { return *a < *b; });
        return rank[pooled_to[it - labels.begin()]];
    };

    const std::size_t width = std::max<std::size_t>(2, std::to_string(order.size()).size());
    using EntityKey = std::vector<std::pair<const SlotName*, int>>;
    std::vector<std::pair<EntityKey, long>> entities;
    entities.reserve(groups.size());
    for (const auto& [entity, mult] : groups) {
        EntityKey key;
        key.reserve(entity->slots.size());
        for (const auto& [slot, label] : entity->slots) {
            key.emplace_back(&slot, rank_of_label(label));
        }
        entities.emplace_back(std::move(key), mult);
    }
    auto entity_less = [](const EntityKey& a, const EntityKey& b) {
        const std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (int c = a[i].first->compare(*b[i].first); c != 0) return c < 0;
            if (a[i].second != b[i].second) return a[i].second < b[i].second;
        }
        return a.size() < b.size();
    };
    auto entity_eq = [](const EntityKey& a, const EntityKey& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].second != b[i].second || *a[i].first != *b[i].first) return false;
        }
        return true;
    };
    std::sort(entities.begin(), entities.end(),
              [&](const auto& a, const auto& b) { return entity_less(a.first, b.first); });

    std::string out;
    out.reserve(64 + entities.size() * 32 + order.size() * 24);
    out += "S{";
    for (std::size_t i = 0; i < entities.size(); ++i) {
        long mult = entities[i].second;
        while (i + 1 < entities.size() && entity_eq(entities[i].first, entities[i + 1].first)) {
            mult += entities[i + 1].second;  // fuse equal groups
            ++i;
        }
        out += std::to_string(mult);
        out += "*[";
        const EntityKey& key = entities[i].first;
        for (std::size_t k = 0; k < key.size(); ++k) {
            if (k) out += ',';
            out += *key[k].first;
            out += ':';
            append_label_name(out, static_cast<std::size_t>(key[k].second), width);
        }
        out += ']';
    }
    out += "}C{";
    for (std::size_t r = 0; r < order.size(); ++r) {
        append_label_name(out, r, width);
        out += '=';
        dist[order[r]]->encode(out);
        out += ';';
    }
    out += '}';
    return out;
}

namespace {

struct KeyParser {
    const std::string& s;
    std::size_t pos = 0;

    explicit KeyParser(const std::string& text) : s(text) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("bad canonical key at " + std::to_string(pos) + ": " + what);
    }
    char peek() const { return pos < s.size() ? s[pos] : '\0'; }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos;
    }
    bool symbol_char(char c) const {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    }
    std::string symbol() {
        const std::size_t start = pos;
        while (pos < s.size() && symbol_char(s[pos])) ++pos;
        if (pos == start) fail("expected a symbol");
        return s.substr(start, pos - start);
    }
    long number() {
        const std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) fail("expected a number");
        return std::stol(s.substr(start, pos - start));
    }
    std::string until(const char* stops) {
        const std::size_t start = pos;
        while (pos < s.size() && !std::strchr(stops, s[pos])) ++pos;
        return s.substr(start, pos - start);
    }

    Distribution distribution() {
        const char kind = peek();
        ++pos;
        expect('(');
        if (kind == 'd') {
            Distribution d = Distribution::dirac(Value(symbol()));
            expect(')');
            return d;
        }
        if (kind == 'U') {
            std::map<Value, long> counts;
            for (;;) {
                Value v(symbol());
                long count = 1;
                if (peek() == '*') {
                    ++pos;
                    count = number();
                }
                counts[v] += count;
                if (peek() != ',') break;
                ++pos;
            }
            expect(')');
            return Distribution::urn(counts);
        }
        if (kind == 'C') {
            std::map<Value, Rational> probs;
            for (;;) {
                Value v(symbol());
                expect(':');
                probs.emplace(std::move(v), Rational::parse(until(",)")));
                if (peek() != ',') break;
                ++pos;
            }
            expect(')');
            return Distribution::categorical(probs);
        }
        fail("unknown distribution kind");
    }
};

}  // namespace

CanonicalState state_from_key(const std::string& key) {
    KeyParser p(key);
    CanonicalState out;
    out.key = key;
    p.expect('S');
    p.expect('{');
    while (p.peek() != '}') {
        const long mult = p.number();
        p.expect('*');
        p.expect('[');
        Entity e;
        while (p.peek() != ']') {
            std::string slot = p.symbol();
            p.expect(':');
            e.slots.emplace(std::move(slot), p.symbol());
            if (p.peek() == ',') ++p.pos;
        }
        p.expect(']');
        out.state.formula.groups[e] += mult;
    }
    p.expect('}');
    p.expect('C');
    p.expect('{');
    while (p.peek() != '}') {
        std::string label = p.symbol();
        p.expect('=');
        out.state.context.bindings.emplace(std::move(label), p.distribution());
        p.expect(';');
    }
    p.expect('}');
    return out;
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

namespace {

struct Grounder {
    const LiftedState& s;
    std::size_t guard;
    std::vector<std::pair<Entity, long>> groups;
    std::map<Label, std::map<Value, long>> urns;  // mutable remaining counts
    std::map<std::string, std::pair<GroundState, Rational>> out;
    std::size_t leaves = 0;

    explicit Grounder(const LiftedState& state, std::size_t g) : s(state), guard(g) {
        for (const auto& [entity, mult] : s.formula.groups) groups.emplace_back(entity, mult);
        for (const auto& [label, dist] : s.context.bindings) {
            if (dist.is_urn()) urns[label] = dist.urn_counts();
        }
    }

    void run() {
        GroundState acc;
        group_level(0, acc, Rational(1));
    }

    void bump_guard() {
        if (++leaves > guard || out.size() > guard) {
            throw ExplosionGuard("ground enumeration exceeded guard of " + std::to_string(guard),
                                 std::max<std::size_t>(leaves, out.size()));
        }
    }

    void group_level(std::size_t gi, GroundState& acc, const Rational& prob) {
        if (gi == groups.size()) {
            bump_guard();
            const std::string key = encode_ground(acc);
            auto it = out.find(key);
            if (it == out.end()) {
                out.emplace(key, std::make_pair(acc, prob));
            } else {
                it->second.second += prob;
            }
            return;
        }
        const auto& [entity, mult] = groups[gi];
        std::vector<GroundEntity> chosen;
        instance_level(gi, entity, mult, chosen, acc, prob);
    }

    void instance_level(std::size_t gi, const Entity& entity, long remaining,
                        std::vector<GroundEntity>& chosen, GroundState& acc,
                        const Rational& prob) {
        if (remaining == 0) {
            // Multiset multiplier: orderings of the chosen instance tuples.
            Rational mult = factorial(static_cast<long>(chosen.size()));
            for (std::size_t i = 0; i < chosen.size();) {
                std::size_t j = i;
                while (j < chosen.size() && chosen[j] == chosen[i]) ++j;
                mult /= factorial(static_cast<long>(j - i));
                i = j;
            }
            GroundState next = acc;
            for (const auto& ge : chosen) ++next.entities[ge];
            group_level(gi + 1, next, prob * mult);
            return;
        }
        const std::optional<GroundEntity> floor =
            chosen.empty() ? std::nullopt : std::make_optional(chosen.back());
        GroundEntity tuple;
        slot_level(entity.slots.begin(), entity, floor ? &*floor : nullptr, true, tuple, prob,
                   [&](const Rational& p2) {
                       chosen.push_back(tuple);
                       instance_level(gi, entity, remaining - 1, chosen, acc, p2);
                       chosen.pop_back();
                   });
    }

    /// Enumerates the value tuple of one instance, slot by slot, keeping
    /// tuples >= *floor (lexicographic in slot order) when floor is given.
    void slot_level(std::map<SlotName, Label>::const_iterator it, const Entity& entity,
                    const GroundEntity* floor, bool tied, GroundEntity& tuple,
                    const Rational& prob, const std::function<void(const Rational&)>& done) {
        if (it == entity.slots.end()) {
            done(prob);
            return;
        }
        const auto& [slot, label] = *it;
        const Value* min_v = (floor && tied) ? &floor->at(slot) : nullptr;
        const Distribution& dist = s.context.bindings.at(label);
        auto next = std::next(it);

        switch (dist.kind()) {
            case DistKind::dirac: {
                const Value& v = dist.dirac_value();
                if (min_v && v < *min_v) return;
                tuple[slot] = v;
                slot_level(next, entity, floor, min_v && v == *min_v, tuple, prob, done);
                tuple.erase(slot);
                break;
            }
            case DistKind::urn: {
                auto& remaining = urns.at(label);
                long total = 0;
                for (const auto& [v, c] : remaining) total += c;
                if (total < 1) throw Error("urn exhausted during grounding");
                for (auto& [v, c] : remaining) {
                    if (c == 0) continue;
                    if (min_v && v < *min_v) continue;
                    const Rational p(c, total);
                    --c;
                    tuple[slot] = v;
                    slot_level(next, entity, floor, min_v && v == *min_v, tuple, prob * p, done);
                    tuple.erase(slot);
                    ++c;
                }
                break;
            }
            case DistKind::categorical: {
                for (const auto& [v, p] : dist.categorical_probs()) {
                    if (min_v && v < *min_v) continue;
                    tuple[slot] = v;
                    slot_level(next, entity, floor, min_v && v == *min_v, tuple, prob * p, done);
                    tuple.erase(slot);
                }
                break;
            }
        }
    }
};

}  // namespace

std::map<std::string, std::pair<GroundState, Rational>> ground(const LiftedState& s,
                                                               std::size_t guard) {
    if (auto v = validate(s)) {
        throw Error("cannot ground invalid state (rule " + std::to_string(v->rule) +
                    "): " + v->message);
    }
    Grounder g(s, guard);
    g.run();
    return std::move(g.out);
}

// ---------------------------------------------------------------------------
// Split / merge / unsplit / marginal
// ---------------------------------------------------------------------------

namespace {

/// Labels bound at `slot` whose draw of `v` is possible but undecided.
std::vector<Label> uncertain_labels(const LiftedState& s, const SlotName& slot, const Value& v,
                                    bool* slot_seen, bool* value_possible) {
    std::set<Label> seen;
    std::vector<Label> out;
    if (slot_seen) *slot_seen = false;
    if (value_possible) *value_possible = false;
    for (const auto& [entity, mult] : s.formula.groups) {
        auto it = entity.slots.find(slot);
        if (it == entity.slots.end()) continue;
        if (slot_seen) *slot_seen = true;
        const Label& label = it->second;
        if (!seen.insert(label).second) continue;
        const Distribution& dist = s.context.bindings.at(label);
        const Rational p = dist.draw_probability(v);
        if (p.sign() > 0 && value_possible) *value_possible = true;
        if (p.sign() > 0 && !dist.determinate_value()) out.push_back(label);
    }
    return out;
}

void add_entity(LiftedState& s, const Entity& e, long count) {
    auto it = s.formula.groups.find(e);
    if (it == s.formula.groups.end()) {
        s.formula.groups.emplace(e, count);
    } else {
        it->second += count;
    }
}

void remove_entity(LiftedState& s, const Entity& e, long count) {
    auto it = s.formula.groups.find(e);
    if (it == s.formula.groups.end() || it->second < count) {
        throw Error("removing more entities than present");
    }
    it->second -= count;
    if (it->second == 0) s.formula.groups.erase(it);
}

constexpr const char* kFreshLabel = "#fresh";

thread_local long g_split_operations = 0;

}  // namespace

long split_operations() { return g_split_operations; }

bool split_pending(const LiftedState& s, const SlotName& slot, const Value& v) {
    bool slot_seen = false;
    bool possible = false;
    return !uncertain_labels(s, slot, v, &slot_seen, &possible).empty();
}

WeightedStates split_on_slot_value(const LiftedState& s0, const SlotName& slot, const Value& v) {
    return split_canonical(canonicalize(s0), slot, v);
}

WeightedStates split_canonical(const CanonicalState& canon, const SlotName& slot,
                               const Value& v) {
    const LiftedState& s = canon.state;

    bool slot_seen = false;
    bool possible = false;
    const auto uncertain = uncertain_labels(s, slot, v, &slot_seen, &possible);
    if (!slot_seen) throw SlotAbsent("no entity carries slot '" + slot + "'");
    if (!possible) {
        throw ValueImpossible("value '" + v.symbol + "' impossible at slot '" + slot + "'");
    }
    if (uncertain.empty()) {
        return {{Rational(1), canon}};
    }
    ++g_split_operations;

    const Label target = uncertain.front();
    const Distribution& dist = s.context.bindings.at(target);
    WeightedStates out;

    if (dist.is_urn()) {
        const long cap = *dist.capacity();
        const Distribution reduced = dist.remove_value(v);
        long refs = 0;
        // One branch per (group, slot) reference class of the target label:
        // the tracked copy of v was drawn by one instance of that class.
        for (const auto& [entity, mult] : s.formula.groups) {
            for (const auto& [sigma, label] : entity.slots) {
                if (label != target) continue;
                refs += mult;
                LiftedState branch = s;
                remove_entity(branch, entity, 1);
                Entity holder = entity;
                holder.slots[sigma] = kFreshLabel;
                add_entity(branch, holder, 1);
                branch.context.bindings.insert_or_assign(kFreshLabel, Distribution::dirac(v));
                if (reduced.empty()) {
                    branch.context.bindings.erase(target);
                } else {
                    branch.context.bindings.insert_or_assign(target, reduced);
                }
                out.emplace_back(Rational(mult, cap), canonicalize(branch));
            }
        }
        if (cap > refs) {
            // The tracked copy was never drawn.
            LiftedState branch = s;
            branch.context.bindings.insert_or_assign(target, reduced);
            out.emplace_back(Rational(cap - refs, cap), canonicalize(branch));
        }
    } else {
        // Categorical: decide one referencing instance (draws are
        // independent, so the remaining instances keep the label).
        const Rational p = dist.draw_probability(v);
        const Entity* chosen = nullptr;
        const SlotName& sigma = slot;
        for (const auto& [entity, mult] : s.formula.groups) {
            auto it = entity.slots.find(slot);
            if (it != entity.slots.end() && it->second == target) {
                chosen = &entity;
                break;
            }
        }
        LiftedState holder_branch = s;
        remove_entity(holder_branch, *chosen, 1);
        Entity holder = *chosen;
        holder.slots[sigma] = kFreshLabel;
        add_entity(holder_branch, holder, 1);
        holder_branch.context.bindings.insert_or_assign(kFreshLabel, Distribution::dirac(v));
        out.emplace_back(p, canonicalize(holder_branch));

        LiftedState other_branch = s;
        remove_entity(other_branch, *chosen, 1);
        Entity non_holder = *chosen;
        non_holder.slots[sigma] = kFreshLabel;
        add_entity(other_branch, non_holder, 1);
        other_branch.context.bindings.insert_or_assign(kFreshLabel, dist.condition_without(v));
        out.emplace_back(Rational(1) - p, canonicalize(other_branch));
    }

    WeightedStates filtered;
    for (auto& [w, cs] : out) {
        if (w.sign() > 0) filtered.emplace_back(std::move(w), std::move(cs));
    }
    return merge(filtered);
}

WeightedStates merge(const WeightedStates& states) {
    std::map<std::string, std::pair<Rational, CanonicalState>> byKey;
    for (const auto& [w, cs] : states) {
        if (w.is_zero()) continue;
        auto it = byKey.find(cs.key);
        if (it == byKey.end()) {
            byKey.emplace(cs.key, std::make_pair(w, cs));
        } else {
            it->second.first += w;
        }
    }
    WeightedStates out;
    for (auto& [key, pair] : byKey) {
        if (pair.first.sign() != 0) out.emplace_back(std::move(pair.first), std::move(pair.second));
    }
    return out;
}

std::vector<UnsplitFamily> unsplit_candidates(const CanonicalState& cs) {
    std::vector<UnsplitFamily> out;
    const LiftedState& s = cs.state;
    std::set<std::string> seen;
    for (const auto& [entity, mult] : s.formula.groups) {
        for (const auto& [sigma, label] : entity.slots) {
            const Distribution& d = s.context.bindings.at(label);
            if (!d.is_dirac()) continue;
            const Value v = d.dirac_value();
            for (const auto& [urn_label, urn_dist] : s.context.bindings) {
                if (!urn_dist.is_urn()) continue;
                // Candidate parent: hand the Dirac value back to the urn.
                LiftedState parent = s;
                remove_entity(parent, entity, 1);
                Entity rebound = entity;
                rebound.slots[sigma] = urn_label;
                add_entity(parent, rebound, 1);
                parent.context.bindings.insert_or_assign(urn_label, urn_dist.insert_value(v));
                CanonicalState parent_c = canonicalize(parent);
                if (parent_c.key == cs.key) continue;
                if (validate(parent_c.state)) continue;
                if (!seen.insert(parent_c.key + '\n' + sigma + '\n' + v.symbol).second) continue;

                WeightedStates branches;
                try {
                    branches = split_on_slot_value(parent_c.state, sigma, v);
                } catch (const Error&) {
                    continue;
                }
                if (branches.empty()) continue;
                // A single branch must reproduce this very state, or the
                // family is useless for collapsing it.
                if (branches.size() == 1 && branches[0].second.key != cs.key) continue;
                UnsplitFamily family;
                family.parent = std::move(parent_c);
                for (auto& [bw, bcs] : branches) {
                    family.branches.emplace_back(bcs.key, bw);
                }
                out.push_back(std::move(family));
            }
        }
    }
    return out;
}

void unsplit_fixpoint(
    WeightedStateMap& items,
    const std::function<const std::vector<UnsplitFamily>&(const CanonicalState&)>& families,
    long* collapse_count) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::string> keys;
        keys.reserve(items.size());
        for (const auto& [key, item] : items) keys.push_back(key);
        for (const auto& key : keys) {
            auto self = items.find(key);
            if (self == items.end()) continue;
            for (const UnsplitFamily& family : families(self->second.second)) {
                // Every branch must be present, in exact proportion.
                auto first = items.find(family.branches.front().first);
                if (first == items.end()) continue;
                const Rational scale = first->second.first / family.branches.front().second;
                if (scale.sign() <= 0) continue;
                bool ok = true;
                for (const auto& [bkey, bw] : family.branches) {
                    auto it = items.find(bkey);
                    if (it == items.end() || !(it->second.first == scale * bw)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                for (const auto& [bkey, bw] : family.branches) items.erase(bkey);
                auto it = items.find(family.parent.key);
                if (it == items.end()) {
                    items.emplace(family.parent.key, std::make_pair(scale, family.parent));
                } else {
                    it->second.first += scale;
                }
                if (collapse_count) ++*collapse_count;
                changed = true;
                self = items.find(key);
                if (self == items.end()) break;  // this state was consumed
            }
        }
    }
}

WeightedStates unsplit(const WeightedStates& states, long* collapse_count) {
    WeightedStateMap items;
    for (const auto& [w, cs] : merge(states)) items.emplace(cs.key, std::make_pair(w, cs));

    std::map<std::string, std::vector<UnsplitFamily>> cache;
    unsplit_fixpoint(
        items,
        [&cache](const CanonicalState& cs) -> const std::vector<UnsplitFamily>& {
            auto it = cache.find(cs.key);
            if (it == cache.end()) it = cache.emplace(cs.key, unsplit_candidates(cs)).first;
            return it->second;
        },
        collapse_count);

    WeightedStates out;
    for (auto& [key, pair] : items) out.emplace_back(pair.first, pair.second);
    return out;
}

namespace {

/// Upper bound on how many entities can hold `v` at `slot` simultaneously.
long max_simultaneous_holders(const LiftedState& s, const SlotName& slot, const Value& v) {
    std::map<Label, long> slot_refs;
    for (const auto& [entity, mult] : s.formula.groups) {
        auto it = entity.slots.find(slot);
        if (it != entity.slots.end()) slot_refs[it->second] += mult;
    }
    long holders = 0;
    for (const auto& [label, refs] : slot_refs) {
        const Distribution& d = s.context.bindings.at(label);
        switch (d.kind()) {
            case DistKind::dirac:
                if (d.dirac_value() == v) holders += refs;
                break;
            case DistKind::urn: {
                auto it = d.urn_counts().find(v);
                if (it != d.urn_counts().end()) holders += std::min(it->second, refs);
                break;
            }
            case DistKind::categorical:
                if (d.categorical_probs().count(v)) holders += refs;
                break;
        }
    }
    return holders;
}

}  // namespace

std::map<Value, Rational> marginal(const LiftedState& s0, const SlotName& selector_slot,
                                   const Value& selector_value, const SlotName& query_slot) {
    const CanonicalState canon = canonicalize(s0);
    const long holders = max_simultaneous_holders(canon.state, selector_slot, selector_value);
    if (holders > 1) {
        throw SelectorAmbiguous("selector " + selector_slot + "=" + selector_value.symbol +
                                " can match " + std::to_string(holders) + " entities at once");
    }
    std::map<Value, Rational> out;
    if (holders == 0) return out;

    std::vector<std::pair<Rational, CanonicalState>> work{{Rational(1), canon}};
    while (!work.empty()) {
        auto [w, cs] = std::move(work.back());
        work.pop_back();
        const LiftedState& st = cs.state;

        // A decided holder is an entity whose selector slot is Dirac(selector_value).
        const Entity* holder = nullptr;
        for (const auto& [entity, mult] : st.formula.groups) {
            auto it = entity.slots.find(selector_slot);
            if (it == entity.slots.end()) continue;
            const Distribution& d = st.context.bindings.at(it->second);
            if (d.is_dirac() && d.dirac_value() == selector_value) {
                holder = &entity;
                break;
            }
        }
        if (holder) {
            auto qit = holder->slots.find(query_slot);
            if (qit == holder->slots.end()) continue;  // holder lacks the query slot
            const Distribution& qd = st.context.bindings.at(qit->second);
            for (const auto& v : qd.support()) {
                const Rational p = qd.draw_probability(v);
                auto it = out.find(v);
                if (it == out.end()) {
                    out.emplace(v, w * p);
                } else {
                    it->second += w * p;
                }
            }
            continue;
        }
        if (split_pending(st, selector_slot, selector_value)) {
            for (auto& [bw, bcs] : split_on_slot_value(st, selector_slot, selector_value)) {
                work.emplace_back(w * bw, std::move(bcs));
            }
            continue;
        }
        // Determinately no holder in this branch: contributes nothing.
    }
    return out;
}

std::string render(const LiftedState& s) {
    std::string out = "{ ";
    for (auto it = s.formula.groups.begin(); it != s.formula.groups.end(); ++it) {
        if (it != s.formula.groups.begin()) out += ", ";
        out += std::to_string(it->second);
        out += "*[";
        for (auto sit = it->first.slots.begin(); sit != it->first.slots.end(); ++sit) {
            if (sit != it->first.slots.begin()) out += ", ";
            out += sit->first;
            out += ':';
            out += sit->second;
        }
        out += ']';
    }
    out += " } ctx{ ";
    for (auto it = s.context.bindings.begin(); it != s.context.bindings.end(); ++it) {
        if (it != s.context.bindings.begin()) out += ", ";
        out += it->first;
        out += ": ";
        it->second.encode(out);
    }
    out += " }";
    return out;
}

}  // namespace lifted
