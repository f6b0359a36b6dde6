#include "lifted/filter.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <optional>

#include "lifted/errors.hpp"

namespace lifted {

Rational LiftedBelief::total() const {
    Rational t(0);
    for (const auto& [key, hyp] : hypotheses) t += hyp.first;
    return t;
}

LiftedBelief make_belief(const WeightedStates& states) {
    LiftedBelief b;
    Rational total(0);
    for (const auto& [w, cs] : merge(states)) {
        if (w.sign() <= 0) throw Error("belief weights must be positive");
        if (auto v = validate(cs.state)) {
            throw Error("invalid hypothesis (rule " + std::to_string(v->rule) +
                        "): " + v->message);
        }
        total += w;
        std::string key = cs.key;
        b.hypotheses.emplace(std::move(key), std::make_pair(w, std::make_shared<const CanonicalState>(cs)));
    }
    if (b.hypotheses.empty()) throw Error("belief must contain at least one hypothesis");
    if (std::abs(total.to_double() - 1.0) > 1e-9) {
        throw Error("belief weights sum to " + total.str() + ", not 1");
    }
    for (auto& [key, hyp] : b.hypotheses) hyp.first /= total;
    return b;
}

namespace {

/// One expansion run: branches merged by canonical key as they arrive.
struct Accumulator {
    std::map<std::string, std::pair<Rational, SharedState>> acc;
    std::size_t raw = 0;   // branch count before merging
    long splits = 0;

    void add(const Rational& w, const SharedState& cs) {
        ++raw;
        auto it = acc.find(cs->key);
        if (it == acc.end()) {
            std::string key = cs->key;
            acc.emplace(std::move(key), std::make_pair(w, cs));
        } else {
            it->second.first += w;
        }
    }
    void add(const Rational& w, CanonicalState&& cs) {
        ++raw;
        auto it = acc.find(cs.key);
        if (it == acc.end()) {
            std::string key = cs.key;
            acc.emplace(std::move(key),
                        std::make_pair(w, std::make_shared<const CanonicalState>(std::move(cs))));
        } else {
            it->second.first += w;
        }
    }
};

}  // namespace

SharedState ExpansionCache::find_state(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = states_.find(key);
    return it == states_.end() ? nullptr : it->second;
}

SharedState ExpansionCache::intern(CanonicalState&& cs) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = states_.find(cs.key);
    if (it != states_.end()) return it->second;
    std::string key = cs.key;
    return states_.emplace(std::move(key), std::make_shared<const CanonicalState>(std::move(cs)))
        .first->second;
}

std::shared_ptr<const ExpansionCache::Expansion> ExpansionCache::predict_expansion(
    const CanonicalState& s, const std::vector<ActionSchema>& schemas) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = expansions_.find(s.key);
        if (it != expansions_.end()) return it->second;
    }

    Expansion e;
    const long splits_before = split_operations();
    std::map<std::string, Rational> acc;

    WeightedStates work{{Rational(1), s}};
    while (!work.empty()) {
        auto [w, state] = std::move(work.back());
        work.pop_back();

        std::optional<SplitRequest> request;
        for (const auto& schema : schemas) {
            const Applicability a = applicability(state.state, schema);
            if (a.status == Applicability::Status::indeterminate) {
                request = a.split;
                break;
            }
        }
        if (request) {
            for (auto& [bw, bs] : split_canonical(state, request->slot, request->value)) {
                work.emplace_back(w * bw, std::move(bs));
            }
            continue;
        }

        // Successors of this determinate branch, scaled by its share.
        for (auto& [key, p] : maximal_step_distribution(state.state, schemas)) {
            auto it = acc.find(key);
            if (it == acc.end()) {
                acc.emplace(std::move(key), w * p);
            } else {
                it->second += w * p;
            }
        }
    }

    e.splits = split_operations() - splits_before;
    e.successors.reserve(acc.size());
    for (auto& [key, weight] : acc) {
        SharedState ptr = find_state(key);
        if (!ptr) ptr = intern(state_from_key(key));
        e.successors.emplace_back(std::move(weight), std::move(ptr));
    }

    auto shared = std::make_shared<const Expansion>(std::move(e));
    // Very large expansions are returned uncached once the cache is big:
    // keeping every successor list would dominate memory.
    std::lock_guard<std::mutex> lock(mu_);
    if (shared->successors.size() > 4096 && cached_successors_ > 2000000) {
        return shared;
    }
    cached_successors_ += shared->successors.size();
    return expansions_.emplace(s.key, shared).first->second;
}

const std::vector<UnsplitFamily>& ExpansionCache::families(const CanonicalState& s) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = families_.find(s.key);
        if (it != families_.end()) return it->second;
    }
    std::vector<UnsplitFamily> f = unsplit_candidates(s);
    std::lock_guard<std::mutex> lock(mu_);
    return families_.emplace(s.key, std::move(f)).first->second;
}

namespace {

/// Expands hypotheses in key order, fanning chunks out to workers when
/// options.threads > 1; chunk results are folded in input order, so the
/// outcome is independent of scheduling.
Accumulator expand_all(
    const LiftedBelief& b, const FilterOptions& options,
    const std::function<void(const Rational&, const SharedState&, Accumulator&)>& expand) {
    std::vector<const std::pair<Rational, SharedState>*> hyps;
    hyps.reserve(b.hypotheses.size());
    for (const auto& [key, hyp] : b.hypotheses) hyps.push_back(&hyp);

    auto run_range = [&](std::size_t lo, std::size_t hi) {
        Accumulator part;
        for (std::size_t i = lo; i < hi; ++i) {
            expand(hyps[i]->first, hyps[i]->second, part);
            if (part.acc.size() > options.hypothesis_guard) {
                throw ExplosionGuard("state count " + std::to_string(part.acc.size()) +
                                         " exceeds guard",
                                     part.acc.size());
            }
        }
        return part;
    };

    if (options.threads <= 1 || hyps.size() < 2) {
        return run_range(0, hyps.size());
    }

    const std::size_t n = hyps.size();
    const std::size_t chunks = std::min<std::size_t>(options.threads, n);
    std::vector<std::future<Accumulator>> futures;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        futures.push_back(std::async(std::launch::async, [&run_range, lo, hi]() {
            return run_range(lo, hi);
        }));
    }
    Accumulator out;
    for (auto& f : futures) {
        Accumulator part = f.get();
        out.raw += part.raw;
        out.splits += part.splits;
        for (auto& [key, entry] : part.acc) {
            auto it = out.acc.find(key);
            if (it == out.acc.end()) {
                out.acc.emplace(key, std::move(entry));
            } else {
                it->second.first += entry.first;
            }
        }
        if (out.acc.size() > options.hypothesis_guard) {
            throw ExplosionGuard("state count " + std::to_string(out.acc.size()) +
                                     " exceeds guard",
                                 out.acc.size());
        }
    }
    return out;
}

LiftedBelief finalize(Accumulator&& result, const FilterOptions& options, StepMetrics* metrics,
                      bool is_update, long obs_t) {
    ExpansionCache local_cache;
    ExpansionCache* cache = options.cache ? options.cache : &local_cache;

    // Canonical merging already happened in the accumulator. The exact
    // unsplit pass pays off after observations align branch weights;
    // running it on the (much larger) predicted set buys little.
    long collapses = 0;
    if (is_update) {
        WeightedStateMap items;
        for (auto& [key, entry] : result.acc) {
            items.emplace(key, std::make_pair(std::move(entry.first), *entry.second));
        }
        unsplit_fixpoint(
            items,
            [cache](const CanonicalState& cs) -> const std::vector<UnsplitFamily>& {
                return cache->families(cs);
            },
            &collapses);
        result.acc.clear();
        for (auto& [key, entry] : items) {
            result.acc.emplace(
                key, std::make_pair(std::move(entry.first),
                                    std::make_shared<const CanonicalState>(std::move(entry.second))));
        }
    }

    Rational total(0);
    for (const auto& [key, entry] : result.acc) total += entry.first;
    if (total.is_zero()) {
        throw ImpossibleObservation("total likelihood is zero at t=" + std::to_string(obs_t),
                                    obs_t);
    }

    LiftedBelief out;
    for (auto& [key, entry] : result.acc) {
        out.hypotheses.emplace(key, std::make_pair(entry.first / total,
                                                   std::move(entry.second)));
    }

    if (options.prune_enabled && options.prune_epsilon.sign() > 0) {
        Rational kept(0);
        for (auto it = out.hypotheses.begin(); it != out.hypotheses.end();) {
            if (it->second.first < options.prune_epsilon && out.hypotheses.size() > 1) {
                it = out.hypotheses.erase(it);
            } else {
                kept += it->second.first;
                ++it;
            }
        }
        for (auto& [key, hyp] : out.hypotheses) hyp.first /= kept;
    }

    if (metrics) {
        metrics->n_splits += result.splits;
        metrics->n_merges += static_cast<long>(result.raw - result.acc.size()) + collapses;
        if (is_update) {
            metrics->n_hyp_post_update = out.hypotheses.size();
            metrics->n_hyp_post_update_unmerged = result.raw;
        } else {
            metrics->n_hyp_post_predict = out.hypotheses.size();
            metrics->n_hyp_post_predict_unmerged = result.raw;
        }
    }
    return out;
}

}  // namespace

LiftedBelief update(const LiftedBelief& b, const Observation& obs,
                    const std::vector<SensorSpec>& sensors, const FilterOptions& options,
                    StepMetrics* metrics) {
    // Sensors with a reading this step, in declaration order.
    std::vector<std::pair<const SensorSpec*, const Reading*>> active;
    for (const auto& sensor : sensors) {
        auto it = obs.readings.find(sensor.id);
        if (it != obs.readings.end()) active.emplace_back(&sensor, &it->second);
    }

    auto expand = [&](const Rational& weight, const SharedState& cs, Accumulator& into) {
        const long splits_before = split_operations();
        WeightedStates work{{weight, *cs}};
        for (const auto& [spec, reading] : active) {
            WeightedStates next;
            if (spec->kind == SensorSpec::Kind::identify) {
                if (!reading->ids) throw Error("identify sensor '" + spec->id + "' needs ids");
                for (auto& [w, state] : work) {
                    for (auto& [lw, ls] :
                         identify_likelihood_update(state, *spec, *reading->ids)) {
                        next.emplace_back(w * lw, std::move(ls));
                    }
                }
            } else {
                if (!reading->presence) {
                    throw Error("presence sensor '" + spec->id + "' needs a boolean");
                }
                while (!work.empty()) {
                    auto [w, state] = std::move(work.back());
                    work.pop_back();
                    const PresenceEval eval =
                        presence_likelihood(state.state, *spec, *reading->presence);
                    if (eval.likelihood) {
                        if (eval.likelihood->sign() > 0) {
                            next.emplace_back(w * *eval.likelihood, std::move(state));
                        }
                        continue;
                    }
                    for (auto& [bw, bs] :
                         split_canonical(state, eval.split->slot, eval.split->value)) {
                        work.emplace_back(w * bw, std::move(bs));
                    }
                }
            }
            work = std::move(next);
        }
        into.splits += split_operations() - splits_before;
        for (auto& [w, state] : work) into.add(w, std::move(state));
    };

    if (metrics) metrics->n_hyp_pre = b.hypotheses.size();
    return finalize(expand_all(b, options, expand), options, metrics, true, obs.t);
}

LiftedBelief predict(const LiftedBelief& b, const std::vector<ActionSchema>& schemas,
                     const FilterOptions& options, StepMetrics* metrics) {
    ExpansionCache local_cache;
    ExpansionCache* cache = options.cache ? options.cache : &local_cache;

    auto expand = [&](const Rational& weight, const SharedState& cs, Accumulator& into) {
        const auto exp = cache->predict_expansion(*cs, schemas);
        into.splits += exp->splits;
        for (const auto& [cw, succ] : exp->successors) into.add(weight * cw, succ);
    };

    return finalize(expand_all(b, options, expand), options, metrics, false, 0);
}

std::map<Value, Rational> query(const LiftedBelief& b, const SlotName& selector_slot,
                                const Value& selector_value, const SlotName& query_slot) {
    std::map<Value, Rational> out;
    for (const auto& [key, hyp] : b.hypotheses) {
        for (const auto& [v, p] :
             marginal(hyp.second->state, selector_slot, selector_value, query_slot)) {
            auto it = out.find(v);
            if (it == out.end()) {
                out.emplace(v, hyp.first * p);
            } else {
                it->second += hyp.first * p;
            }
        }
    }
    return out;
}

StepResult step(const LiftedBelief& b, const Observation& obs,
                const std::vector<ActionSchema>& schemas, const std::vector<SensorSpec>& sensors,
                const FilterOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    StepResult result;
    result.metrics.t = obs.t;
    result.updated = update(b, obs, sensors, options, &result.metrics);
    result.predicted = predict(result.updated, schemas, options, &result.metrics);
    result.metrics.ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

}  // namespace lifted
