#include "lifted/distribution.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>

#include "lifted/errors.hpp"

namespace lifted {

Distribution Distribution::dirac(Value v) {
    Distribution d;
    d.kind_ = DistKind::dirac;
    d.point_ = std::move(v);
    d.compute_encoding();
    return d;
}

Distribution Distribution::urn(const std::map<Value, long>& counts) {
    if (counts.empty()) throw Error("urn must be non-empty");
    Distribution d;
    d.kind_ = DistKind::urn;
    for (const auto& [v, c] : counts) {
        if (c < 1) throw Error("urn multiplicity must be >= 1 for '" + v.symbol + "'");
        d.counts_.emplace(v, c);
    }
    d.compute_encoding();
    return d;
}

Distribution Distribution::urn(const std::vector<Value>& values) {
    std::map<Value, long> counts;
    for (const auto& v : values) ++counts[v];
    return urn(counts);
}

Distribution Distribution::categorical(const std::map<Value, Rational>& probs) {
    if (probs.empty()) throw Error("categorical must be non-empty");
    Rational total(0);
    for (const auto& [v, p] : probs) {
        if (p.sign() <= 0 || p > Rational(1)) {
            throw Error("categorical probability out of (0,1] for '" + v.symbol + "'");
        }
        total += p;
    }
    if (std::abs(total.to_double() - 1.0) > 1e-12) {
        throw Error("categorical probabilities sum to " + total.str() + ", not 1");
    }
    Distribution d;
    d.kind_ = DistKind::categorical;
    for (const auto& [v, p] : probs) d.probs_.emplace(v, p / total);
    d.compute_encoding();
    return d;
}

std::optional<long> Distribution::capacity() const {
    if (kind_ != DistKind::urn) return std::nullopt;
    long total = 0;
    for (const auto& [v, c] : counts_) total += c;
    return total;
}

Rational Distribution::draw_probability(const Value& v) const {
    switch (kind_) {
        case DistKind::dirac:
            return point_ == v ? Rational(1) : Rational(0);
        case DistKind::urn: {
            const long total = *capacity();
            if (total < 1) throw Error("draw from empty urn");
            auto it = counts_.find(v);
            return it == counts_.end() ? Rational(0) : Rational(it->second, total);
        }
        case DistKind::categorical: {
            auto it = probs_.find(v);
            return it == probs_.end() ? Rational(0) : it->second;
        }
    }
    return Rational(0);
}

Distribution Distribution::remove_value(const Value& v) const {
    if (kind_ != DistKind::urn) throw Error("remove_value requires an urn");
    auto it = counts_.find(v);
    if (it == counts_.end()) throw ValueAbsent("value '" + v.symbol + "' absent from urn");
    Distribution d;
    d.kind_ = DistKind::urn;
    d.counts_ = counts_;
    if (--d.counts_[v] == 0) d.counts_.erase(v);
    d.compute_encoding();
    return d;
}

Distribution Distribution::insert_value(const Value& v) const {
    if (kind_ != DistKind::urn) throw Error("insert_value requires an urn");
    Distribution d;
    d.kind_ = DistKind::urn;
    d.counts_ = counts_;
    ++d.counts_[v];
    d.compute_encoding();
    return d;
}

Distribution Distribution::condition_without(const Value& v) const {
    if (kind_ != DistKind::categorical) throw Error("condition_without requires a categorical");
    auto it = probs_.find(v);
    if (it == probs_.end()) throw ValueAbsent("value '" + v.symbol + "' absent from categorical");
    std::map<Value, Rational> rest = probs_;
    rest.erase(v);
    if (rest.empty()) throw Error("conditioning away the whole categorical support");
    Rational total(0);
    for (const auto& [w, p] : rest) total += p;
    std::map<Value, Rational> scaled;
    for (const auto& [w, p] : rest) scaled.emplace(w, p / total);
    Distribution d;
    d.kind_ = DistKind::categorical;
    d.probs_ = std::move(scaled);
    d.compute_encoding();
    return d;
}

std::vector<std::pair<std::vector<Value>, Rational>> Distribution::enumerate_draws(long k) const {
    if (k < 0) throw Error("negative draw count");
    if (auto cap = capacity(); cap && *cap < k) {
        throw CapacityExceeded("urn of capacity " + std::to_string(*cap) +
                               " cannot supply " + std::to_string(k) + " draws");
    }
    std::vector<std::pair<std::vector<Value>, Rational>> out;
    switch (kind_) {
        case DistKind::dirac: {
            out.emplace_back(std::vector<Value>(k, point_), Rational(1));
            break;
        }
        case DistKind::urn: {
            std::map<Value, long> remaining = counts_;
            std::vector<Value> tuple;
            std::function<void(long, Rational)> rec = [&](long left, Rational p) {
                if (left == 0) {
                    out.emplace_back(tuple, p);
                    return;
                }
                long total = 0;
                for (const auto& [v, c] : remaining) total += c;
                for (auto& [v, c] : remaining) {
                    if (c == 0) continue;
                    Rational step = p * Rational(c, total);
                    --c;
                    tuple.push_back(v);
                    rec(left - 1, step);
                    tuple.pop_back();
                    ++c;
                }
            };
            rec(k, Rational(1));
            break;
        }
        case DistKind::categorical: {
            std::vector<Value> tuple;
            std::function<void(long, Rational)> rec = [&](long left, Rational p) {
                if (left == 0) {
                    out.emplace_back(tuple, p);
                    return;
                }
                for (const auto& [v, pv] : probs_) {
                    tuple.push_back(v);
                    rec(left - 1, p * pv);
                    tuple.pop_back();
                }
            };
            rec(k, Rational(1));
            break;
        }
    }
    return out;
}

std::vector<Value> Distribution::support() const {
    std::vector<Value> out;
    switch (kind_) {
        case DistKind::dirac:
            out.push_back(point_);
            break;
        case DistKind::urn:
            for (const auto& [v, c] : counts_) out.push_back(v);
            break;
        case DistKind::categorical:
            for (const auto& [v, p] : probs_) out.push_back(v);
            break;
    }
    return out;
}

std::optional<Value> Distribution::determinate_value() const {
    switch (kind_) {
        case DistKind::dirac:
            return point_;
        case DistKind::urn:
            if (counts_.size() == 1) return counts_.begin()->first;
            return std::nullopt;
        case DistKind::categorical:
            if (probs_.size() == 1) return probs_.begin()->first;
            return std::nullopt;
    }
    return std::nullopt;
}

void Distribution::compute_encoding() {
    std::string out;
    switch (kind_) {
        case DistKind::dirac:
            out += "d(";
            out += point_.symbol;
            out += ')';
            break;
        case DistKind::urn:
            out += "U(";
            for (auto it = counts_.begin(); it != counts_.end(); ++it) {
                if (it != counts_.begin()) out += ',';
                out += it->first.symbol;
                if (it->second != 1) {
                    out += '*';
                    out += std::to_string(it->second);
                }
            }
            out += ')';
            break;
        case DistKind::categorical:
            out += "C(";
            for (auto it = probs_.begin(); it != probs_.end(); ++it) {
                if (it != probs_.begin()) out += ',';
                out += it->first.symbol;
                out += ':';
                out += it->second.str();
            }
            out += ')';
            break;
    }
    enc_ = std::move(out);
}

bool operator==(const Distribution& a, const Distribution& b) {
    return a.kind_ == b.kind_ && a.point_ == b.point_ && a.counts_ == b.counts_ &&
           a.probs_ == b.probs_;
}

std::strong_ordering operator<=>(const Distribution& a, const Distribution& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    switch (a.kind_) {
        case DistKind::dirac:
            return a.point_ <=> b.point_;
        case DistKind::urn:
            return a.counts_ <=> b.counts_;
        case DistKind::categorical:
            return a.probs_ <=> b.probs_;
    }
    return std::strong_ordering::equal;
}

}  // namespace lifted
