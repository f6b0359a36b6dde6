#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifted/rational.hpp"

namespace lifted {

/// Atomic value token (a location name, an identifier, an item, ...).
struct Value {
    std::string symbol;

    Value() = default;
    explicit Value(std::string s) : symbol(std::move(s)) {}

    friend bool operator==(const Value&, const Value&) = default;
    friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
        return a.symbol <=> b.symbol;
    }
};

enum class DistKind { dirac, urn, categorical };

/// Exact discrete distribution a context label can be bound to.
///
/// - dirac(v): every draw yields v.
/// - urn(multiset): sequential draws without replacement, exchangeable.
/// - categorical(p): independent draws with replacement.
class Distribution {
public:
    static Distribution dirac(Value v);
    static Distribution urn(const std::map<Value, long>& counts);
    static Distribution urn(const std::vector<Value>& values);
    /// Probabilities must each be in (0,1] and sum to 1 within 1e-12;
    /// they are renormalized exactly so downstream sums are exact.
    static Distribution categorical(const std::map<Value, Rational>& probs);

    DistKind kind() const { return kind_; }
    bool is_dirac() const { return kind_ == DistKind::dirac; }
    bool is_urn() const { return kind_ == DistKind::urn; }
    bool is_categorical() const { return kind_ == DistKind::categorical; }

    /// Number of draws the distribution supports; nullopt = unbounded.
    std::optional<long> capacity() const;

    /// Marginal probability of a single exchangeable draw yielding v.
    Rational draw_probability(const Value& v) const;

    /// Urn only: one copy of v removed. The result may be an empty urn;
    /// empty urns are legal intermediates but invalid inside a context.
    Distribution remove_value(const Value& v) const;

    /// Urn only: one copy of v added (inverse of remove_value).
    Distribution insert_value(const Value& v) const;

    /// Categorical only: v removed from the support, exactly renormalized.
    Distribution condition_without(const Value& v) const;

    /// All ordered k-draws with their exact probabilities.
    std::vector<std::pair<std::vector<Value>, Rational>> enumerate_draws(long k) const;

    std::vector<Value> support() const;

    /// The single value every draw yields, if the distribution is
    /// deterministic (dirac, or an urn over one distinct value).
    std::optional<Value> determinate_value() const;

    bool empty() const { return kind_ == DistKind::urn && counts_.empty(); }

    const Value& dirac_value() const { return point_; }
    const std::map<Value, long>& urn_counts() const { return counts_; }
    const std::map<Value, Rational>& categorical_probs() const { return probs_; }

    void encode(std::string& out) const { out += enc_; }
    const std::string& encoded() const { return enc_; }

    friend bool operator==(const Distribution& a, const Distribution& b);
    friend std::strong_ordering operator<=>(const Distribution& a, const Distribution& b);

private:
    Distribution() = default;
    void compute_encoding();

    DistKind kind_ = DistKind::dirac;
    Value point_;                        // dirac
    std::map<Value, long> counts_;       // urn
    std::map<Value, Rational> probs_;    // categorical
    std::string enc_;                    // canonical text, fixed at construction
};

}  // namespace lifted
