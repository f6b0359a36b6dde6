#include <doctest.h>

#include <algorithm>
#include <vector>

#include "lifted/distribution.hpp"
#include "lifted/errors.hpp"

using namespace lifted;

namespace {

Value V(const char* s) { return Value(s); }

std::vector<Value> ids(int n, const char* prefix = "fl") {
    std::vector<Value> out;
    for (int i = 1; i <= n; ++i) out.emplace_back(prefix + std::to_string(i));
    return out;
}

// Independent oracle: first-draw probability by enumerating labeled copies.
Rational first_draw_by_enumeration(const std::map<Value, long>& counts, const Value& v) {
    long total = 0, matching = 0;
    for (const auto& [value, c] : counts) {
        total += c;
        if (value == v) matching += c;
    }
    return Rational(matching, total);
}

}  // namespace

TEST_CASE("capacity") {
    CHECK(*Distribution::urn(ids(10)).capacity() == 10);
    CHECK(!Distribution::dirac(V("storage1")).capacity().has_value());
    CHECK(*Distribution::urn({{V("a"), 2}, {V("b"), 1}}).capacity() == 3);
    CHECK(!Distribution::categorical({{V("a"), Rational(1, 2)}, {V("b"), Rational(1, 2)}})
               .capacity()
               .has_value());
}

TEST_CASE("draw probability") {
    CHECK(Distribution::urn(ids(10)).draw_probability(V("fl1")) == Rational(1, 10));
    CHECK(Distribution::dirac(V("storage1")).draw_probability(V("storage1")) == Rational(1));
    CHECK(Distribution::dirac(V("storage1")).draw_probability(V("storage2")) == Rational(0));

    const std::map<Value, long> aab{{V("a"), 2}, {V("b"), 1}};
    const Rational expected = first_draw_by_enumeration(aab, V("a"));
    CHECK(expected == Rational(2, 3));
    CHECK(Distribution::urn(aab).draw_probability(V("a")) == expected);
}

TEST_CASE("draw probabilities sum to one") {
    const auto dists = {
        Distribution::urn(ids(10)),
        Distribution::urn({{V("a"), 2}, {V("b"), 1}}),
        Distribution::dirac(V("s")),
        Distribution::categorical({{V("a"), Rational(1, 3)}, {V("b"), Rational(2, 3)}}),
    };
    for (const auto& d : dists) {
        Rational total(0);
        for (const auto& v : d.support()) total += d.draw_probability(v);
        CHECK(total == Rational(1));
    }
}

TEST_CASE("remove value") {
    const auto u10 = Distribution::urn(ids(10));
    const auto u9 = u10.remove_value(V("fl1"));
    CHECK(*u9.capacity() == 9);
    CHECK(u9.draw_probability(V("fl1")) == Rational(0));
    CHECK(u9.draw_probability(V("fl2")) == Rational(1, 9));

    const auto aab = Distribution::urn({{V("a"), 2}, {V("b"), 1}});
    CHECK(aab.remove_value(V("a")) == Distribution::urn({{V("a"), 1}, {V("b"), 1}}));
    CHECK_THROWS_AS(Distribution::urn({{V("a"), 1}}).remove_value(V("b")), ValueAbsent);

    // remove then insert is the identity
    CHECK(aab.remove_value(V("a")).insert_value(V("a")) == aab);
    CHECK(u10.remove_value(V("fl3")).insert_value(V("fl3")) == u10);
}

TEST_CASE("enumerate draws") {
    SUBCASE("two permutations, exchangeable") {
        const auto d = Distribution::urn(std::vector<Value>{V("x"), V("y")});
        auto draws = d.enumerate_draws(2);
        REQUIRE(draws.size() == 2);
        for (const auto& [tuple, p] : draws) CHECK(p == Rational(1, 2));
    }
    SUBCASE("dirac repeats") {
        const auto d = Distribution::dirac(V("s"));
        auto draws = d.enumerate_draws(3);
        REQUIRE(draws.size() == 1);
        CHECK(draws[0].first == std::vector<Value>{V("s"), V("s"), V("s")});
        CHECK(draws[0].second == Rational(1));
    }
    SUBCASE("urn with duplicates merges equal tuples") {
        // Oracle: 6 ordered draws of labeled copies {a1,a2,b}; pairs collapse to
        // (a,a) x2, (a,b) x2, (b,a) x2 -> 1/3 each.
        const auto d = Distribution::urn({{V("a"), 2}, {V("b"), 1}});
        auto draws = d.enumerate_draws(2);
        REQUIRE(draws.size() == 3);
        for (const auto& [tuple, p] : draws) CHECK(p == Rational(1, 3));
    }
    SUBCASE("probabilities sum to one") {
        const auto cat =
            Distribution::categorical({{V("a"), Rational(1, 4)}, {V("b"), Rational(3, 4)}});
        Rational total(0);
        for (const auto& [tuple, p] : cat.enumerate_draws(3)) total += p;
        CHECK(total == Rational(1));
    }
    SUBCASE("capacity exceeded") {
        CHECK_THROWS_AS(Distribution::urn(std::vector<Value>{V("a")}).enumerate_draws(2), CapacityExceeded);
    }
    SUBCASE("prefix mass equals first-draw probability") {
        const auto d = Distribution::urn({{V("a"), 2}, {V("b"), 1}});
        Rational mass(0);
        for (const auto& [tuple, p] : d.enumerate_draws(2)) {
            if (tuple[0] == V("a")) mass += p;
        }
        CHECK(mass == d.draw_probability(V("a")));
    }
}

TEST_CASE("categorical validation") {
    CHECK_THROWS(Distribution::categorical({{V("a"), Rational(1, 2)}}));
    CHECK_THROWS(Distribution::categorical({{V("a"), Rational(3, 2)}}));
    CHECK_THROWS(Distribution::categorical({}));
    const auto ok =
        Distribution::categorical({{V("a"), Rational(1, 2)}, {V("b"), Rational(1, 2)}});
    CHECK(ok.draw_probability(V("a")) == Rational(1, 2));
}

TEST_CASE("condition without") {
    const auto cat = Distribution::categorical(
        {{V("a"), Rational(1, 2)}, {V("b"), Rational(1, 4)}, {V("c"), Rational(1, 4)}});
    const auto cond = cat.condition_without(V("a"));
    CHECK(cond.draw_probability(V("b")) == Rational(1, 2));
    CHECK(cond.draw_probability(V("a")) == Rational(0));
}

TEST_CASE("determinate value") {
    CHECK(*Distribution::dirac(V("s")).determinate_value() == V("s"));
    CHECK(*Distribution::urn({{V("a"), 3}}).determinate_value() == V("a"));
    CHECK(!Distribution::urn(ids(2)).determinate_value().has_value());
}

TEST_CASE("encoding is canonical") {
    CHECK(Distribution::dirac(V("s")).encoded() == "d(s)");
    CHECK(Distribution::urn({{V("a"), 2}, {V("b"), 1}}).encoded() == "U(a*2,b)");
    CHECK(Distribution::urn(std::vector<Value>{V("b"), V("a")}) == Distribution::urn(std::vector<Value>{V("a"), V("b")}));
}
