#pragma once

#include <gmp.h>

#include <compare>
#include <cstdint>
#include <string>
#include <utility>

namespace lifted {

/// Exact rational number with value semantics, backed by GMP.
/// Always stored in canonical form (reduced, positive denominator).
class Rational {
public:
    Rational() { mpq_init(q_); }

    Rational(long n) {  // NOLINT: implicit by design, mirrors integer literals
        mpq_init(q_);
        mpq_set_si(q_, n, 1);
    }

    Rational(long num, long den) {
        mpq_init(q_);
        mpq_set_si(q_, num, den < 0 ? -den : den);
        if (den < 0) mpq_neg(q_, q_);
        mpq_canonicalize(q_);
    }

    Rational(const Rational& other) {
        mpq_init(q_);
        mpq_set(q_, other.q_);
    }

    Rational(Rational&& other) noexcept {
        mpq_init(q_);
        mpq_swap(q_, other.q_);
    }

    Rational& operator=(const Rational& other) {
        if (this != &other) mpq_set(q_, other.q_);
        return *this;
    }

    Rational& operator=(Rational&& other) noexcept {
        mpq_swap(q_, other.q_);
        return *this;
    }

    ~Rational() { mpq_clear(q_); }

    /// Exact conversion: every finite double is a dyadic rational.
    static Rational from_double(double d) {
        Rational r;
        mpq_set_d(r.q_, d);
        return r;
    }

    /// Parses "n" or "n/d".
    static Rational parse(const std::string& text);

    /// num/den from raw GMP integers, canonicalized.
    static Rational quotient(mpz_srcptr num, mpz_srcptr den) {
        Rational r;
        mpq_set_num(r.q_, num);
        mpq_set_den(r.q_, den);
        mpq_canonicalize(r.q_);
        return r;
    }

    Rational& operator+=(const Rational& o) { mpq_add(q_, q_, o.q_); return *this; }
    Rational& operator-=(const Rational& o) { mpq_sub(q_, q_, o.q_); return *this; }
    Rational& operator*=(const Rational& o) { mpq_mul(q_, q_, o.q_); return *this; }
    Rational& operator/=(const Rational& o) { mpq_div(q_, q_, o.q_); return *this; }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    Rational operator-() const {
        Rational r(*this);
        mpq_neg(r.q_, r.q_);
        return r;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return mpq_equal(a.q_, b.q_) != 0;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const int c = mpq_cmp(a.q_, b.q_);
        return c <=> 0;
    }

    int sign() const { return mpq_sgn(q_); }
    bool is_zero() const { return mpq_sgn(q_) == 0; }
    bool is_one() const { return mpq_cmp_si(q_, 1, 1) == 0; }

    double to_double() const { return mpq_get_d(q_); }

    /// Canonical text form, "num" or "num/den".
    std::string str() const;

private:
    mpq_t q_;
};

/// m * (m-1) * ... * (m-k+1) as an exact rational.
Rational falling_factorial(long m, long k);

/// k! as an exact rational.
Rational factorial(long k);

}  // namespace lifted
