#include "lifted/rational.hpp"

#include <stdexcept>

namespace lifted {

Rational Rational::parse(const std::string& text) {
    Rational r;
    if (mpq_set_str(r.q_, text.c_str(), 10) != 0) {
        throw std::invalid_argument("not a rational: '" + text + "'");
    }
    if (mpz_sgn(mpq_denref(r.q_)) == 0) {
        throw std::invalid_argument("zero denominator: '" + text + "'");
    }
    mpq_canonicalize(r.q_);
    return r;
}

std::string Rational::str() const {
    char* s = mpq_get_str(nullptr, 10, q_);
    std::string out(s);
    void (*freefunc)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefunc);
    freefunc(s, out.size() + 1);
    return out;
}

Rational falling_factorial(long m, long k) {
    Rational r(1);
    for (long i = 0; i < k; ++i) r *= Rational(m - i);
    return r;
}

Rational factorial(long k) {
    Rational r(1);
    for (long i = 2; i <= k; ++i) r *= Rational(i);
    return r;
}

}  // namespace lifted
