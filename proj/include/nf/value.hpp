#pragma once

#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace nf {

/// Exact positive rational. Kept exact inside the engine; rendered as a
/// decimal literal only when Kappa text is emitted.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("rational: zero denominator");
        if (num <= 0 || den < 0) throw std::invalid_argument("rational: must be positive");
        std::int64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num * b.den < b.num * a.den;
    }

    std::string to_fraction_string() const {
        return std::to_string(num) + "/" + std::to_string(den);
    }

    /// Decimal rendering: exact when the reduced denominator is of the form
    /// 2^a * 5^b, otherwise rounded to 15 significant digits. Deterministic.
    std::string to_decimal_string() const {
        std::int64_t d = den;
        int twos = 0, fives = 0;
        while (d % 2 == 0) { d /= 2; ++twos; }
        while (d % 5 == 0) { d /= 5; ++fives; }
        if (d == 1) {
            // scale so denominator becomes a power of ten
            int shift = twos > fives ? twos : fives;
            unsigned long long scaled = static_cast<unsigned long long>(num);
            for (int i = twos; i < shift; ++i) scaled *= 2;
            for (int i = fives; i < shift; ++i) scaled *= 5;
            std::string digits = std::to_string(scaled);
            if (shift == 0) return digits;
            while (static_cast<int>(digits.size()) <= shift) digits.insert(digits.begin(), '0');
            digits.insert(digits.end() - shift, '.');
            // trim trailing zeros after the point
            while (digits.back() == '0') digits.pop_back();
            if (digits.back() == '.') digits.pop_back();
            return digits;
        }
        // non-terminating expansion: long division, 15 significant digits
        std::string out;
        std::int64_t q = num / den, r = num % den;
        out += std::to_string(q);
        int sig = (q > 0) ? static_cast<int>(out.size()) : 0;
        out += '.';
        while (sig < 15) {
            r *= 10;
            std::int64_t digit = r / den;
            r %= den;
            out += static_cast<char>('0' + digit);
            if (sig > 0 || digit > 0) ++sig;
        }
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
        return out;
    }
};

/// The 20 one-letter amino-acid codes (all letters except B, J, O, U, X, Z).
inline const std::string& amino_acid_alphabet() {
    static const std::string alphabet = "ACDEFGHIKLMNPQRSTVWY";
    return alphabet;
}

inline bool is_amino_acid_code(char c) {
    return amino_acid_alphabet().find(c) != std::string::npos;
}

/// Closed integer interval (lo, hi) of positive integers; lo > hi denotes the
/// empty interval.
struct Interval {
    std::int64_t lo = 1;
    std::int64_t hi = 1;

    Interval() = default;
    Interval(std::int64_t l, std::int64_t h) : lo(l), hi(h) {
        if (l <= 0 || h <= 0) throw std::invalid_argument("interval: components must be positive");
    }

    bool empty() const { return lo > hi; }
    bool intersects(const Interval& other) const {
        if (empty() || other.empty()) return false;
        return std::max(lo, other.lo) <= std::min(hi, other.hi);
    }

    friend bool operator==(const Interval& a, const Interval& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
    friend bool operator<(const Interval& a, const Interval& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    }
};

/// Tagged scalar value attached to graph nodes:
///   boolean | positive integer | amino-acid code | interval | positive rational rate.
class Value {
public:
    static Value boolean(bool b) { return Value(Payload(std::in_place_index<0>, b)); }
    static Value positive_int(std::int64_t n) {
        if (n <= 0) throw std::invalid_argument("value: integer must be positive");
        return Value(Payload(std::in_place_index<1>, n));
    }
    static Value amino_acid(char c) {
        if (!is_amino_acid_code(c)) throw std::invalid_argument(std::string("value: invalid amino-acid code '") + c + "'");
        return Value(Payload(std::in_place_index<2>, c));
    }
    static Value interval(std::int64_t lo, std::int64_t hi) {
        return Value(Payload(std::in_place_index<3>, Interval(lo, hi)));
    }
    static Value rate(Rational r) { return Value(Payload(std::in_place_index<4>, r)); }
    static Value rate(std::int64_t num, std::int64_t den) { return rate(Rational(num, den)); }

    bool is_boolean() const { return payload_.index() == 0; }
    bool is_positive_int() const { return payload_.index() == 1; }
    bool is_amino_acid() const { return payload_.index() == 2; }
    bool is_interval() const { return payload_.index() == 3; }
    bool is_rate() const { return payload_.index() == 4; }

    bool as_boolean() const { return std::get<0>(payload_); }
    std::int64_t as_positive_int() const { return std::get<1>(payload_); }
    char as_amino_acid() const { return std::get<2>(payload_); }
    const Interval& as_interval() const { return std::get<3>(payload_); }
    const Rational& as_rate() const { return std::get<4>(payload_); }

    friend bool operator==(const Value& a, const Value& b) { return a.payload_ == b.payload_; }
    friend bool operator<(const Value& a, const Value& b) { return a.payload_ < b.payload_; }

    std::string to_string() const {
        switch (payload_.index()) {
            case 0: return as_boolean() ? "1" : "0";
            case 1: return std::to_string(as_positive_int());
            case 2: return std::string(1, as_amino_acid());
            case 3: return "[" + std::to_string(as_interval().lo) + "," + std::to_string(as_interval().hi) + "]";
            default: return as_rate().to_fraction_string();
        }
    }

private:
    using Payload = std::variant<bool, std::int64_t, char, Interval, Rational>;
    explicit Value(Payload p) : payload_(std::move(p)) {}
    Payload payload_;
};

using ValueSet = std::set<Value>;

inline ValueSet value_union(const ValueSet& a, const ValueSet& b) {
    ValueSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline ValueSet value_intersection(const ValueSet& a, const ValueSet& b) {
    ValueSet out;
    for (const auto& v : a)
        if (b.count(v)) out.insert(v);
    return out;
}

inline ValueSet value_difference(const ValueSet& a, const ValueSet& b) {
    ValueSet out;
    for (const auto& v : a)
        if (!b.count(v)) out.insert(v);
    return out;
}

inline bool value_subset(const ValueSet& a, const ValueSet& b) {
    for (const auto& v : a)
        if (!b.count(v)) return false;
    return true;
}

} // namespace nf
