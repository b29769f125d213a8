#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "srcr/common.hpp"

namespace srcr {

// Exact rational over int64 with a positive denominator. Sparsities and
// bit-widths stay rational so e.g. one-third sparsity combined with 3 bits
// lands on exactly 7/8 rather than 0.8749999....
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {} // NOLINT: implicit by design
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    bool is_integer() const { return den_ == 1; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(checked(static_cast<__int128>(a.num_) * b.den_ +
                                static_cast<__int128>(b.num_) * a.den_),
                        checked(static_cast<__int128>(a.den_) * b.den_));
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return a + Rational(-b.num_, b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(checked(static_cast<__int128>(a.num_) * b.num_),
                        checked(static_cast<__int128>(a.den_) * b.den_));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw validation_error("rational division by zero");
        return Rational(checked(static_cast<__int128>(a.num_) * b.den_),
                        checked(static_cast<__int128>(a.den_) * b.num_));
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    // "1/3", "-2", "0.25", "33.333%". A '%' suffix divides by 100.
    static Rational parse(const std::string& text);

    // Decimal/percent inputs snap to the nearest rational with denominator
    // <= 64 when within 5e-4, so "33.333%" round-trips as exactly 1/3.
    // Inputs written as fractions are taken verbatim.
    static Rational parse_snapped(const std::string& text);

    // "1/3" or "2" for integers.
    std::string to_string() const;

    // Value times 100 rendered with up to four decimals, trailing zeros
    // trimmed: 13/16 -> "81.25%", 1/3 -> "33.3333%".
    std::string to_percent_string() const;

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.to_string();
    }

private:
    static long long checked(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN) throw numerical_error("rational overflow");
        return static_cast<long long>(v);
    }

    void normalize() {
        if (den_ == 0) throw validation_error("rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    long long num_;
    long long den_;
};

inline Rational Rational::parse(const std::string& text) {
    std::string s = text;
    // strip whitespace
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    if (s.empty()) throw validation_error("empty rational literal");

    bool percent = false;
    if (s.back() == '%') {
        percent = true;
        s.pop_back();
    }
    if (s.empty()) throw validation_error("empty rational literal");

    Rational r;
    auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            std::size_t pos_n = 0, pos_d = 0;
            long long n = std::stoll(s.substr(0, slash), &pos_n);
            long long d = std::stoll(s.substr(slash + 1), &pos_d);
            if (pos_n != slash || pos_d != s.size() - slash - 1)
                throw validation_error("malformed fraction: " + text);
            r = Rational(n, d);
        } else {
            auto dot = s.find('.');
            if (dot == std::string::npos) {
                std::size_t pos = 0;
                long long n = std::stoll(s, &pos);
                if (pos != s.size()) throw validation_error("malformed number: " + text);
                r = Rational(n);
            } else {
                std::string ip = s.substr(0, dot);
                std::string fp = s.substr(dot + 1);
                if (fp.size() > 15) fp = fp.substr(0, 15);
                bool neg = !ip.empty() && ip[0] == '-';
                if (ip == "-" || ip.empty()) ip = neg ? "-0" : "0";
                std::size_t pos = 0;
                long long whole = std::stoll(ip, &pos);
                if (pos != ip.size()) throw validation_error("malformed number: " + text);
                long long den = 1;
                long long frac = 0;
                for (char c : fp) {
                    if (c < '0' || c > '9') throw validation_error("malformed number: " + text);
                    frac = frac * 10 + (c - '0');
                    den *= 10;
                }
                Rational mag = Rational(whole < 0 ? -whole : whole) + Rational(frac, den);
                r = neg || whole < 0 ? Rational(0) - mag : mag;
            }
        }
    } catch (const std::invalid_argument&) {
        throw validation_error("malformed number: " + text);
    } catch (const std::out_of_range&) {
        throw validation_error("number out of range: " + text);
    }
    if (percent) r = r / Rational(100);
    return r;
}

inline Rational Rational::parse_snapped(const std::string& text) {
    Rational exact = parse(text);
    if (text.find('/') != std::string::npos) return exact;
    if (text.find('.') == std::string::npos) return exact; // integers (incl. "25%") are exact
    double x = exact.to_double();
    for (long long den = 1; den <= 64; ++den) {
        long long num = llround_half_away(x * static_cast<double>(den));
        Rational cand(num, den);
        if (std::fabs(cand.to_double() - x) < 5e-4) return cand;
    }
    return exact;
}

inline std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

inline std::string Rational::to_percent_string() const {
    Rational p = *this * Rational(100);
    bool neg = p.num_ < 0;
    unsigned long long n = static_cast<unsigned long long>(neg ? -p.num_ : p.num_);
    unsigned long long d = static_cast<unsigned long long>(p.den_);
    // four fractional digits, rounded half up on the magnitude
    unsigned long long scaled = (n * 10000ULL + d / 2) / d;
    unsigned long long whole = scaled / 10000ULL;
    unsigned long long frac = scaled % 10000ULL;
    std::string out = (neg ? "-" : "") + std::to_string(whole);
    if (frac != 0) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%04llu", frac);
        std::string fs(buf);
        while (!fs.empty() && fs.back() == '0') fs.pop_back();
        out += "." + fs;
    }
    return out + "%";
}

} // namespace srcr
