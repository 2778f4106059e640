#include "ctxgraph/rational.hpp"

#include "ctxgraph/error.hpp"

#include <cctype>
#include <charconv>
#include <limits>

namespace ctxgraph {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

[[noreturn]] void bad(std::string_view text, const char* why) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("invalid rational '") + std::string(text) + "': " + why);
}

std::int64_t parse_int(std::string_view text, std::string_view whole) {
    std::int64_t v = 0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        bad(whole, "not an integer");
    }
    return v;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
    *this = from_wide(num, den);
}

Rational Rational::from_wide(__int128 num, __int128 den) {
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const __int128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    constexpr auto lo = std::numeric_limits<std::int64_t>::min();
    constexpr auto hi = std::numeric_limits<std::int64_t>::max();
    if (num < lo || num > hi || den > hi) {
        throw Error(ErrorCode::InvalidArgument, "rational overflow");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) {
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return Rational(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
    }

    // Decimal literal: [sign] digits [. digits] [e [sign] digits]
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    std::string_view exponent_part;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        exponent_part = s.substr(e + 1);
        s = s.substr(0, e);
    }
    std::string digits;
    int scale = 0;
    bool seen_dot = false;
    for (char c : s) {
        if (c == '.') {
            if (seen_dot) bad(text, "two decimal points");
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_dot) ++scale;
        } else {
            bad(text, "unexpected character");
        }
    }
    if (digits.empty()) bad(text, "no digits");
    if (seen_dot && (s.front() == '.' || s.back() == '.')) bad(text, "bare decimal point");
    if (!exponent_part.empty()) scale -= static_cast<int>(parse_int(exponent_part, text));
    else if (text.find_first_of("eE") != std::string_view::npos) bad(text, "empty exponent");

    __int128 num = 0;
    for (char c : digits) {
        num = num * 10 + (c - '0');
        if (num > (static_cast<__int128>(1) << 100)) bad(text, "too many digits");
    }
    __int128 den = 1;
    while (scale > 0) {
        den *= 10;
        --scale;
        if (den > (static_cast<__int128>(1) << 100)) bad(text, "exponent out of range");
    }
    while (scale < 0) {
        num *= 10;
        ++scale;
        if (num > (static_cast<__int128>(1) << 100)) bad(text, "exponent out of range");
    }
    return from_wide(negative ? -num : num, den);
}

Rational operator+(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::UncategorizableReading: return "UncategorizableReading";
        case ErrorCode::MissingParameter: return "MissingParameter";
        case ErrorCode::UnknownParameter: return "UnknownParameter";
        case ErrorCode::DuplicateContext: return "DuplicateContext";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UnknownAction: return "UnknownAction";
        case ErrorCode::SelfTransition: return "SelfTransition";
        case ErrorCode::BrokenChain: return "BrokenChain";
        case ErrorCode::InconsistentLog: return "InconsistentLog";
        case ErrorCode::DuplicateRuleId: return "DuplicateRuleId";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::NoPriorStep: return "NoPriorStep";
        case ErrorCode::FeedbackDisabled: return "FeedbackDisabled";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::CorruptLog: return "CorruptLog";
        case ErrorCode::CorruptGraphFile: return "CorruptGraphFile";
        case ErrorCode::IntegrityViolation: return "IntegrityViolation";
        case ErrorCode::MalformedInput: return "MalformedInput";
    }
    return "Unknown";
}

}  // namespace ctxgraph
