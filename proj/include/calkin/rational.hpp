#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace calkin {

using Rational = mpq_class;
using Integer = mpz_class;

/// Error kinds raised across the library. Domain facts that are not errors
/// (e.g. a functional undefined at a point) are reported through values.
enum class ErrorCode {
  InvalidArgument,
  ParseError,
  IncompatibleTails,
  UnboundedResult,
  NonDyadicDilation,
  UnrepresentableRightTail,
  NonClosedForm,
  NonRepresentable,
  NumericFailure,
  TieAtThreshold,
  NotTileable,
  DivergentIntegral,
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IncompatibleTails: return "IncompatibleTails";
    case ErrorCode::UnboundedResult: return "UnboundedResult";
    case ErrorCode::NonDyadicDilation: return "NonDyadicDilation";
    case ErrorCode::UnrepresentableRightTail: return "UnrepresentableRightTail";
    case ErrorCode::NonClosedForm: return "NonClosedForm";
    case ErrorCode::NonRepresentable: return "NonRepresentable";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::TieAtThreshold: return "TieAtThreshold";
    case ErrorCode::NotTileable: return "NotTileable";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// Parses "p/q", "p", or a decimal such as "-1.25" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error(ErrorCode::ParseError, "empty rational");
  auto dot = s.find('.');
  auto exp = s.find_first_of("eE");
  if (dot != std::string::npos || exp != std::string::npos) {
    // decimal literal: split mantissa/exponent and build exactly
    std::string mant = s.substr(0, exp);
    long e10 = 0;
    if (exp != std::string::npos) {
      try {
        e10 = std::stol(s.substr(exp + 1));
      } catch (...) {
        throw Error(ErrorCode::ParseError, "bad exponent in '" + s + "'");
      }
    }
    bool neg = !mant.empty() && mant[0] == '-';
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) mant.erase(0, 1);
    auto d = mant.find('.');
    std::string digits = mant;
    if (d != std::string::npos) {
      e10 -= static_cast<long>(mant.size() - d - 1);
      digits.erase(d, 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::ParseError, "bad decimal '" + s + "'");
    Integer num(digits, 10);
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(e10 < 0 ? -e10 : e10));
    Rational q = e10 >= 0 ? Rational(num * scale) : Rational(num, scale);
    q.canonicalize();
    return neg ? Rational(-q) : q;
  }
  Rational q;
  if (q.set_str(s, 10) != 0) throw Error(ErrorCode::ParseError, "bad rational '" + s + "'");
  if (q.get_den() == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + s + "'");
  q.canonicalize();
  return q;
}

/// Serializes as "p/q" (always with an explicit denominator).
inline std::string to_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline Rational pow(const Rational& base, long exponent) {
  if (exponent == 0) return Rational(1);
  if (exponent < 0) {
    if (base == 0) throw Error(ErrorCode::InvalidArgument, "0 to a negative power");
    Rational inv = 1 / base;
    return pow(inv, -exponent);
  }
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), static_cast<unsigned long>(exponent));
  mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), static_cast<unsigned long>(exponent));
  r.canonicalize();
  return r;
}

inline Rational pow2(long k) { return pow(Rational(2), k); }

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

inline int sign(const Rational& q) { return sgn(q); }

inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }
inline Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }

inline double to_double(const Rational& q) { return q.get_d(); }

/// Exact conversion of a finite double.
inline Rational from_double(double v) {
  Rational q(v);
  q.canonicalize();
  return q;
}

/// If q is an exact power of two, returns the exponent.
inline std::optional<long> exact_log2(const Rational& q) {
  if (q <= 0) return std::nullopt;
  const Integer& n = q.get_num();
  const Integer& d = q.get_den();
  if (d == 1) {
    if (mpz_popcount(n.get_mpz_t()) != 1) return std::nullopt;
    return static_cast<long>(mpz_scan1(n.get_mpz_t(), 0));
  }
  if (n != 1 || mpz_popcount(d.get_mpz_t()) != 1) return std::nullopt;
  return -static_cast<long>(mpz_scan1(d.get_mpz_t(), 0));
}

/// Largest k with 2^k <= q (q > 0).
inline long floor_log2(const Rational& q) {
  if (q <= 0) throw Error(ErrorCode::InvalidArgument, "floor_log2 of nonpositive value");
  long k = static_cast<long>(mpz_sizeinbase(q.get_num_mpz_t(), 2)) -
           static_cast<long>(mpz_sizeinbase(q.get_den_mpz_t(), 2));
  while (pow2(k) > q) --k;
  while (pow2(k + 1) <= q) ++k;
  return k;
}

/// Smallest k with 2^k >= q (q > 0).
inline long ceil_log2(const Rational& q) {
  long k = floor_log2(q);
  return pow2(k) == q ? k : k + 1;
}

/// A rational or +/-infinity. Used for measures and integrals.
class Extended {
 public:
  Extended() = default;
  Extended(const Rational& v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  Extended(long v) : value_(v) {}             // NOLINT(google-explicit-constructor)
  static Extended infinity(int sign = 1) {
    Extended e;
    e.inf_ = sign < 0 ? -1 : 1;
    return e;
  }

  bool is_infinite() const noexcept { return inf_ != 0; }
  bool is_finite() const noexcept { return inf_ == 0; }
  int infinity_sign() const noexcept { return inf_; }
  const Rational& value() const {
    if (inf_ != 0) throw Error(ErrorCode::DivergentIntegral, "value of an infinite quantity");
    return value_;
  }

  friend Extended operator+(const Extended& a, const Extended& b) {
    if (a.inf_ != 0 && b.inf_ != 0 && a.inf_ != b.inf_)
      throw Error(ErrorCode::DivergentIntegral, "inf - inf");
    if (a.inf_ != 0) return a;
    if (b.inf_ != 0) return b;
    return Extended(a.value_ + b.value_);
  }
  friend Extended operator-(const Extended& a) {
    if (a.inf_ != 0) return infinity(-a.inf_);
    return Extended(Rational(-a.value_));
  }
  friend Extended operator-(const Extended& a, const Extended& b) { return a + (-b); }
  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.inf_ != 0 || b.inf_ != 0) return a.inf_ == b.inf_;
    return a.value_ == b.value_;
  }
  friend bool operator<(const Extended& a, const Extended& b) {
    if (a.inf_ != b.inf_) return a.inf_ < b.inf_;
    if (a.inf_ != 0) return false;
    return a.value_ < b.value_;
  }
  friend bool operator<=(const Extended& a, const Extended& b) { return !(b < a); }
  friend bool operator>(const Extended& a, const Extended& b) { return b < a; }
  friend bool operator>=(const Extended& a, const Extended& b) { return !(a < b); }

  std::string str() const {
    if (inf_ > 0) return "inf";
    if (inf_ < 0) return "-inf";
    return to_string(value_);
  }

 private:
  Rational value_{0};
  int inf_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Extended& e) { return os << e.str(); }

}  // namespace calkin
