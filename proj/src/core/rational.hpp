#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bmx {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Exact conversion: every finite double is a dyadic rational.
inline Rat rat_of_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("rat_of_double: non-finite value");
  if (x == 0.0) return Rat(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  BigInt num = static_cast<long long>(std::ldexp(m, 53));
  exp -= 53;
  Rat r(num);
  if (exp >= 0) {
    r *= Rat(BigInt(1) << exp);
  } else {
    r /= Rat(BigInt(1) << (-exp));
  }
  return r;
}

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline BigInt rat_num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline BigInt rat_den(const Rat& r) { return boost::multiprecision::denominator(r); }

inline BigInt rat_floor(const Rat& r) {
  BigInt q = rat_num(r) / rat_den(r);  // truncates toward zero
  if (Rat(q) > r) q -= 1;
  return q;
}

// Nearest integer; ties round away from zero.
inline BigInt rat_round(const Rat& r) {
  BigInt n = rat_num(r), d = rat_den(r);
  BigInt q = (2 * n + (n < 0 ? -d : d)) / (2 * d);
  return q;
}

inline bool rat_is_integer(const Rat& r) { return rat_den(r) == 1; }

inline std::string rat_to_string(const Rat& r) {
  std::string s = rat_num(r).str();
  if (rat_den(r) != 1) s += "/" + rat_den(r).str();
  return s;
}

// Accepts "a", "a/b" and plain decimals like "-1.25".
inline Rat rat_parse(const std::string& s) {
  auto bad = [&]() { throw std::invalid_argument("rat_parse: malformed number '" + s + "'"); };
  if (s.empty()) bad();
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt n(s.substr(0, slash)), d(s.substr(slash + 1));
      if (d == 0) bad();
      return Rat(n, d);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rat(BigInt(s));
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.empty()) return Rat(BigInt(head.empty() ? "0" : head));
    bool neg = !head.empty() && head[0] == '-';
    BigInt ipart(head.empty() || head == "-" || head == "+" ? "0" : head);
    BigInt fpart(tail);
    BigInt den = 1;
    for (size_t i = 0; i < tail.size(); ++i) den *= 10;
    Rat r = Rat(ipart) + (neg ? -Rat(fpart, den) : Rat(fpart, den));
    return r;
  } catch (const std::exception&) {
    bad();
  }
  return Rat(0);
}

}  // namespace bmx
