#include "ckgen/rational.hpp"

namespace ckgen {

Rational make_rational(long num, long den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational dyadic(unsigned k) {
  mpz_class den = 1;
  den <<= k;
  Rational q(mpz_class(1), den);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

double to_double(const Rational& q) { return q.get_d(); }

std::string to_string(const QComplex& z) {
  if (sgn(z.im) == 0) return z.re.get_str();
  if (sgn(z.re) == 0) return z.im.get_str() + "i";
  std::string s = z.re.get_str();
  s += sgn(z.im) > 0 ? "+" : "-";
  Rational mag = abs(z.im);
  s += mag.get_str() + "i";
  return s;
}

}  // namespace ckgen
