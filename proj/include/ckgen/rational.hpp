#pragma once

#include <complex>
#include <string>

#include <gmpxx.h>

namespace ckgen {

using Rational = mpq_class;

/// Builds the canonical rational num/den.
Rational make_rational(long num, long den = 1);

/// 2^-k as an exact rational.
Rational dyadic(unsigned k);

std::string to_string(const Rational& q);
double to_double(const Rational& q);

/// Complex number with exact rational parts.
struct QComplex {
  Rational re;
  Rational im;

  QComplex() : re(0), im(0) {}
  QComplex(Rational r) : re(std::move(r)), im(0) {}  // NOLINT: implicit by design of scalars
  QComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  QComplex conj() const { return {re, -im}; }
  std::complex<double> to_complex() const { return {re.get_d(), im.get_d()}; }

  QComplex& operator+=(const QComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  QComplex& operator-=(const QComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
  friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
  friend QComplex operator-(const QComplex& a) { return {-a.re, -a.im}; }
  friend QComplex operator*(const QComplex& a, const QComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const QComplex& a, const QComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
};

std::string to_string(const QComplex& z);

}  // namespace ckgen
