#pragma once

#include "congmod/rational.hpp"

#include <cassert>
#include <vector>

namespace congmod {

// Small dense linear algebra and polynomial arithmetic over F_p, used by the
// residue-field certificates (locality, residual eigensystems).
namespace fp {

inline Int reduce(const Int& x, const Int& p) {
  Int r = x % p;
  if (r < 0) r += p;
  return r;
}

// Reduction of an O-element (denominator prime to p) to F_p.
inline Int reduce_rat(const Rat& x, const Int& p) {
  Int num = reduce(x.get_num(), p);
  Int den = reduce(x.get_den(), p);
  Int inv;
  int ok = mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), p.get_mpz_t());
  assert(ok);
  (void)ok;
  return reduce(num * inv, p);
}

using Vec = std::vector<Int>;
using Mat = std::vector<Vec>;  // row-major

inline Mat zero(std::size_t r, std::size_t c) { return Mat(r, Vec(c, Int(0))); }

inline Mat identity(std::size_t n) {
  Mat m = zero(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

inline std::size_t rank(Mat a, const Int& p) {
  std::size_t r = a.size();
  if (r == 0) return 0;
  std::size_t c = a[0].size();
  std::size_t rk = 0;
  for (std::size_t col = 0; col < c && rk < r; ++col) {
    std::size_t piv = rk;
    while (piv < r && a[piv][col] == 0) ++piv;
    if (piv == r) continue;
    std::swap(a[rk], a[piv]);
    Int inv;
    mpz_invert(inv.get_mpz_t(), a[rk][col].get_mpz_t(), p.get_mpz_t());
    for (std::size_t j = col; j < c; ++j) a[rk][j] = reduce(a[rk][j] * inv, p);
    for (std::size_t i = 0; i < r; ++i) {
      if (i == rk || a[i][col] == 0) continue;
      Int f = a[i][col];
      for (std::size_t j = col; j < c; ++j) a[i][j] = reduce(a[i][j] - f * a[rk][j], p);
    }
    ++rk;
  }
  return rk;
}

// Polynomials over F_p, coefficient vector low degree first.
using Poly = std::vector<Int>;

inline void trim(Poly& f) {
  while (!f.empty() && f.back() == 0) f.pop_back();
}

inline Poly poly_mod(Poly a, const Poly& f, const Int& p) {
  trim(a);
  assert(!f.empty() && f.back() == 1);  // monic modulus
  std::size_t d = f.size() - 1;
  while (a.size() > d) {
    Int lead = a.back();
    std::size_t shift = a.size() - 1 - d;
    for (std::size_t i = 0; i <= d; ++i)
      a[shift + i] = reduce(a[shift + i] - lead * f[i], p);
    trim(a);
  }
  return a;
}

inline Poly poly_mul(const Poly& a, const Poly& b, const Poly& f, const Int& p) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1, Int(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] = reduce(c[i + j] + a[i] * b[j], p);
  return poly_mod(c, f, p);
}

inline Poly poly_powmod(Poly base, Int e, const Poly& f, const Int& p) {
  Poly result = {Int(1)};
  base = poly_mod(base, f, p);
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) result = poly_mul(result, base, f, p);
    base = poly_mul(base, base, f, p);
    e /= 2;
  }
  return result;
}

inline Poly poly_gcd(Poly a, Poly b, const Int& p) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    // a mod b with b made monic first
    Int inv;
    mpz_invert(inv.get_mpz_t(), b.back().get_mpz_t(), p.get_mpz_t());
    Poly bm = b;
    for (auto& x : bm) x = reduce(x * inv, p);
    Poly r = poly_mod(a, bm, p);
    a = b;
    b = r;
  }
  return a;
}

// Irreducibility of a monic polynomial over F_p: x^{p^d} = x mod f together
// with gcd(x^{p^{d/l}} - x, f) = 1 for every prime l dividing d.
inline bool poly_irreducible(const Poly& f, const Int& p) {
  Poly g = f;
  trim(g);
  if (g.size() < 2) return false;
  std::size_t d = g.size() - 1;
  if (d == 1) return true;
  Poly x = {Int(0), Int(1)};
  Int pd = pow_int(p, d);
  Poly xq = poly_powmod(x, pd, g, p);
  Poly diff = xq;
  diff.resize(std::max<std::size_t>(diff.size(), 2), Int(0));
  diff[1] = reduce(diff[1] - 1, p);
  trim(diff);
  if (!diff.empty()) return false;
  for (std::size_t l = 2; l <= d; ++l) {
    if (d % l != 0) continue;
    bool l_prime = true;
    for (std::size_t m = 2; m * m <= l; ++m)
      if (l % m == 0) l_prime = false;
    if (!l_prime) continue;
    Poly xe = poly_powmod(x, pow_int(p, d / l), g, p);
    xe.resize(std::max<std::size_t>(xe.size(), 2), Int(0));
    xe[1] = reduce(xe[1] - 1, p);
    trim(xe);
    Poly h = poly_gcd(g, xe, p);
    trim(h);
    if (h.size() != 1) return false;
  }
  return true;
}

// All roots in F_p by direct scan; intended for small p.
inline std::vector<Int> poly_roots(const Poly& f, const Int& p) {
  std::vector<Int> roots;
  for (Int a = 0; a < p; ++a) {
    Int acc = 0, pw = 1;
    for (const Int& c : f) {
      acc = reduce(acc + c * pw, p);
      pw = reduce(pw * a, p);
    }
    if (acc == 0) roots.push_back(a);
  }
  return roots;
}

}  // namespace fp
}  // namespace congmod
