#pragma once

#include <gmpxx.h>

#include <cassert>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace congmod {

using Int = mpz_class;
using Rat = mpq_class;

// p-adic valuation value: a (possibly negative) integer, or +infinity for 0.
class Valuation {
public:
  static Valuation infinity() { return Valuation(0, true); }
  static Valuation finite(long v) { return Valuation(v, false); }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }

  long value() const {
    assert(!infinite_);
    return v_;
  }

  // Finite value clamped for reports: infinity prints as "inf".
  std::string str() const { return infinite_ ? "inf" : std::to_string(v_); }

  Valuation operator+(const Valuation& o) const {
    if (infinite_ || o.infinite_) return infinity();
    return finite(v_ + o.v_);
  }

  friend bool operator==(const Valuation& a, const Valuation& b) {
    if (a.infinite_ != b.infinite_) return false;
    return a.infinite_ || a.v_ == b.v_;
  }

  friend bool operator<(const Valuation& a, const Valuation& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.v_ < b.v_;
  }
  friend bool operator<=(const Valuation& a, const Valuation& b) { return a < b || a == b; }
  friend bool operator>(const Valuation& a, const Valuation& b) { return b < a; }
  friend bool operator>=(const Valuation& a, const Valuation& b) { return b <= a; }

private:
  Valuation(long v, bool inf) : v_(v), infinite_(inf) {}
  long v_;
  bool infinite_;
};

inline Rat make_rat(const Int& num, const Int& den) {
  if (den == 0) throw std::invalid_argument("make_rat: zero denominator");
  Rat q(num, den);
  q.canonicalize();
  return q;
}

inline Rat make_rat(long num, long den = 1) { return make_rat(Int(num), Int(den)); }

inline Valuation int_valuation(const Int& n, const Int& p) {
  if (n == 0) return Valuation::infinity();
  Int m = abs(n);
  long v = 0;
  Int q, r;
  while (true) {
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(), p.get_mpz_t());
    if (r != 0) break;
    m = q;
    ++v;
  }
  return Valuation::finite(v);
}

inline Valuation rat_valuation(const Rat& x, const Int& p) {
  if (x == 0) return Valuation::infinity();
  Valuation vn = int_valuation(x.get_num(), p);
  Valuation vd = int_valuation(x.get_den(), p);
  return Valuation::finite(vn.value() - vd.value());
}

inline Int pow_int(const Int& base, unsigned long e) {
  Int r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

// p^e for possibly negative e.
inline Rat pow_rat(const Int& p, long e) {
  if (e >= 0) return Rat(pow_int(p, static_cast<unsigned long>(e)));
  return make_rat(Int(1), pow_int(p, static_cast<unsigned long>(-e)));
}

// x = p^v * unit; returns the unit part (x / p^v). x must be nonzero.
inline Rat unit_part(const Rat& x, const Int& p) {
  assert(x != 0);
  long v = rat_valuation(x, p).value();
  return x / pow_rat(p, v);
}

// Canonical "a/b" form, denominator always present and positive.
inline std::string rat_to_string(const Rat& x) {
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

inline std::optional<Rat> rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      Int n(s);
      return Rat(n);
    }
    Int n(s.substr(0, slash));
    Int d(s.substr(slash + 1));
    if (d == 0) return std::nullopt;
    return make_rat(n, d);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

inline bool is_prime(const Int& n) {
  return mpz_probab_prime_p(n.get_mpz_t(), 40) != 0;
}

}  // namespace congmod
