#pragma once

#include "congmod/dvr.hpp"
#include "congmod/fp.hpp"
#include "congmod/rational.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// Explicit presentation of the ring of integers O_L of a finite extension
// L/E. Only the two shapes needed for congruence witnesses are admitted:
// unramified (monic lift of an irreducible residue polynomial) and totally
// ramified (Eisenstein polynomial). Mixed extensions are out of scope.
enum class ExtKind { trivial, unramified, eisenstein };

class Extension {
public:
  // Trivial extension O_L = O.
  explicit Extension(const Dvr& dvr) : dvr_(dvr), kind_(ExtKind::trivial), defining_{} {}

  // defining: coefficients (c_0, ..., c_{d-1}) of the monic polynomial
  // x^d + c_{d-1} x^{d-1} + ... + c_0 over O.
  Extension(const Dvr& dvr, ExtKind kind, std::vector<Rat> defining)
      : dvr_(dvr), kind_(kind), defining_(std::move(defining)) {
    if (kind_ == ExtKind::trivial) {
      if (!defining_.empty()) throw std::invalid_argument("trivial extension takes no polynomial");
      return;
    }
    if (defining_.empty()) throw std::invalid_argument("extension needs a defining polynomial");
    for (const Rat& c : defining_)
      if (!dvr_.is_integral(c)) throw std::invalid_argument("defining polynomial not over O");
    if (kind_ == ExtKind::unramified) {
      fp::Poly rp;
      for (const Rat& c : defining_) rp.push_back(fp::reduce_rat(c, dvr_.prime()));
      rp.push_back(Int(1));
      if (!fp::poly_irreducible(rp, dvr_.prime()))
        throw std::invalid_argument("unramified presentation: residue polynomial not irreducible");
    } else {
      if (!(dvr_.valuation(defining_[0]) == Valuation::finite(1)))
        throw std::invalid_argument("Eisenstein presentation: constant term must have valuation 1");
      for (std::size_t i = 1; i < defining_.size(); ++i)
        if (defining_[i] != 0 && dvr_.valuation(defining_[i]).value() < 1)
          throw std::invalid_argument("Eisenstein presentation: coefficients must lie in (p)");
    }
  }

  const Dvr& dvr() const { return dvr_; }
  ExtKind kind() const { return kind_; }
  std::size_t degree() const { return kind_ == ExtKind::trivial ? 1 : defining_.size(); }
  const std::vector<Rat>& defining() const { return defining_; }

  long ramification_index() const {
    return kind_ == ExtKind::eisenstein ? static_cast<long>(degree()) : 1;
  }
  long residue_degree() const {
    return kind_ == ExtKind::unramified ? static_cast<long>(degree()) : 1;
  }

  std::string describe() const {
    switch (kind_) {
      case ExtKind::trivial:
        return "trivial";
      case ExtKind::unramified:
        return "unramified deg " + std::to_string(degree());
      case ExtKind::eisenstein:
        return "ramified deg " + std::to_string(degree());
    }
    return "";
  }

private:
  Dvr dvr_;
  ExtKind kind_;
  std::vector<Rat> defining_;
};

// Element of O_L in the basis 1, t, ..., t^{d-1} of the presented generator.
struct ExtScalar {
  std::vector<Rat> coeffs;

  static ExtScalar from_rat(const Rat& x, const Extension& ext) {
    ExtScalar s;
    s.coeffs.assign(ext.degree(), Rat(0));
    s.coeffs[0] = x;
    return s;
  }

  bool is_zero() const {
    for (const Rat& c : coeffs)
      if (c != 0) return false;
    return true;
  }

  friend bool operator==(const ExtScalar& a, const ExtScalar& b) { return a.coeffs == b.coeffs; }
};

inline ExtScalar ext_add(const ExtScalar& a, const ExtScalar& b) {
  ExtScalar r = a;
  for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += b.coeffs[i];
  return r;
}

inline ExtScalar ext_sub(const ExtScalar& a, const ExtScalar& b) {
  ExtScalar r = a;
  for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] -= b.coeffs[i];
  return r;
}

inline ExtScalar ext_mul(const ExtScalar& a, const ExtScalar& b, const Extension& ext) {
  std::size_t d = ext.degree();
  std::vector<Rat> prod(2 * d, Rat(0));
  for (std::size_t i = 0; i < d; ++i) {
    if (a.coeffs[i] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) prod[i + j] += a.coeffs[i] * b.coeffs[j];
  }
  // Reduce by t^d = -(c_{d-1} t^{d-1} + ... + c_0).
  for (std::size_t k = 2 * d - 1; k >= d && k < prod.size(); --k) {
    if (prod[k] == 0) continue;
    Rat lead = prod[k];
    prod[k] = 0;
    for (std::size_t i = 0; i < d; ++i) prod[k - d + i] -= lead * ext.defining()[i];
  }
  ExtScalar r;
  r.coeffs.assign(prod.begin(), prod.begin() + d);
  return r;
}

// Valuation normalized so that v_L(pi_L) = 1: for unramified presentations
// pi_L = p and v_L = min_i v_p(a_i); for Eisenstein presentations pi_L = t and
// v_L(sum a_i t^i) = min_i (e * v_p(a_i) + i).
inline Valuation ext_valuation(const ExtScalar& x, const Extension& ext) {
  if (x.is_zero()) return Valuation::infinity();
  const Dvr& dvr = ext.dvr();
  if (ext.kind() == ExtKind::eisenstein) {
    long e = ext.ramification_index();
    Valuation best = Valuation::infinity();
    for (std::size_t i = 0; i < x.coeffs.size(); ++i) {
      if (x.coeffs[i] == 0) continue;
      Valuation v = Valuation::finite(e * dvr.valuation(x.coeffs[i]).value() + static_cast<long>(i));
      if (v < best) best = v;
    }
    return best;
  }
  Valuation best = Valuation::infinity();
  for (const Rat& c : x.coeffs) {
    if (c == 0) continue;
    Valuation v = dvr.valuation(c);
    if (v < best) best = v;
  }
  return best;
}

}  // namespace congmod
