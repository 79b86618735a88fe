#pragma once

#include "congmod/algebra.hpp"
#include "congmod/extension.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// A character lambda' congruent to lambda modulo the maximal ideal of O_L,
// witnessing eta != O. The depth is the largest k with lambda = lambda'
// mod pi_L^k on the whole algebra (checked on the basis).
struct CongruenceWitness {
  std::size_t partner_row = 0;
  Extension extension;
  std::vector<ExtScalar> values;  // lambda' on the algebra basis
  long congruence_depth = 0;
};

struct DetectResult {
  bool congruence_exists = false;
  long eta_exponent = 0;
  std::optional<CongruenceWitness> witness;
  std::string note;  // set when witness construction is unavailable
};

namespace detail {

// min over the basis of v_L(lambda(b_s) - mu(b_s)).
inline Valuation character_distance(const std::vector<ExtScalar>& a,
                                    const std::vector<ExtScalar>& b, const Extension& ext) {
  Valuation depth = Valuation::infinity();
  for (std::size_t s = 0; s < a.size(); ++s) {
    Valuation v = ext_valuation(ext_sub(a[s], b[s]), ext);
    if (v < depth) depth = v;
  }
  return depth;
}

}  // namespace detail

// All indices j != i whose row is congruent to row i mod pi_L, straight off
// the eigensystem table. Independent of the eta computation by design.
inline std::vector<std::size_t> brute_force_congruence_oracle(
    const std::vector<std::vector<ExtScalar>>& rows, std::size_t index, const Extension& ext) {
  std::vector<std::size_t> partners;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (j == index) continue;
    Valuation d = detail::character_distance(rows[index], rows[j], ext);
    if (d >= Valuation::finite(1)) partners.push_back(j);
  }
  return partners;
}

// Existence is decided by the congruence ideal alone; the witness is found by
// enumerating the other characters of T_E over the presented O_L. The two
// must agree on split inputs, and the search space is complete because a
// congruent character factors through the complement component.
inline DetectResult detect_congruence(const FlatAlgebra& t, const Character& lam) {
  DetectResult out;
  out.eta_exponent = eta_wiles(t, lam);
  out.congruence_exists = out.eta_exponent >= 1;
  if (!out.congruence_exists) return out;

  if (!t.split_presentation) {
    out.note = "splitting data unavailable: existence decided by the congruence ideal only";
    return out;
  }
  const SplitPresentation& sp = *t.split_presentation;
  const Extension& ext = sp.ext;
  std::vector<ExtScalar> lam_row(t.rank());
  for (std::size_t s = 0; s < t.rank(); ++s) lam_row[s] = ExtScalar::from_rat(lam.values[s], ext);

  std::optional<CongruenceWitness> best;
  for (std::size_t j = 0; j < sp.char_on_basis.size(); ++j) {
    bool is_lambda = true;
    for (std::size_t s = 0; s < t.rank(); ++s)
      if (!(sp.char_on_basis[j][s] == lam_row[s])) {
        is_lambda = false;
        break;
      }
    if (is_lambda) continue;
    Valuation d = detail::character_distance(lam_row, sp.char_on_basis[j], ext);
    if (d.is_infinite() || d.value() < 1) continue;
    if (!best || d.value() > best->congruence_depth) {
      CongruenceWitness w{j, ext, sp.char_on_basis[j], d.value()};
      best = std::move(w);
    }
  }
  if (!best)
    throw std::logic_error(
        "detect_congruence: eta is proper but no residually congruent character exists "
        "in the split presentation");
  out.witness = std::move(best);
  return out;
}

// ---- Local ring presentations and the cotangent computation ---------------

// Sparse polynomial over O in g variables.
struct Monomial {
  std::vector<unsigned long> exponents;  // length g
  Rat coefficient;
};

struct Polynomial {
  std::vector<Monomial> terms;

  Rat evaluate(const std::vector<Rat>& point) const {
    Rat acc(0);
    for (const Monomial& m : terms) {
      Rat v = m.coefficient;
      for (std::size_t i = 0; i < m.exponents.size(); ++i)
        for (unsigned long e = 0; e < m.exponents[i]; ++e) v *= point[i];
      acc += v;
    }
    return acc;
  }

  Rat partial_at(std::size_t var, const std::vector<Rat>& point) const {
    Rat acc(0);
    for (const Monomial& m : terms) {
      if (var >= m.exponents.size() || m.exponents[var] == 0) continue;
      Rat v = m.coefficient * Rat(static_cast<long>(m.exponents[var]));
      for (std::size_t i = 0; i < m.exponents.size(); ++i) {
        unsigned long e = m.exponents[i] - (i == var ? 1 : 0);
        for (unsigned long k = 0; k < e; ++k) v *= point[i];
      }
      acc += v;
    }
    return acc;
  }
};

// R = O[x_1..x_g]/(relations) with theta: R -> O, x_i -> theta_point_i in (p).
struct LocalRingPresentation {
  std::size_t num_variables = 0;
  std::vector<Polynomial> relations;
  std::vector<Rat> theta_point;
};

inline void validate_presentation(const LocalRingPresentation& r, const Dvr& dvr) {
  if (r.theta_point.size() != r.num_variables)
    throw std::invalid_argument("presentation: theta point dimension mismatch");
  for (const Rat& x : r.theta_point)
    if (x != 0 && dvr.valuation(x).value() < 1)
      throw std::invalid_argument("presentation: theta point not in the maximal ideal");
  for (const Polynomial& f : r.relations)
    if (f.evaluate(r.theta_point) != 0)
      throw std::invalid_argument("presentation: relation does not vanish at theta");
}

struct CotangentOrder {
  bool infinite = false;
  long exponent = 0;
  std::vector<long> divisors;
};

// p/p^2 for p = ker theta is the cokernel of the relation Jacobian at theta:
// the linear parts of O-combinations of the relations are exactly the
// O-combinations of the generators' linear parts.
inline CotangentOrder cotangent_order(const LocalRingPresentation& r, const Dvr& dvr) {
  validate_presentation(r, dvr);
  CotangentOrder out;
  if (r.num_variables == 0) return out;
  QMat jac(r.relations.size(), r.num_variables);
  for (std::size_t i = 0; i < r.relations.size(); ++i)
    for (std::size_t j = 0; j < r.num_variables; ++j)
      jac(i, j) = r.relations[i].partial_at(j, r.theta_point);
  SmithDecomposition s = smith_normal_form(jac, dvr);
  if (s.rank < r.num_variables) {
    out.infinite = true;
    return out;
  }
  out.divisors = s.divisor_valuations;
  out.exponent = sum_exponents(out.divisors);
  return out;
}

struct SurjectionCertificate {
  bool homomorphism = false;
  bool theta_compatible = false;
  bool surjective = false;
  CotangentOrder cotangent;
  long eta_exponent = 0;
  bool inequality_holds = false;

  bool preconditions() const { return homomorphism && theta_compatible && surjective; }
};

// Evaluate a presentation polynomial inside T at given variable images.
inline std::vector<Rat> evaluate_in_algebra(const Polynomial& f, const FlatAlgebra& t,
                                            const std::vector<std::vector<Rat>>& images) {
  std::vector<Rat> acc(t.rank(), Rat(0));
  for (const Monomial& m : f.terms) {
    std::vector<Rat> v = t.unit();
    for (std::size_t i = 0; i < m.exponents.size(); ++i)
      for (unsigned long e = 0; e < m.exponents[i]; ++e) v = t.multiply(v, images[i]);
    for (std::size_t k = 0; k < t.rank(); ++k) acc[k] += m.coefficient * v[k];
  }
  return acc;
}

// Checks that x_i -> images[i] induces a surjection R ->> T with theta = lambda o f,
// then compares the cotangent order against the congruence-ideal exponent.
inline SurjectionCertificate surjection_eta_inequality(const LocalRingPresentation& r,
                                                       const FlatAlgebra& t,
                                                       const std::vector<std::vector<Rat>>& images,
                                                       const Character& lam) {
  const Dvr& dvr = t.dvr();
  validate_presentation(r, dvr);
  if (images.size() != r.num_variables)
    throw std::invalid_argument("surjection_eta_inequality: image count mismatch");

  SurjectionCertificate cert;
  cert.homomorphism = true;
  for (const Polynomial& f : r.relations) {
    std::vector<Rat> value = evaluate_in_algebra(f, t, images);
    for (const Rat& x : value)
      if (x != 0) cert.homomorphism = false;
  }
  if (!cert.homomorphism)
    throw std::invalid_argument("surjection_eta_inequality: map does not kill the relations");

  cert.theta_compatible = true;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (lam(images[i]) != r.theta_point[i]) cert.theta_compatible = false;

  // Surjectivity: the subalgebra lattice generated by 1 and the images must
  // close up to all of T.
  QMat gens(1 + images.size(), t.rank());
  gens.set_row(0, t.unit());
  for (std::size_t i = 0; i < images.size(); ++i) gens.set_row(1 + i, images[i]);
  Lattice lat = lattice_from_rows(gens, t.rank(), dvr);
  for (int round = 0; round < 64 && lat.rank() > 0; ++round) {
    QMat bigger = lat.basis;
    for (const auto& img : images) {
      QMat prod(lat.basis.rows(), t.rank());
      for (std::size_t s = 0; s < lat.basis.rows(); ++s)
        prod.set_row(s, t.multiply(lat.basis.row(s), img));
      bigger = bigger.stack(prod);
    }
    Lattice closed = lattice_from_rows(bigger, t.rank(), dvr);
    if (closed.rank() == lat.rank() && lattice_subset(closed, lat, dvr)) break;
    lat = closed;
  }
  cert.surjective = lattice_equal(lat, Lattice::standard(t.rank()), dvr);

  cert.cotangent = cotangent_order(r, dvr);
  cert.eta_exponent = eta_wiles(t, lam);
  cert.inequality_holds = cert.cotangent.infinite || cert.cotangent.exponent >= cert.eta_exponent;
  return cert;
}

}  // namespace congmod
