#pragma once

#include "congmod/algebra.hpp"
#include "congmod/module.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace congmod {

// O-bilinear pairing M1 x M2 -> O between a T-module and a T~-module,
// represented by its Gram matrix on the chosen bases: [x, y] = x G y^T on
// coordinate rows. Base change acts covariantly on G.
struct PairingInstance {
  FlatAlgebra t1;
  FlatAlgebra t2;
  HeckeModule m1;
  HeckeModule m2;
  QMat gram;
  Character lambda;
  Character lambda_tilde;
};

struct PairingCertificate {
  bool perfect = false;
  bool orthogonal_left = false;   // [e M1, (1-e~) M2] = 0
  bool orthogonal_right = false;  // [(1-e) M1, e~ M2] = 0

  bool all_pass() const { return perfect && orthogonal_left && orthogonal_right; }

  std::string summary() const {
    auto yn = [](bool b) { return b ? "pass" : "fail"; };
    return std::string("perfect=") + yn(perfect) + " orth_left=" + yn(orthogonal_left) +
           " orth_right=" + yn(orthogonal_right);
  }
};

namespace detail {

inline QMat idempotent_action(const FlatAlgebra& t, const HeckeModule& m,
                              const Character& lam) {
  SplitData split = split_at_character(t, lam);
  QMat e(m.rank(), m.rank());
  for (std::size_t j = 0; j < t.rank(); ++j)
    if (split.idempotent[j] != 0) e = e + m.action[j] * split.idempotent[j];
  return e;
}

// val_p(det) via the elementary divisor chain; nullopt when singular.
inline std::optional<long> det_valuation(const QMat& a, const Dvr& dvr) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det_valuation: matrix not square");
  SmithDecomposition s = smith_normal_form(a, dvr);
  if (s.rank != a.rows()) return std::nullopt;
  return sum_exponents(s.divisor_valuations);
}

}  // namespace detail

// Exact check of the duality-transfer hypotheses: perfectness of the Gram
// matrix and both orthogonality conditions between the idempotent blocks.
inline PairingCertificate verify_pairing_hypotheses(const PairingInstance& p) {
  const Dvr& dvr = p.t1.dvr();
  if (p.gram.rows() != p.m1.rank() || p.gram.cols() != p.m2.rank())
    throw std::invalid_argument("verify_pairing_hypotheses: gram shape mismatch");
  if (p.gram.rows() != p.gram.cols())
    throw std::invalid_argument("verify_pairing_hypotheses: gram not square");

  PairingCertificate cert;
  auto dv = detail::det_valuation(p.gram, dvr);
  cert.perfect = dvr.matrix_integral(p.gram) && dv.has_value() && *dv == 0;

  QMat e1 = detail::idempotent_action(p.t1, p.m1, p.lambda);
  QMat e2 = detail::idempotent_action(p.t2, p.m2, p.lambda_tilde);
  QMat id1 = QMat::identity(p.m1.rank());
  QMat id2 = QMat::identity(p.m2.rank());
  cert.orthogonal_left = (e1 * p.gram * (id2 - e2).transpose()).is_zero();
  cert.orthogonal_right = ((id1 - e1) * p.gram * e2.transpose()).is_zero();
  return cert;
}

// Under the verified hypotheses the congruence ideals transfer across the
// pairing: returns both module exponents, asserts they agree, and checks the
// induced E/O pairing on the congruence modules by the determinant-valuation
// criterion on representative bases.
inline std::pair<long, long> congruence_module_pairing_order(const PairingInstance& p) {
  PairingCertificate cert = verify_pairing_hypotheses(p);
  if (!cert.all_pass())
    throw std::invalid_argument("congruence_module_pairing_order: hypotheses fail: " +
                                cert.summary());
  const Dvr& dvr = p.t1.dvr();
  CongruenceData c1 = congruence_module(p.t1, p.m1, p.lambda);
  CongruenceData c2 = congruence_module(p.t2, p.m2, p.lambda_tilde);
  if (c1.eta_exponent != c2.eta_exponent)
    throw std::logic_error(
        "duality transfer mismatch: congruence ideals differ across a pairing "
        "satisfying the orthogonality hypotheses");

  // Induced pairing eM1 x eM2 -> E on representative bases; it descends to a
  // perfect C_0 x C_0 -> E/O pairing exactly when val(det) = -eta.
  if (c1.m_upper_lambda.rank() != c2.m_upper_lambda.rank())
    throw std::logic_error("duality transfer mismatch: congruence modules of unequal rank");
  if (c1.m_upper_lambda.rank() > 0) {
    QMat rep = c1.m_upper_lambda.basis * p.gram * c2.m_upper_lambda.basis.transpose();
    auto dv = detail::det_valuation(rep, dvr);
    if (!dv.has_value() || *dv != -c1.eta_exponent)
      throw std::logic_error(
          "induced E/O pairing on congruence modules is degenerate");
  }
  return {c1.eta_exponent, c2.eta_exponent};
}

// Normalize a rank-one lattice generator: scale by the unit making the first
// coordinate of minimal valuation a positive power of p. The valuation of the
// pairing value is unit-invariant; normalization only pins golden outputs.
inline std::vector<Rat> normalized_generator(const Lattice& l, const Dvr& dvr) {
  if (l.rank() != 1) throw std::invalid_argument("normalized_generator: lattice rank != 1");
  std::vector<Rat> v = l.basis.row(0);
  Valuation best = Valuation::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    Valuation val = dvr.valuation(v[i]);
    if (val < best) {
      best = val;
      arg = i;
    }
  }
  if (best.is_infinite()) throw std::invalid_argument("normalized_generator: zero generator");
  Rat u = unit_part(v[arg], dvr.prime());
  for (Rat& x : v) x /= u;
  return v;
}

// val_p([delta_1, delta_2]) for O-generators of the two rank-one kernels;
// asserts the value equals the congruence-ideal exponent on both sides.
inline long delta_pairing(const PairingInstance& p) {
  const Dvr& dvr = p.t1.dvr();
  Lattice k1 = kernel_fixed_part(p.t1, p.m1, p.lambda);
  Lattice k2 = kernel_fixed_part(p.t2, p.m2, p.lambda_tilde);
  if (k1.rank() != 1 || k2.rank() != 1)
    throw std::invalid_argument("delta_pairing: kernels are not both of rank one");
  std::vector<Rat> d1 = normalized_generator(k1, dvr);
  std::vector<Rat> d2 = normalized_generator(k2, dvr);
  Rat value = dot(row_times_mat(d1, p.gram), d2);
  Valuation v = dvr.valuation(value);
  if (v.is_infinite()) throw std::logic_error("delta_pairing: generators pair to zero");
  auto etas = congruence_module_pairing_order(p);
  if (v.value() != etas.first || v.value() != etas.second)
    throw std::logic_error(
        "duality transfer mismatch: [delta_1, delta_2] valuation differs from "
        "the congruence-ideal exponents");
  return v.value();
}

// Algebra map T -> T~ specified on bases: coords(theta(t)) = coords(t) * theta.
struct ThetaLink {
  QMat theta;
};

struct ThetaCertificate {
  bool adjoint = false;
  // Violating (t-basis, x-basis, y-basis) triple when adjointness fails.
  std::optional<std::array<std::size_t, 3>> violation;
};

inline ThetaCertificate verify_theta_adjointness(const FlatAlgebra& t1, const FlatAlgebra& t2,
                                                 const HeckeModule& m1, const HeckeModule& m2,
                                                 const QMat& gram, const ThetaLink& link) {
  const std::size_t r = t1.rank();
  if (t2.rank() != r || link.theta.rows() != r || link.theta.cols() != r)
    throw std::invalid_argument("verify_theta_adjointness: rank mismatch");
  // theta must be an O-algebra isomorphism.
  const Dvr& dvr = t1.dvr();
  auto dv = detail::det_valuation(link.theta, dvr);
  if (!dvr.matrix_integral(link.theta) || !dv.has_value() || *dv != 0)
    throw std::invalid_argument("verify_theta_adjointness: theta is not an O-isomorphism");
  std::vector<Rat> unit_image = row_times_mat(t1.unit(), link.theta);
  if (unit_image != t2.unit())
    throw std::invalid_argument("verify_theta_adjointness: theta does not preserve the unit");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      std::vector<Rat> prod(r);
      for (std::size_t k = 0; k < r; ++k) prod[k] = t1.c(i, j, k);
      std::vector<Rat> lhs = row_times_mat(prod, link.theta);
      std::vector<Rat> rhs =
          t2.multiply(link.theta.row(i), link.theta.row(j));
      if (lhs != rhs)
        throw std::invalid_argument("verify_theta_adjointness: theta not multiplicative");
    }

  ThetaCertificate cert;
  cert.adjoint = true;
  for (std::size_t j = 0; j < r && cert.adjoint; ++j) {
    // action of theta(b_j) on M2
    std::vector<Rat> image = link.theta.row(j);
    QMat a2(m2.rank(), m2.rank());
    for (std::size_t k = 0; k < r; ++k)
      if (image[k] != 0) a2 = a2 + m2.action[k] * image[k];
    QMat lhs = m1.action[j] * gram;
    QMat rhs = gram * a2.transpose();
    if (!(lhs == rhs)) {
      cert.adjoint = false;
      for (std::size_t x = 0; x < m1.rank() && cert.violation == std::nullopt; ++x)
        for (std::size_t y = 0; y < m2.rank(); ++y)
          if (lhs(x, y) != rhs(x, y)) {
            cert.violation = {j, x, y};
            break;
          }
    }
  }
  return cert;
}

}  // namespace congmod
