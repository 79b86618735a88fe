#pragma once

#include "congmod/algebra.hpp"
#include "congmod/dvr.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// A T-module that is finite free over O: a lattice together with one action
// matrix per algebra basis element, written in the coordinates of the lattice
// basis (rows act by right multiplication).
struct HeckeModule {
  Lattice lattice;
  std::vector<QMat> action;

  std::size_t rank() const { return lattice.rank(); }

  static HeckeModule abstract(std::vector<QMat> action_matrices) {
    HeckeModule m;
    std::size_t r = action_matrices.empty() ? 0 : action_matrices[0].rows();
    m.lattice = Lattice::standard(r);
    m.action = std::move(action_matrices);
    return m;
  }

  // The regular module: T acting on itself.
  static HeckeModule regular(const FlatAlgebra& t) {
    std::vector<QMat> act;
    act.reserve(t.rank());
    for (std::size_t j = 0; j < t.rank(); ++j) act.push_back(t.basis_regular_rep(j));
    return abstract(std::move(act));
  }
};

struct ModuleCertificate {
  bool shape = false;
  bool integral = false;
  bool unital = false;
  bool respects_structure = false;
  bool commuting = false;

  bool all_pass() const { return shape && integral && unital && respects_structure && commuting; }

  std::string summary() const {
    auto yn = [](bool b) { return b ? "pass" : "fail"; };
    return std::string("shape=") + yn(shape) + " integral=" + yn(integral) +
           " unital=" + yn(unital) + " structure=" + yn(respects_structure) +
           " commuting=" + yn(commuting);
  }
};

inline ModuleCertificate validate_module(const FlatAlgebra& t, const HeckeModule& m) {
  ModuleCertificate cert;
  const std::size_t r = t.rank();
  const std::size_t mr = m.rank();
  cert.shape = m.action.size() == r;
  for (const QMat& a : m.action)
    if (a.rows() != mr || a.cols() != mr) cert.shape = false;
  if (!cert.shape) return cert;

  cert.integral = true;
  for (const QMat& a : m.action)
    if (!t.dvr().matrix_integral(a)) cert.integral = false;

  QMat unit_action(mr, mr);
  for (std::size_t j = 0; j < r; ++j)
    if (t.unit()[j] != 0) unit_action = unit_action + m.action[j] * t.unit()[j];
  cert.unital = unit_action == QMat::identity(mr);

  cert.respects_structure = true;
  for (std::size_t i = 0; i < r && cert.respects_structure; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      QMat lhs = m.action[i] * m.action[j];
      QMat rhs(mr, mr);
      for (std::size_t k = 0; k < r; ++k)
        if (t.c(i, j, k) != 0) rhs = rhs + m.action[k] * t.c(i, j, k);
      if (!(lhs == rhs)) {
        cert.respects_structure = false;
        break;
      }
    }

  // Implied by the structure relation for commutative T, asserted directly.
  cert.commuting = true;
  for (std::size_t i = 0; i < r && cert.commuting; ++i)
    for (std::size_t j = i + 1; j < r; ++j)
      if (!(m.action[i] * m.action[j] == m.action[j] * m.action[i])) {
        cert.commuting = false;
        break;
      }
  return cert;
}

// M[ker lambda] = intersection of ker(act(b_i) - lambda(b_i)) with the
// lattice. As the kernel of a map between free modules it is saturated in M.
inline Lattice kernel_fixed_part(const FlatAlgebra& t, const HeckeModule& m,
                                 const Character& lam) {
  if (m.action.size() != t.rank())
    throw std::invalid_argument("kernel_fixed_part: action/algebra rank mismatch");
  const std::size_t mr = m.rank();
  QMat stacked(mr, 0);
  for (std::size_t j = 0; j < t.rank(); ++j) {
    QMat a = m.action[j];
    for (std::size_t i = 0; i < mr; ++i) a(i, i) -= lam.values[j];
    stacked = stacked.concat(a);
  }
  Lattice out;
  out.ambient = mr;
  out.basis = stacked.cols() == 0 ? QMat::identity(mr) : left_kernel(stacked, t.dvr());
  return out;
}

struct CongruenceData {
  Lattice m_lambda;        // M[ker lambda] = eM meet M
  Lattice m_upper_lambda;  // eM
  std::vector<long> elementary_divisors;
  long eta_exponent = 0;
};

// C_0(M) = eM / (eM meet M); the identity eM meet M = M[ker lambda] is
// asserted on every call as a cross-route check.
inline CongruenceData congruence_module(const FlatAlgebra& t, const HeckeModule& m,
                                        const Character& lam) {
  const Dvr& dvr = t.dvr();
  const std::size_t mr = m.rank();
  SplitData split = split_at_character(t, lam);

  QMat e_action(mr, mr);
  for (std::size_t j = 0; j < t.rank(); ++j)
    if (split.idempotent[j] != 0) e_action = e_action + m.action[j] * split.idempotent[j];
  if (!(e_action * e_action == e_action))
    throw std::logic_error("congruence_module: idempotent does not act idempotently");

  // Clear the denominator p^a of e, take the image lattice, scale back down.
  Rat scale = dvr.uniformizer_pow(split.denominator_exponent);
  Lattice image = lattice_from_rows(e_action * scale, mr, dvr);
  image.basis = image.basis * (1 / scale);

  CongruenceData out;
  out.m_upper_lambda = image;
  out.m_lambda = lattice_intersection(image, Lattice::standard(mr), dvr);

  Lattice kfp = kernel_fixed_part(t, m, lam);
  if (!lattice_equal(out.m_lambda, kfp, dvr))
    throw std::logic_error(
        "congruence-module route mismatch: eM meet M differs from M[ker lambda]");

  out.elementary_divisors = quotient_elementary_divisors(out.m_upper_lambda, out.m_lambda, dvr);
  out.eta_exponent = sum_exponents(out.elementary_divisors);
  return out;
}

inline long eta_module(const FlatAlgebra& t, const HeckeModule& m, const Character& lam) {
  return congruence_module(t, m, lam).eta_exponent;
}

// Block direct sum of two modules over the same algebra.
inline HeckeModule module_direct_sum(const HeckeModule& a, const HeckeModule& b) {
  if (a.action.size() != b.action.size())
    throw std::invalid_argument("module_direct_sum: algebra rank mismatch");
  std::size_t ra = a.rank(), rb = b.rank();
  std::vector<QMat> act;
  for (std::size_t j = 0; j < a.action.size(); ++j) {
    QMat blk(ra + rb, ra + rb);
    for (std::size_t i = 0; i < ra; ++i)
      for (std::size_t k = 0; k < ra; ++k) blk(i, k) = a.action[j](i, k);
    for (std::size_t i = 0; i < rb; ++i)
      for (std::size_t k = 0; k < rb; ++k) blk(ra + i, ra + k) = b.action[j](i, k);
    act.push_back(blk);
  }
  return HeckeModule::abstract(std::move(act));
}

}  // namespace congmod
