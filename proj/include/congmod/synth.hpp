#pragma once

#include "congmod/algebra.hpp"
#include "congmod/duality.hpp"
#include "congmod/module.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

namespace congmod {

// Reproducible fixture generation: split local algebras, modules over them,
// and dual pairs satisfying the duality-transfer hypotheses by construction.
// Everything is validated before being handed out.
namespace synth {

class Rng {
public:
  explicit Rng(unsigned long seed) : eng_(seed) {}

  long uniform(long lo, long hi) {
    std::uniform_int_distribution<long> d(lo, hi);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

// Random reduced local split O-algebra of rank <= max_rank presented by a
// rational eigensystem: all rows congruent to a base row mod p (locality),
// pairwise distinct (reducedness, full rank).
inline FlatAlgebra random_split_algebra(const Dvr& dvr, std::size_t max_rank, Rng& rng) {
  std::size_t r = static_cast<std::size_t>(rng.uniform(1, static_cast<long>(max_rank)));
  std::size_t g = static_cast<std::size_t>(rng.uniform(1, 3));
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::vector<long>> rows(r, std::vector<long>(g));
    std::vector<long> base(g);
    for (auto& x : base) x = rng.uniform(-20, 20);
    long p = dvr.prime().get_si();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < g; ++j) {
        if (i == 0) {
          rows[i][j] = base[j];
        } else {
          long depth = rng.uniform(1, 3);
          long pk = 1;
          for (long d = 0; d < depth; ++d) pk *= p;
          rows[i][j] = base[j] + pk * rng.uniform(-9, 9);
        }
      }
    bool distinct = true;
    for (std::size_t i = 0; i < r && distinct; ++i)
      for (std::size_t j = i + 1; j < r; ++j)
        if (rows[i] == rows[j]) {
          distinct = false;
          break;
        }
    if (!distinct) continue;

    EigensystemPresentation pres{Extension(dvr), {}};
    for (const auto& row : rows) {
      std::vector<ExtScalar> er;
      for (long v : row) er.push_back(ExtScalar::from_rat(Rat(v), pres.ext));
      pres.rows.push_back(er);
    }
    FlatAlgebra t = algebra_from_eigensystem(pres);
    if (t.rank() != r) continue;
    if (!validate_algebra(t).all_pass()) continue;
    return t;
  }
  throw std::logic_error("random_split_algebra: failed to generate a valid instance");
}

namespace detail {

// Character labels of the diagonal ambient coordinates for given multiplicities.
inline std::vector<std::size_t> ambient_labels(const std::vector<std::size_t>& mult) {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < mult.size(); ++c)
    for (std::size_t k = 0; k < mult[c]; ++k) labels.push_back(c);
  return labels;
}

// Diagonal action of basis element b_s on the ambient space.
inline QMat diagonal_action(const FlatAlgebra& t, const std::vector<std::size_t>& labels,
                            std::size_t s) {
  const SplitPresentation& sp = *t.split_presentation;
  QMat d(labels.size(), labels.size());
  for (std::size_t a = 0; a < labels.size(); ++a)
    d(a, a) = sp.char_on_basis[labels[a]][s].coeffs[0];
  return d;
}

inline QMat random_unimodular(std::size_t n, Rng& rng) {
  QMat p = QMat::identity(n);
  long ops = static_cast<long>(2 * n) + 2;
  for (long o = 0; o < ops; ++o) {
    std::size_t i = static_cast<std::size_t>(rng.uniform(0, static_cast<long>(n) - 1));
    std::size_t j = static_cast<std::size_t>(rng.uniform(0, static_cast<long>(n) - 1));
    if (i == j) continue;
    long c = rng.uniform(-2, 2);
    for (std::size_t k = 0; k < n; ++k) p(i, k) += Rat(c) * p(j, k);
  }
  return p;
}

inline QMat inverse(const QMat& p, const Dvr& dvr) {
  auto inv = solve_left(p, QMat::identity(p.rows()), dvr);
  if (!inv) throw std::logic_error("inverse: singular matrix");
  return *inv;
}

}  // namespace detail

// A T-stable lattice inside the diagonal ambient space, generated by random
// integral vectors and closed under the action; presented on its own basis.
struct SynthModule {
  HeckeModule mod;                   // action in lattice-basis coordinates
  std::vector<std::size_t> labels;   // ambient char labels
};

inline SynthModule random_module(const FlatAlgebra& t, Rng& rng) {
  if (!t.split_presentation) throw std::invalid_argument("random_module: needs split algebra");
  const Dvr& dvr = t.dvr();
  std::size_t chars = t.split_presentation->char_on_basis.size();
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::size_t> mult(chars);
    for (auto& m : mult) m = static_cast<std::size_t>(rng.uniform(0, 2));
    std::vector<std::size_t> labels = detail::ambient_labels(mult);
    std::size_t m = labels.size();
    if (m == 0) continue;

    std::vector<QMat> diag;
    for (std::size_t s = 0; s < t.rank(); ++s)
      diag.push_back(detail::diagonal_action(t, labels, s));

    std::size_t gens = static_cast<std::size_t>(rng.uniform(1, static_cast<long>(m)));
    QMat rows(gens, m);
    for (std::size_t i = 0; i < gens; ++i)
      for (std::size_t j = 0; j < m; ++j) rows(i, j) = Rat(rng.uniform(-9, 9));

    Lattice lat = lattice_from_rows(rows, m, dvr);
    for (int round = 0; round < 64 && lat.rank() > 0; ++round) {
      QMat bigger = lat.basis;
      for (const QMat& d : diag) bigger = bigger.stack(lat.basis * d);
      Lattice closed = lattice_from_rows(bigger, m, dvr);
      if (closed.rank() == lat.rank() && lattice_subset(closed, lat, dvr)) break;
      lat = closed;
    }
    if (lat.rank() == 0) continue;

    std::vector<QMat> action;
    bool ok = true;
    for (const QMat& d : diag) {
      auto a = solve_left(lat.basis, lat.basis * d, dvr);
      if (!a || !dvr.matrix_integral(*a)) {
        ok = false;
        break;
      }
      action.push_back(*a);
    }
    if (!ok) continue;

    SynthModule out;
    out.mod.lattice = lat;
    out.mod.action = std::move(action);
    out.labels = labels;
    if (!validate_module(t, out.mod).all_pass()) continue;
    return out;
  }
  throw std::logic_error("random_module: failed to generate a valid instance");
}

// Builds an involutive algebra map theta from a permutation of the characters
// that preserves the row set; identity permutation gives theta = id.
inline ThetaLink theta_from_character_permutation(const FlatAlgebra& t,
                                                  const std::vector<std::size_t>& perm) {
  const SplitPresentation& sp = *t.split_presentation;
  const Dvr& dvr = t.dvr();
  std::size_t chars = sp.char_on_basis.size();
  std::size_t r = t.rank();
  // Embedding of the basis in prod O: column c of row s is char c on b_s.
  QMat embed(r, chars), permuted(r, chars);
  for (std::size_t s = 0; s < r; ++s)
    for (std::size_t c = 0; c < chars; ++c) {
      embed(s, c) = sp.char_on_basis[c][s].coeffs[0];
      permuted(s, c) = sp.char_on_basis[perm[c]][s].coeffs[0];
    }
  auto theta = solve_left(embed, permuted, dvr);
  if (!theta || !dvr.matrix_integral(*theta))
    throw std::invalid_argument("theta_from_character_permutation: permutation does not preserve T");
  return ThetaLink{*theta};
}

// Produces M2, lambda~ = lambda o theta, and a Gram matrix satisfying the
// duality-transfer hypotheses by construction: M2 is the dual lattice of M1
// under a theta-compatible block pairing on the diagonal ambient space.
inline PairingInstance construct_dual_pair(const FlatAlgebra& t, const Character& lam,
                                           unsigned long seed) {
  if (!t.split_presentation)
    throw std::invalid_argument("construct_dual_pair: needs a split presentation");
  Rng rng(seed);
  const Dvr& dvr = t.dvr();
  const SplitPresentation& sp = *t.split_presentation;
  std::size_t chars = sp.char_on_basis.size();

  // Identify lambda among the rows.
  std::size_t lam_row = chars;
  for (std::size_t c = 0; c < chars; ++c) {
    if (!sp.rational_row[c]) continue;
    bool match = true;
    for (std::size_t s = 0; s < t.rank(); ++s)
      if (sp.char_on_basis[c][s].coeffs[0] != lam.values[s]) {
        match = false;
        break;
      }
    if (match) {
      lam_row = c;
      break;
    }
  }
  if (lam_row == chars)
    throw std::invalid_argument("construct_dual_pair: lambda is not a character of T");

  for (int attempt = 0; attempt < 64; ++attempt) {
    SynthModule sm = random_module(t, rng);
    // Multiplicity of lambda must be positive for an interesting pair; retry
    // a few times, then accept whatever came (empty eigenspace is legal).
    bool lam_occurs = std::count(sm.labels.begin(), sm.labels.end(), lam_row) > 0;
    if (!lam_occurs && attempt < 8) continue;

    std::size_t m = sm.labels.size();
    // theta: identity here; permuted variants are exercised via
    // theta_from_character_permutation on symmetric algebras.
    QMat s_block(m, m);
    // Per-character unimodular blocks.
    for (std::size_t c = 0; c < chars; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t a = 0; a < m; ++a)
        if (sm.labels[a] == c) idx.push_back(a);
      if (idx.empty()) continue;
      QMat blk = detail::random_unimodular(idx.size(), rng);
      for (std::size_t x = 0; x < idx.size(); ++x)
        for (std::size_t y = 0; y < idx.size(); ++y) s_block(idx[x], idx[y]) = blk(x, y);
    }

    // Dual lattice basis: B2 = (C C^T)^{-1} C with C = B1 S, so B1 S B2^T = I.
    QMat c_mat = sm.mod.lattice.basis * s_block;
    QMat gramian = c_mat * c_mat.transpose();
    auto gram_inv = solve_left(gramian, QMat::identity(c_mat.rows()), dvr);
    if (!gram_inv) continue;
    QMat b2 = *gram_inv * c_mat;

    std::vector<QMat> action2;
    bool ok = true;
    for (std::size_t s = 0; s < t.rank(); ++s) {
      QMat d = detail::diagonal_action(t, sm.labels, s);
      auto a = solve_left(b2, b2 * d, dvr);
      if (!a || !dvr.matrix_integral(*a)) {
        ok = false;
        break;
      }
      action2.push_back(*a);
    }
    if (!ok) continue;

    HeckeModule m2;
    m2.lattice.ambient = m;
    m2.lattice.basis = b2;
    m2.action = std::move(action2);
    if (!validate_module(t, m2).all_pass()) continue;

    // Disguise both sides by unimodular basis changes.
    QMat p1 = detail::random_unimodular(sm.mod.rank(), rng);
    QMat p2 = detail::random_unimodular(m2.rank(), rng);
    QMat p1i = detail::inverse(p1, dvr);
    QMat p2i = detail::inverse(p2, dvr);
    HeckeModule m1d;
    m1d.lattice.ambient = sm.mod.lattice.ambient;
    m1d.lattice.basis = p1 * sm.mod.lattice.basis;
    for (const QMat& a : sm.mod.action) m1d.action.push_back(p1 * a * p1i);
    HeckeModule m2d;
    m2d.lattice.ambient = m2.lattice.ambient;
    m2d.lattice.basis = p2 * m2.lattice.basis;
    for (const QMat& a : m2.action) m2d.action.push_back(p2 * a * p2i);
    QMat gram = p1 * (sm.mod.lattice.basis * s_block * m2.lattice.basis.transpose()) *
                p2.transpose();

    PairingInstance out{t, t, std::move(m1d), std::move(m2d), std::move(gram), lam, lam};
    if (!verify_pairing_hypotheses(out).all_pass()) continue;
    return out;
  }
  throw std::logic_error("construct_dual_pair: failed to generate a valid instance");
}

// Negative control for the duality-transfer suite: a perfect pairing that
// violates the orthogonality hypotheses and has unequal congruence exponents.
// M1 is the fiber product acting on itself, M2 the full product lattice O x O.
inline PairingInstance orthogonality_violation_pair(const Dvr& dvr, long n) {
  std::vector<Rat> sc(8, Rat(0));
  Rat pn = dvr.uniformizer_pow(n);
  sc[0 * 4 + 0 * 2 + 0] = 1;
  sc[0 * 4 + 1 * 2 + 1] = 1;
  sc[1 * 4 + 0 * 2 + 1] = 1;
  sc[1 * 4 + 1 * 2 + 1] = pn;
  FlatAlgebra t(dvr, 2, sc, {Rat(1), Rat(0)});
  Character lam;
  lam.values = {Rat(1), Rat(0)};

  HeckeModule m1 = HeckeModule::regular(t);
  QMat a2(2, 2);
  a2(1, 1) = pn;  // t2 = (0, p^n) acting diagonally on O x O
  HeckeModule m2 = HeckeModule::abstract({QMat::identity(2), a2});
  return PairingInstance{t, t, m1, m2, QMat::identity(2), lam, lam};
}

}  // namespace synth
}  // namespace congmod
