#pragma once

#include "congmod/dvr.hpp"
#include "congmod/extension.hpp"
#include "congmod/fp.hpp"
#include "congmod/matrix.hpp"
#include "congmod/rational.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// Values of the characters of T_E on the algebra basis, kept when T was built
// from an eigensystem. Row i is the i-th character b_s -> O_L; rationally
// valued rows are flagged so an O-valued lambda can be extracted.
struct SplitPresentation {
  Extension ext;
  std::vector<std::vector<ExtScalar>> char_on_basis;  // chars x rank
  std::vector<bool> rational_row;
};

// Finite flat local O-algebra via structure constants on an O-basis:
// b_i * b_j = sum_k c_{ijk} b_k.
class FlatAlgebra {
public:
  FlatAlgebra(Dvr dvr, std::size_t rank, std::vector<Rat> structure_constants,
              std::vector<Rat> unit)
      : dvr_(std::move(dvr)),
        rank_(rank),
        sc_(std::move(structure_constants)),
        unit_(std::move(unit)) {
    if (sc_.size() != rank_ * rank_ * rank_ || unit_.size() != rank_)
      throw std::invalid_argument("FlatAlgebra: dimension mismatch");
  }

  const Dvr& dvr() const { return dvr_; }
  std::size_t rank() const { return rank_; }
  const std::vector<Rat>& unit() const { return unit_; }

  const Rat& c(std::size_t i, std::size_t j, std::size_t k) const {
    return sc_[(i * rank_ + j) * rank_ + k];
  }
  Rat& c(std::size_t i, std::size_t j, std::size_t k) {
    return sc_[(i * rank_ + j) * rank_ + k];
  }

  std::vector<Rat> multiply(const std::vector<Rat>& x, const std::vector<Rat>& y) const {
    std::vector<Rat> z(rank_, Rat(0));
    for (std::size_t i = 0; i < rank_; ++i) {
      if (x[i] == 0) continue;
      for (std::size_t j = 0; j < rank_; ++j) {
        if (y[j] == 0) continue;
        Rat xy = x[i] * y[j];
        for (std::size_t k = 0; k < rank_; ++k) {
          if (c(i, j, k) == 0) continue;
          z[k] += xy * c(i, j, k);
        }
      }
    }
    return z;
  }

  // Matrix of multiplication by x on coordinate rows: coords(t*x) = coords(t) * R(x).
  QMat regular_rep(const std::vector<Rat>& x) const {
    QMat r(rank_, rank_);
    for (std::size_t i = 0; i < rank_; ++i)
      for (std::size_t j = 0; j < rank_; ++j) {
        if (x[j] == 0) continue;
        for (std::size_t k = 0; k < rank_; ++k)
          if (c(i, j, k) != 0) r(i, k) += x[j] * c(i, j, k);
      }
    return r;
  }

  QMat basis_regular_rep(std::size_t j) const {
    std::vector<Rat> x(rank_, Rat(0));
    x[j] = 1;
    return regular_rep(x);
  }

  std::optional<SplitPresentation> split_presentation;

private:
  Dvr dvr_;
  std::size_t rank_;
  std::vector<Rat> sc_;
  std::vector<Rat> unit_;
};

// O-algebra homomorphism lambda: T -> O by its values on the basis.
struct Character {
  std::vector<Rat> values;

  Rat operator()(const std::vector<Rat>& x) const { return dot(values, x); }
};

struct AlgebraCertificate {
  bool integral = false;
  bool commutative = false;
  bool unital = false;
  bool associative = false;
  bool local = false;
  bool reduced = false;

  bool all_pass() const {
    return integral && commutative && unital && associative && local && reduced;
  }

  std::string summary() const {
    auto yn = [](bool b) { return b ? "pass" : "fail"; };
    return std::string("integral=") + yn(integral) + " commutative=" + yn(commutative) +
           " unital=" + yn(unital) + " associative=" + yn(associative) + " local=" + yn(local) +
           " reduced=" + yn(reduced);
  }
};

inline AlgebraCertificate validate_algebra(const FlatAlgebra& t) {
  const std::size_t r = t.rank();
  const Dvr& dvr = t.dvr();
  AlgebraCertificate cert;

  cert.integral = true;
  for (std::size_t i = 0; i < r && cert.integral; ++i)
    for (std::size_t j = 0; j < r && cert.integral; ++j)
      for (std::size_t k = 0; k < r; ++k)
        if (!dvr.is_integral(t.c(i, j, k))) {
          cert.integral = false;
          break;
        }
  for (const Rat& u : t.unit())
    if (!dvr.is_integral(u)) cert.integral = false;

  cert.commutative = true;
  for (std::size_t i = 0; i < r && cert.commutative; ++i)
    for (std::size_t j = i + 1; j < r && cert.commutative; ++j)
      for (std::size_t k = 0; k < r; ++k)
        if (t.c(i, j, k) != t.c(j, i, k)) {
          cert.commutative = false;
          break;
        }

  cert.unital = true;
  for (std::size_t j = 0; j < r && cert.unital; ++j) {
    std::vector<Rat> ej(r, Rat(0));
    ej[j] = 1;
    std::vector<Rat> prod = t.multiply(t.unit(), ej);
    if (prod != ej) cert.unital = false;
  }

  // (b_i b_j) b_k = b_i (b_j b_k) on all basis triples.
  cert.associative = true;
  std::vector<QMat> reps;
  reps.reserve(r);
  for (std::size_t j = 0; j < r; ++j) reps.push_back(t.basis_regular_rep(j));
  for (std::size_t i = 0; i < r && cert.associative; ++i) {
    for (std::size_t j = 0; j < r && cert.associative; ++j) {
      std::vector<Rat> bij(r, Rat(0));
      for (std::size_t k = 0; k < r; ++k) bij[k] = t.c(i, j, k);
      // Row convention: coords(t*(xy)) = coords(t)R(x)R(y), so associativity
      // on basis triples is R(b_i b_j) = R(b_i)*R(b_j).
      QMat lhs = t.regular_rep(bij);
      QMat rhs = reps[i] * reps[j];
      if (!(lhs == rhs)) cert.associative = false;
    }
  }

  // Locality over the residue field: T (x) F_p is local iff the fixed space of
  // the (F_p-linear) Frobenius x -> x^p is one dimensional, which counts the
  // maximal ideals.
  if (cert.integral && cert.commutative && cert.unital && cert.associative) {
    const Int& p = dvr.prime();
    auto mulmod = [&](const fp::Vec& x, const fp::Vec& y) {
      fp::Vec z(r, Int(0));
      for (std::size_t i = 0; i < r; ++i) {
        if (x[i] == 0) continue;
        for (std::size_t j = 0; j < r; ++j) {
          if (y[j] == 0) continue;
          Int xy = fp::reduce(x[i] * y[j], p);
          for (std::size_t k = 0; k < r; ++k)
            z[k] = fp::reduce(z[k] + xy * fp::reduce_rat(t.c(i, j, k), p), p);
        }
      }
      return z;
    };
    fp::Vec unit_mod(r);
    for (std::size_t i = 0; i < r; ++i) unit_mod[i] = fp::reduce_rat(t.unit()[i], p);
    fp::Mat frob = fp::zero(r, r);
    for (std::size_t i = 0; i < r; ++i) {
      fp::Vec base(r, Int(0));
      base[i] = 1;
      fp::Vec acc = unit_mod;
      Int e = p;
      while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) acc = mulmod(acc, base);
        base = mulmod(base, base);
        e /= 2;
      }
      frob[i] = acc;
    }
    for (std::size_t i = 0; i < r; ++i) frob[i][i] = fp::reduce(frob[i][i] - 1, p);
    cert.local = fp::rank(frob, p) == r - 1;

    // Reducedness: the trace form t_{ij} = trace(mult by b_i b_j) on T_E is
    // nondegenerate exactly when T_E is etale (characteristic zero).
    QMat gram(r, r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        QMat prod = reps[i] * reps[j];
        Rat tr(0);
        for (std::size_t k = 0; k < r; ++k) tr += prod(k, k);
        gram(i, j) = tr;
      }
    cert.reduced = smith_normal_form(gram, dvr).rank == r;
  }
  return cert;
}

inline bool validate_character(const FlatAlgebra& t, const Character& lam) {
  const std::size_t r = t.rank();
  if (lam.values.size() != r) return false;
  for (const Rat& v : lam.values)
    if (!t.dvr().is_integral(v)) return false;
  if (lam(t.unit()) != 1) return false;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      Rat lhs = lam.values[i] * lam.values[j];
      Rat rhs(0);
      for (std::size_t k = 0; k < r; ++k)
        if (t.c(i, j, k) != 0) rhs += t.c(i, j, k) * lam.values[k];
      if (lhs != rhs) return false;
    }
  return true;
}

// The canonical splitting T_E = E x T_E^c induced by lambda: e is the
// idempotent corresponding to (1,0), computed as the lambda-eigenspace of the
// regular representation normalized by lambda_E(e) = 1.
struct SplitData {
  std::vector<Rat> idempotent;  // coordinates of e in the basis of T_E
  long denominator_exponent = 0;  // minimal a with p^a e in T
  Lattice complement_ideal;       // {t in T : e t = 0}, saturated in T
};

inline SplitData split_at_character(const FlatAlgebra& t, const Character& lam) {
  const std::size_t r = t.rank();
  const Dvr& dvr = t.dvr();
  AlgebraCertificate cert = validate_algebra(t);
  if (!cert.reduced)
    throw std::invalid_argument("split_at_character: T_E not etale over E (reducedness fails)");
  if (!cert.all_pass())
    throw std::invalid_argument("split_at_character: algebra axioms fail: " + cert.summary());
  if (!validate_character(t, lam))
    throw std::invalid_argument("split_at_character: invalid character");

  QMat stacked(r, 0);
  for (std::size_t j = 0; j < r; ++j) {
    QMat m = t.basis_regular_rep(j);
    for (std::size_t i = 0; i < r; ++i) m(i, i) -= lam.values[j];
    stacked = stacked.concat(m);
  }
  QMat kernel = left_kernel(stacked, dvr);
  if (kernel.rows() != 1)
    throw std::logic_error("split_at_character: lambda-eigenspace of T_E not one dimensional");

  std::vector<Rat> w = kernel.row(0);
  Rat lw = lam(w);
  if (lw == 0) throw std::logic_error("split_at_character: lambda vanishes on its eigenspace");
  SplitData out;
  out.idempotent.resize(r);
  for (std::size_t i = 0; i < r; ++i) out.idempotent[i] = w[i] / lw;

  if (t.multiply(out.idempotent, out.idempotent) != out.idempotent)
    throw std::logic_error("split_at_character: projector is not idempotent");

  long min_val = 0;
  for (const Rat& x : out.idempotent) {
    if (x == 0) continue;
    long v = dvr.valuation(x).value();
    if (v < min_val) min_val = v;
  }
  out.denominator_exponent = -min_val;

  out.complement_ideal.ambient = r;
  out.complement_ideal.basis = left_kernel(t.regular_rep(out.idempotent), dvr);
  return out;
}

// eta_lambda = lambda(Ann_T(ker lambda)), returned as the valuation exponent
// of a generator of the (principal) image ideal.
inline long eta_wiles(const FlatAlgebra& t, const Character& lam) {
  const std::size_t r = t.rank();
  const Dvr& dvr = t.dvr();
  QMat lam_col(r, 1);
  for (std::size_t i = 0; i < r; ++i) lam_col(i, 0) = lam.values[i];
  QMat ker_basis = left_kernel(lam_col, dvr);  // ker lambda, saturated in T

  QMat stacked(r, 0);
  for (std::size_t s = 0; s < ker_basis.rows(); ++s)
    stacked = stacked.concat(t.regular_rep(ker_basis.row(s)));
  QMat ann = stacked.cols() == 0 ? QMat::identity(r) : left_kernel(stacked, dvr);

  Valuation best = Valuation::infinity();
  for (std::size_t s = 0; s < ann.rows(); ++s) {
    Rat v = lam(ann.row(s));
    Valuation val = dvr.valuation(v);
    if (val < best) best = val;
  }
  if (best.is_infinite())
    throw std::logic_error("eta_wiles: lambda(Ann) = 0 on a reduced algebra");
  if (best.value() < 0) throw std::logic_error("eta_wiles: eta not contained in O");
  return best.value();
}

// Fitting exponent of eT / (eT meet T). The image lattice of e is computed
// from p^a e, which is integral, and rescaled afterwards.
inline long eta_fitting(const FlatAlgebra& t, const Character& lam) {
  const std::size_t r = t.rank();
  const Dvr& dvr = t.dvr();
  SplitData split = split_at_character(t, lam);
  Rat scale = dvr.uniformizer_pow(split.denominator_exponent);
  std::vector<Rat> cleared(r);
  for (std::size_t i = 0; i < r; ++i) cleared[i] = split.idempotent[i] * scale;
  Lattice image = lattice_from_rows(t.regular_rep(cleared), r, dvr);
  image.basis = image.basis * (1 / scale);  // eT
  Lattice inside = lattice_intersection(image, Lattice::standard(r), dvr);
  return sum_exponents(quotient_elementary_divisors(image, inside, dvr));
}

// ---- Eigensystem presentations -------------------------------------------

// Rows are characters, columns are generators; entries lie in the presented
// O_L. Realizes T as the O-subalgebra of O_L^{chars} generated by the
// generator columns, with basis computed by normal-form reduction.
struct EigensystemPresentation {
  Extension ext;
  std::vector<std::vector<ExtScalar>> rows;  // chars x generators
};

namespace detail {

inline std::vector<Rat> flatten_ol_vector(const std::vector<ExtScalar>& v, std::size_t d) {
  std::vector<Rat> out;
  out.reserve(v.size() * d);
  for (const ExtScalar& s : v)
    for (std::size_t i = 0; i < d; ++i) out.push_back(s.coeffs[i]);
  return out;
}

inline std::vector<ExtScalar> unflatten_ol_vector(const std::vector<Rat>& v, std::size_t chars,
                                                  std::size_t d) {
  std::vector<ExtScalar> out(chars);
  for (std::size_t c = 0; c < chars; ++c) {
    out[c].coeffs.assign(v.begin() + static_cast<long>(c * d),
                         v.begin() + static_cast<long>((c + 1) * d));
  }
  return out;
}

}  // namespace detail

// Builds structure constants for the subalgebra of O_L^{chars} generated by
// the eigenvalue vectors. Throws if the row data is not integral.
inline FlatAlgebra algebra_from_eigensystem(const EigensystemPresentation& pres) {
  const Dvr& dvr = pres.ext.dvr();
  const std::size_t chars = pres.rows.size();
  if (chars == 0) throw std::invalid_argument("eigensystem: no characters");
  const std::size_t gens = pres.rows[0].size();
  const std::size_t d = pres.ext.degree();
  const std::size_t ambient = chars * d;

  for (const auto& row : pres.rows) {
    if (row.size() != gens) throw std::invalid_argument("eigensystem: ragged rows");
    for (const ExtScalar& x : row)
      for (const Rat& c : x.coeffs)
        if (!dvr.is_integral(c)) throw std::invalid_argument("eigensystem: entries must lie in O_L");
  }

  auto component_mul = [&](const std::vector<ExtScalar>& a, const std::vector<ExtScalar>& b) {
    std::vector<ExtScalar> z(chars);
    for (std::size_t i = 0; i < chars; ++i) z[i] = ext_mul(a[i], b[i], pres.ext);
    return z;
  };

  std::vector<ExtScalar> one(chars, ExtScalar::from_rat(Rat(1), pres.ext));
  std::vector<std::vector<ExtScalar>> gen_vecs(gens, std::vector<ExtScalar>(chars));
  for (std::size_t j = 0; j < gens; ++j)
    for (std::size_t i = 0; i < chars; ++i) gen_vecs[j][i] = pres.rows[i][j];

  QMat basis(1, ambient);
  basis.set_row(0, detail::flatten_ol_vector(one, d));
  Lattice lat = lattice_from_rows(basis, ambient, dvr);

  for (int round = 0; round < 256; ++round) {
    QMat products(0, ambient);
    for (std::size_t s = 0; s < lat.basis.rows(); ++s) {
      std::vector<ExtScalar> elem = detail::unflatten_ol_vector(lat.basis.row(s), chars, d);
      for (std::size_t j = 0; j < gens; ++j) {
        QMat one_row(1, ambient);
        one_row.set_row(0, detail::flatten_ol_vector(component_mul(elem, gen_vecs[j]), d));
        products = products.stack(one_row);
      }
    }
    Lattice bigger = lattice_from_rows(lat.basis.stack(products), ambient, dvr);
    if (bigger.rank() == lat.rank() && lattice_subset(bigger, lat, dvr)) break;
    lat = bigger;
    if (round == 255) throw std::logic_error("eigensystem: closure did not stabilize");
  }

  const std::size_t r = lat.rank();
  std::vector<std::vector<ExtScalar>> basis_elems(r);
  for (std::size_t s = 0; s < r; ++s)
    basis_elems[s] = detail::unflatten_ol_vector(lat.basis.row(s), chars, d);

  std::vector<Rat> sc(r * r * r, Rat(0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      QMat prod(1, ambient);
      prod.set_row(0, detail::flatten_ol_vector(component_mul(basis_elems[i], basis_elems[j]), d));
      auto coords = solve_left(lat.basis, prod, dvr);
      if (!coords || !dvr.matrix_integral(*coords))
        throw std::logic_error("eigensystem: product escaped the closed lattice");
      for (std::size_t k = 0; k < r; ++k) sc[(i * r + j) * r + k] = (*coords)(0, k);
    }

  QMat one_row(1, ambient);
  one_row.set_row(0, detail::flatten_ol_vector(one, d));
  auto unit_coords = solve_left(lat.basis, one_row, dvr);
  if (!unit_coords || !dvr.matrix_integral(*unit_coords))
    throw std::logic_error("eigensystem: unit escaped the closed lattice");

  FlatAlgebra t(dvr, r, std::move(sc), unit_coords->row(0));
  SplitPresentation sp{pres.ext, {}, {}};
  sp.char_on_basis.assign(chars, std::vector<ExtScalar>(r));
  sp.rational_row.assign(chars, true);
  for (std::size_t i = 0; i < chars; ++i)
    for (std::size_t s = 0; s < r; ++s) {
      sp.char_on_basis[i][s] = basis_elems[s][i];
      for (std::size_t c = 1; c < d; ++c)
        if (sp.char_on_basis[i][s].coeffs[c] != 0) sp.rational_row[i] = false;
    }
  t.split_presentation = sp;
  return t;
}

// The O-valued character cut out by a rational row of the presentation.
inline Character character_from_row(const FlatAlgebra& t, std::size_t row) {
  if (!t.split_presentation) throw std::invalid_argument("algebra has no split presentation");
  const SplitPresentation& sp = *t.split_presentation;
  if (row >= sp.char_on_basis.size()) throw std::invalid_argument("character row out of range");
  if (!sp.rational_row[row])
    throw std::invalid_argument("character row is not rationally valued");
  Character lam;
  lam.values.reserve(t.rank());
  for (const ExtScalar& x : sp.char_on_basis[row]) lam.values.push_back(x.coeffs[0]);
  return lam;
}

}  // namespace congmod
