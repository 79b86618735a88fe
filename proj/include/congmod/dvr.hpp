#pragma once

#include "congmod/matrix.hpp"
#include "congmod/rational.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace congmod {

// Z localized at p, with uniformizer p. All arithmetic is exact rational
// arithmetic; valuations are computed with no precision loss. Truncated
// p-adic representations are deliberately not supported.
class Dvr {
public:
  explicit Dvr(Int p) : p_(std::move(p)) {
    if (p_ < 2 || !is_prime(p_)) throw std::invalid_argument("Dvr: p must be prime");
  }

  const Int& prime() const { return p_; }

  Valuation valuation(const Rat& x) const { return rat_valuation(x, p_); }

  // Membership in O = Z_(p): denominator coprime to p.
  bool is_integral(const Rat& x) const { return x == 0 || valuation(x).value() >= 0; }

  bool is_unit(const Rat& x) const { return x != 0 && valuation(x).value() == 0; }

  bool matrix_integral(const QMat& a) const {
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        if (!is_integral(a(i, j))) return false;
    return true;
  }

  Rat uniformizer_pow(long e) const { return pow_rat(p_, e); }

private:
  Int p_;
};

// U*A*V = D with U, V invertible over O (valuation-0 determinant) and D a
// diagonal profile whose nonzero entries are powers of p with non-decreasing
// exponents. Over the local ring one elimination pass yields the divisibility
// chain, since the pivot is always an entry of globally minimal valuation.
struct SmithDecomposition {
  QMat u, d, v;
  QMat u_inv, v_inv;
  std::size_t rank = 0;
  std::vector<long> divisor_valuations;  // size == rank
};

namespace detail {

struct PivotChoice {
  std::size_t i = 0, j = 0;
  bool found = false;
};

// Minimal valuation, ties by smaller |numerator|, then row-major order.
inline PivotChoice select_pivot(const QMat& a, const Dvr& dvr, std::size_t k) {
  PivotChoice best;
  Valuation best_val = Valuation::infinity();
  Int best_num;
  for (std::size_t i = k; i < a.rows(); ++i) {
    for (std::size_t j = k; j < a.cols(); ++j) {
      const Rat& x = a(i, j);
      if (x == 0) continue;
      Valuation v = dvr.valuation(x);
      Int n = abs(x.get_num());
      if (!best.found || v < best_val || (v == best_val && n < best_num)) {
        best = {i, j, true};
        best_val = v;
        best_num = n;
      }
    }
  }
  return best;
}

}  // namespace detail

inline SmithDecomposition smith_normal_form(const QMat& a_in, const Dvr& dvr) {
  const std::size_t r = a_in.rows(), n = a_in.cols();
  SmithDecomposition s;
  QMat a = a_in;
  s.u = QMat::identity(r);
  s.u_inv = QMat::identity(r);
  s.v = QMat::identity(n);
  s.v_inv = QMat::identity(n);

  auto swap_rows = [&](std::size_t x, std::size_t y) {
    if (x == y) return;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(x, j), a(y, j));
    for (std::size_t j = 0; j < r; ++j) {
      std::swap(s.u(x, j), s.u(y, j));
      std::swap(s.u_inv(j, x), s.u_inv(j, y));
    }
  };
  auto swap_cols = [&](std::size_t x, std::size_t y) {
    if (x == y) return;
    for (std::size_t i = 0; i < r; ++i) std::swap(a(i, x), a(i, y));
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(s.v(i, x), s.v(i, y));
      std::swap(s.v_inv(x, i), s.v_inv(y, i));
    }
  };

  std::size_t k = 0;
  for (; k < std::min(r, n); ++k) {
    auto piv = detail::select_pivot(a, dvr, k);
    if (!piv.found) break;
    swap_rows(k, piv.i);
    swap_cols(k, piv.j);

    // Scale row k by the inverse unit part so that the pivot is exactly p^v.
    long v = dvr.valuation(a(k, k)).value();
    Rat unit = unit_part(a(k, k), dvr.prime());
    Rat inv = 1 / unit;
    for (std::size_t j = k; j < n; ++j) a(k, j) *= inv;
    for (std::size_t j = 0; j < r; ++j) {
      s.u(k, j) *= inv;
      s.u_inv(j, k) *= unit;
    }

    const Rat pivot = a(k, k);
    for (std::size_t i = k + 1; i < r; ++i) {
      if (a(i, k) == 0) continue;
      Rat f = a(i, k) / pivot;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < r; ++j) {
        s.u(i, j) -= f * s.u(k, j);
        s.u_inv(j, k) += f * s.u_inv(j, i);
      }
    }
    for (std::size_t j = k + 1; j < n; ++j) {
      if (a(k, j) == 0) continue;
      Rat g = a(k, j) / pivot;
      for (std::size_t i = k; i < r; ++i) a(i, j) -= g * a(i, k);
      for (std::size_t i = 0; i < n; ++i) {
        s.v(i, j) -= g * s.v(i, k);
        s.v_inv(k, i) += g * s.v_inv(j, i);
      }
    }
    s.divisor_valuations.push_back(v);
  }
  s.rank = k;
  s.d = a;
  return s;
}

// Basis (as rows) of {c : c*A = 0}, a saturated O-submodule of O^rows.
inline QMat left_kernel(const QMat& a, const Dvr& dvr) {
  SmithDecomposition s = smith_normal_form(a, dvr);
  return s.u.sub_rows(s.rank, a.rows());
}

// Solve X*B = S over the fraction field; nullopt when no solution exists.
inline std::optional<QMat> solve_left(const QMat& b, const QMat& s, const Dvr& dvr) {
  assert(b.cols() == s.cols());
  SmithDecomposition f = smith_normal_form(b, dvr);
  QMat w = s * f.v;  // Y*D = W with Y = X*U^{-1}
  QMat y(s.rows(), b.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (j < f.rank) {
        if (j < y.cols()) y(i, j) = w(i, j) / f.d(j, j);
      } else if (w(i, j) != 0) {
        return std::nullopt;
      }
    }
  }
  return y * f.u;
}

// A finite free O-module given by a full-row-rank basis matrix inside an
// ambient coordinate space E^n.
struct Lattice {
  std::size_t ambient = 0;
  QMat basis;  // rank x ambient, rows O-linearly independent

  std::size_t rank() const { return basis.rows(); }

  static Lattice zero(std::size_t ambient) {
    Lattice l;
    l.ambient = ambient;
    l.basis = QMat(0, ambient);
    return l;
  }

  static Lattice standard(std::size_t ambient) {
    Lattice l;
    l.ambient = ambient;
    l.basis = QMat::identity(ambient);
    return l;
  }
};

// The O-span of the rows of `gens` (rows may be dependent or redundant).
// Row-span is preserved exactly: the returned basis is U*gens truncated to its
// nonzero rows for a unimodular U.
inline Lattice lattice_from_rows(const QMat& gens, std::size_t ambient, const Dvr& dvr) {
  assert(gens.cols() == ambient || gens.rows() == 0);
  SmithDecomposition s = smith_normal_form(gens, dvr);
  Lattice l;
  l.ambient = ambient;
  l.basis = (s.u * gens).sub_rows(0, s.rank);
  if (l.basis.cols() != ambient) l.basis = QMat(0, ambient);
  return l;
}

inline bool lattice_contains(const Lattice& l, const std::vector<Rat>& v, const Dvr& dvr) {
  assert(v.size() == l.ambient);
  QMat target(1, l.ambient);
  target.set_row(0, v);
  auto x = solve_left(l.basis, target, dvr);
  if (!x) return false;
  return dvr.matrix_integral(*x);
}

inline bool lattice_subset(const Lattice& inner, const Lattice& outer, const Dvr& dvr) {
  if (inner.ambient != outer.ambient) return false;
  auto x = solve_left(outer.basis, inner.basis, dvr);
  return x && dvr.matrix_integral(*x);
}

inline bool lattice_equal(const Lattice& a, const Lattice& b, const Dvr& dvr) {
  return a.rank() == b.rank() && lattice_subset(a, b, dvr) && lattice_subset(b, a, dvr);
}

inline Lattice lattice_intersection(const Lattice& l1, const Lattice& l2, const Dvr& dvr) {
  if (l1.ambient != l2.ambient)
    throw std::invalid_argument("lattice_intersection: mismatched ambient rank");
  if (l1.rank() == 0 || l2.rank() == 0) return Lattice::zero(l1.ambient);
  QMat stacked = l1.basis.stack(l2.basis);
  QMat k = left_kernel(stacked, dvr);
  // (a, b) with a*B1 + b*B2 = 0 gives the intersection element a*B1.
  QMat a_part = QMat(k.rows(), l1.rank());
  for (std::size_t i = 0; i < k.rows(); ++i)
    for (std::size_t j = 0; j < l1.rank(); ++j) a_part(i, j) = k(i, j);
  return lattice_from_rows(a_part * l1.basis, l1.ambient, dvr);
}

// Saturation: (E-span of L) intersected with O^n. Same E-row-span, saturated.
inline Lattice saturate(const Lattice& l, const Dvr& dvr) {
  SmithDecomposition s = smith_normal_form(l.basis, dvr);
  Lattice out;
  out.ambient = l.ambient;
  out.basis = s.v_inv.sub_rows(0, s.rank);
  return out;
}

// Exponents (a_1 <= ... <= a_r) with big/small isomorphic to the direct sum of
// O/p^{a_i}; requires small contained in big with equal rank.
inline std::vector<long> quotient_elementary_divisors(const Lattice& big, const Lattice& small,
                                                      const Dvr& dvr) {
  if (big.ambient != small.ambient)
    throw std::invalid_argument("quotient_elementary_divisors: mismatched ambient rank");
  if (big.rank() != small.rank())
    throw std::invalid_argument("quotient_elementary_divisors: quotient is not torsion");
  if (big.rank() == 0) return {};
  auto x = solve_left(big.basis, small.basis, dvr);
  if (!x || !dvr.matrix_integral(*x))
    throw std::invalid_argument("quotient_elementary_divisors: small lattice not contained in big");
  SmithDecomposition s = smith_normal_form(*x, dvr);
  if (s.rank != big.rank())
    throw std::invalid_argument("quotient_elementary_divisors: small lattice has lower rank");
  return s.divisor_valuations;
}

inline long sum_exponents(const std::vector<long>& divs) {
  long s = 0;
  for (long d : divs) s += d;
  return s;
}

}  // namespace congmod
