#pragma once

#include "congmod/algebra.hpp"
#include "congmod/detect.hpp"
#include "congmod/duality.hpp"
#include "congmod/manin.hpp"
#include "congmod/module.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// Effective generation bound for the weight-2 Hecke algebra at level N.
inline long sturm_bound(long n) { return (genus_mu_index(n) + 5) / 6; }

inline std::vector<long> hecke_generator_primes(long n, const Int& p, long bound) {
  std::vector<long> primes;
  for (long q = 2; q <= bound; ++q) {
    if (!is_prime(Int(q))) continue;
    if (n % q == 0 || Int(q) == p) continue;
    primes.push_back(q);
  }
  return primes;
}

// One simultaneous eigensystem on the cuspidal space. Rational systems carry
// their eigenvalues directly; quadratic systems express a_q = u_q + v_q*alpha
// for a generator alpha with alpha^2 = trace*alpha - norm. The subspace rows
// are written in cuspidal coordinates and have dimension 2*degree*multiplicity.
struct HeckeEigensystem {
  bool rational = true;
  std::vector<Rat> u, v;
  Rat alpha_trace, alpha_norm;
  QMat subspace;
  std::size_t multiplicity = 1;

  std::size_t degree() const { return rational ? 1 : 2; }
};

struct Extraction {
  std::vector<long> primes;
  std::vector<QMat> cuspidal_ops;  // restricted to the cuspidal basis
  std::vector<HeckeEigensystem> systems;
  std::vector<QMat> unresolved;  // pieces not identified within degree <= 2
};

namespace hecke_detail {

inline long isqrt_floor(long x) {
  long r = static_cast<long>(std::sqrt(static_cast<double>(x)));
  while (r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

// Splits a piece (rows over cuspidal coordinates) along the rational
// eigenvalues of op restricted to it; the residue goes back unresolved.
inline void split_piece(const QMat& piece, const QMat& op_on_piece, long weil_bound,
                        std::vector<QMat>& rational_out, std::vector<QMat>& residue_out,
                        const Dvr& aux) {
  std::size_t k = piece.rows();
  QMat residue_map = QMat::identity(k);
  std::size_t found = 0;
  for (long a = -weil_bound; a <= weil_bound; ++a) {
    QMat shifted = op_on_piece;
    for (std::size_t i = 0; i < k; ++i) shifted(i, i) -= Rat(a);
    QMat ker = left_kernel(shifted, aux);
    if (ker.rows() == 0) continue;
    rational_out.push_back(ker * piece);
    residue_map = residue_map * shifted;
    found += ker.rows();
  }
  if (found == k) return;
  // rows spanning the complement: image of the product of the found factors
  SmithDecomposition s = smith_normal_form(residue_map, aux);
  QMat img = (s.u * residue_map).sub_rows(0, s.rank);
  if (img.rows() != k - found)
    throw std::logic_error("eigensystem extraction: operator not semisimple");
  residue_out.push_back(img * piece);
}

}  // namespace hecke_detail

inline Extraction extract_eigensystems(const ManinSpace& space, const std::vector<long>& primes) {
  Dvr aux(2);
  Extraction out;
  out.primes = primes;
  QMat cusp = space.cuspidal_basis();
  for (long q : primes)
    out.cuspidal_ops.push_back(
        ManinSpace::restrict_operator(cusp, space.hecke_matrix(q), aux));

  std::vector<QMat> pieces;
  if (cusp.rows() > 0) pieces.push_back(QMat::identity(cusp.rows()));

  for (std::size_t qi = 0; qi < primes.size(); ++qi) {
    long bound = 2 * hecke_detail::isqrt_floor(primes[qi]) + 1;  // |a| <= 2 sqrt q
    std::vector<QMat> next;
    for (const QMat& piece : pieces) {
      QMat op = ManinSpace::restrict_operator(piece, out.cuspidal_ops[qi], aux);
      std::vector<QMat> rational_parts, residue;
      hecke_detail::split_piece(piece, op, bound, rational_parts, residue, aux);
      for (auto& w : rational_parts) next.push_back(std::move(w));
      for (auto& w : residue) next.push_back(std::move(w));
    }
    pieces = std::move(next);
  }

  for (const QMat& piece : pieces) {
    std::size_t k = piece.rows();
    std::vector<QMat> ops;
    for (const QMat& full : out.cuspidal_ops)
      ops.push_back(ManinSpace::restrict_operator(piece, full, aux));

    // all scalar -> rational system
    bool all_scalar = true;
    std::vector<Rat> values;
    for (const QMat& a : ops) {
      bool scalar = true;
      for (std::size_t i = 0; i < k && scalar; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (a(i, j) != ((i == j) ? a(0, 0) : Rat(0))) {
            scalar = false;
            break;
          }
      if (!scalar) {
        all_scalar = false;
        break;
      }
      values.push_back(a(0, 0));
    }
    if (all_scalar) {
      if (k % 2 != 0) {
        out.unresolved.push_back(piece);
        continue;
      }
      HeckeEigensystem sys;
      sys.rational = true;
      sys.u = values;
      sys.v.assign(values.size(), Rat(0));
      sys.subspace = piece;
      sys.multiplicity = k / 2;
      // Weil bound sanity in exact arithmetic: a_q^2 <= 4q.
      for (std::size_t qi = 0; qi < primes.size(); ++qi)
        if (sys.u[qi] * sys.u[qi] > Rat(4 * primes[qi]))
          throw std::logic_error("eigensystem extraction: eigenvalue violates the Weil bound");
      out.systems.push_back(std::move(sys));
      continue;
    }

    // quadratic: find a non-scalar generator and express everything in it
    std::size_t star = primes.size();
    for (std::size_t qi = 0; qi < primes.size(); ++qi) {
      bool scalar = true;
      for (std::size_t i = 0; i < k && scalar; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (ops[qi](i, j) != ((i == j) ? ops[qi](0, 0) : Rat(0))) {
            scalar = false;
            break;
          }
      if (!scalar) {
        star = qi;
        break;
      }
    }
    const QMat& astar = ops[star];
    // alpha^2 = trace*alpha - norm from one independent row pair
    QMat a2 = astar * astar;
    std::optional<std::pair<Rat, Rat>> tn;
    for (std::size_t i = 0; i < k && !tn; ++i) {
      // solve e_i a2 = t * (e_i astar) - n * e_i for (t, n)
      QMat sys_m(2, k), rhs(1, k);
      for (std::size_t c = 0; c < k; ++c) {
        sys_m(0, c) = astar(i, c);
        sys_m(1, c) = (c == i) ? Rat(-1) : Rat(0);
        rhs(0, c) = a2(i, c);
      }
      auto sol = solve_left(sys_m, rhs, aux);
      if (sol) tn = {(*sol)(0, 0), (*sol)(0, 1)};
    }
    bool ok = tn.has_value();
    Rat tr = ok ? tn->first : Rat(0), nm = ok ? tn->second : Rat(0);
    if (ok) {
      QMat check = a2 - astar * tr;
      for (std::size_t i = 0; i < k; ++i) check(i, i) += nm;
      ok = check.is_zero();
    }
    if (ok) {
      // irreducible over Q: discriminant is not a rational square
      Rat disc = tr * tr - nm * 4;
      Int num = disc.get_num(), den = disc.get_den();
      Int sn, sd;
      mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
      mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
      if (disc >= 0 && sn * sn == num && sd * sd == den) ok = false;
    }
    HeckeEigensystem sys;
    if (ok) {
      sys.rational = false;
      sys.alpha_trace = tr;
      sys.alpha_norm = nm;
      for (const QMat& a : ops) {
        // a = u + v*astar on the piece
        QMat sys_m(2, k * k), rhs(1, k * k);
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            sys_m(0, i * k + j) = (i == j) ? Rat(1) : Rat(0);
            sys_m(1, i * k + j) = astar(i, j);
            rhs(0, i * k + j) = a(i, j);
          }
        auto sol = solve_left(sys_m, rhs, aux);
        if (!sol) {
          ok = false;
          break;
        }
        sys.u.push_back((*sol)(0, 0));
        sys.v.push_back((*sol)(0, 1));
      }
    }
    if (!ok || k % 4 != 0) {
      out.unresolved.push_back(piece);
      continue;
    }
    sys.subspace = piece;
    sys.multiplicity = k / 4;
    out.systems.push_back(std::move(sys));
  }

  std::sort(out.systems.begin(), out.systems.end(),
            [](const HeckeEigensystem& a, const HeckeEigensystem& b) {
              if (a.rational != b.rational) return a.rational > b.rational;
              if (a.u != b.u) return a.u < b.u;
              return a.v < b.v;
            });
  return out;
}

// ---- residual classes ------------------------------------------------------

namespace hecke_detail {

// Arithmetic in F_p[z]/(z^2 - r1 z - r0).
struct Fp2 {
  Int x, y;
};

struct Fp2Ctx {
  Int p, r1, r0;

  Fp2 make(const Int& x, const Int& y) const { return {fp::reduce(x, p), fp::reduce(y, p)}; }
  bool eq(const Fp2& a, const Fp2& b) const { return a.x == b.x && a.y == b.y; }
  Fp2 add(const Fp2& a, const Fp2& b) const { return {fp::reduce(a.x + b.x, p), fp::reduce(a.y + b.y, p)}; }
  Fp2 sub(const Fp2& a, const Fp2& b) const { return {fp::reduce(a.x - b.x, p), fp::reduce(a.y - b.y, p)}; }
  Fp2 mul(const Fp2& a, const Fp2& b) const {
    // (ax + ay z)(bx + by z) with z^2 = r1 z + r0
    Int zz = fp::reduce(a.y * b.y, p);
    return {fp::reduce(a.x * b.x + zz * r0, p), fp::reduce(a.x * b.y + a.y * b.x + zz * r1, p)};
  }
  Fp2 scale(const Int& c, const Fp2& a) const { return {fp::reduce(c * a.x, p), fp::reduce(c * a.y, p)}; }
};

// Roots of X^2 - t X + n in F_{p^2}, by enumeration (p is small here).
inline std::vector<Fp2> quadratic_roots(const Fp2Ctx& ctx, const Int& t, const Int& n) {
  std::vector<Fp2> roots;
  for (Int x = 0; x < ctx.p; ++x)
    for (Int y = 0; y < ctx.p; ++y) {
      Fp2 r{x, y};
      Fp2 val = ctx.sub(ctx.mul(r, r), ctx.make(-n, 0));
      val = ctx.sub(val, ctx.scale(fp::reduce(t, ctx.p), r));
      // r^2 - t r + n
      if (val.x == 0 && val.y == 0) roots.push_back(r);
    }
  return roots;
}

// Candidate residual rows of a system over a common F_{p^2}.
inline std::vector<std::vector<Fp2>> residual_rows(const HeckeEigensystem& sys, const Fp2Ctx& ctx) {
  std::vector<std::vector<Fp2>> rows;
  if (sys.rational) {
    std::vector<Fp2> row;
    for (const Rat& a : sys.u) row.push_back(ctx.make(fp::reduce_rat(a, ctx.p), 0));
    rows.push_back(row);
    return rows;
  }
  // p-integrality of the coordinates is required to reduce
  for (const Rat& x : sys.u)
    if (rat_valuation(x, ctx.p) < Valuation::finite(0)) return rows;
  for (const Rat& x : sys.v)
    if (rat_valuation(x, ctx.p) < Valuation::finite(0)) return rows;
  Int t = fp::reduce_rat(sys.alpha_trace, ctx.p), n = fp::reduce_rat(sys.alpha_norm, ctx.p);
  for (const Fp2& rho : quadratic_roots(ctx, t, n)) {
    std::vector<Fp2> row;
    for (std::size_t i = 0; i < sys.u.size(); ++i) {
      Fp2 val = ctx.make(fp::reduce_rat(sys.u[i], ctx.p), 0);
      val = ctx.add(val, ctx.scale(fp::reduce_rat(sys.v[i], ctx.p), rho));
      row.push_back(val);
    }
    rows.push_back(row);
  }
  return rows;
}

inline Fp2Ctx reference_field(const std::vector<HeckeEigensystem>& systems, const Int& p) {
  // Any monic irreducible quadratic works as the modulus; prefer one coming
  // from the data, fall back to a search.
  for (const HeckeEigensystem& sys : systems) {
    if (sys.rational) continue;
    if (rat_valuation(sys.alpha_trace, p) < Valuation::finite(0)) continue;
    if (rat_valuation(sys.alpha_norm, p) < Valuation::finite(0)) continue;
    fp::Poly f = {fp::reduce_rat(sys.alpha_norm, p), fp::reduce(Int(-fp::reduce_rat(sys.alpha_trace, p)), p), Int(1)};
    if (fp::poly_irreducible(f, p))
      return Fp2Ctx{p, fp::reduce_rat(sys.alpha_trace, p), Int(-1) * fp::reduce_rat(sys.alpha_norm, p)};
  }
  for (Int c = 1; c < p; ++c) {
    fp::Poly f = {c, Int(0), Int(1)};  // z^2 + c
    if (fp::poly_irreducible(f, p)) return Fp2Ctx{p, Int(0), fp::reduce(Int(-c), p)};
  }
  // p = 2: z^2 + z + 1
  return Fp2Ctx{p, fp::reduce(Int(-1), p), fp::reduce(Int(-1), p)};
}

}  // namespace hecke_detail

inline bool residually_linked(const HeckeEigensystem& a, const HeckeEigensystem& b, const Int& p) {
  hecke_detail::Fp2Ctx ctx = hecke_detail::reference_field({a, b}, p);
  auto rows_a = hecke_detail::residual_rows(a, ctx);
  auto rows_b = hecke_detail::residual_rows(b, ctx);
  for (const auto& ra : rows_a)
    for (const auto& rb : rows_b) {
      bool same = true;
      for (std::size_t i = 0; i < ra.size() && same; ++i)
        if (!ctx.eq(ra[i], rb[i])) same = false;
      if (same) return true;
    }
  return false;
}

// Partition of the extracted systems into residual eigensystem classes mod p.
inline std::vector<std::vector<std::size_t>> residual_classes(
    const std::vector<HeckeEigensystem>& systems, const Int& p) {
  std::size_t n = systems.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (residually_linked(systems[i], systems[j], p)) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> classes;
  std::vector<long> class_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = find(i);
    if (class_of[root] < 0) {
      class_of[root] = static_cast<long>(classes.size());
      classes.emplace_back();
    }
    classes[static_cast<std::size_t>(class_of[root])].push_back(i);
  }
  return classes;
}

// ---- localization and export ----------------------------------------------

struct ExportBundle {
  FlatAlgebra t;
  Character lambda;
  HeckeModule module;  // localized cuspidal lattice, action in its basis
  QMat gram;           // Atkin-Lehner-twisted intersection pairing on the module
  PairingCertificate pairing_cert;
  bool pairing_perfect = false;
  std::optional<PairingInstance> pairing;  // present when the certificate passes

  long level = 0;
  Int prime;
  long prime_bound = 0;
  std::vector<long> hecke_primes;
  std::vector<std::size_t> class_members;
  std::size_t class_index = 0;
  long genus = 0;
};

inline ExportBundle localize_and_export(const ManinSpace& space, const Dvr& dvr,
                                        std::size_t designated_system, long prime_bound = 0) {
  const long n = space.level();
  const Int& p = dvr.prime();
  if (Int(n) % p == 0)
    throw std::invalid_argument(
        "localize_and_export: p divides the level; the localized lattice and twisted "
        "pairing need p prime to N");
  if (prime_bound <= 0) prime_bound = sturm_bound(n);
  std::vector<long> primes = hecke_generator_primes(n, p, prime_bound);
  if (primes.empty()) throw std::invalid_argument("localize_and_export: no generator primes");

  Extraction ex = extract_eigensystems(space, primes);
  if (designated_system >= ex.systems.size())
    throw std::invalid_argument("localize_and_export: designated system out of range");
  if (!ex.systems[designated_system].rational)
    throw std::invalid_argument(
        "localize_and_export: designated eigensystem is not rational; lambda must take "
        "values in O");

  // Unresolved pieces may not share the residual class of the designated
  // system: if their residual characteristic polynomials admit the designated
  // residual row at every prime, refuse honestly. det((T_q - a)|piece) is
  // basis independent and integral, so a unit determinant at some prime rules
  // the piece out.
  Dvr aux(2);
  for (const QMat& piece : ex.unresolved) {
    bool possibly_linked = true;
    for (std::size_t qi = 0; qi < primes.size() && possibly_linked; ++qi) {
      QMat op = ManinSpace::restrict_operator(piece, ex.cuspidal_ops[qi], aux);
      Int a_bar = fp::reduce_rat(ex.systems[designated_system].u[qi], p);
      QMat shifted = op;
      for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) -= Rat(a_bar);
      SmithDecomposition s = smith_normal_form(shifted, dvr);
      bool unit_det = s.rank == shifted.rows() && sum_exponents(s.divisor_valuations) == 0;
      if (unit_det) possibly_linked = false;
    }
    if (possibly_linked)
      throw std::invalid_argument(
          "localize_and_export: an eigensystem of degree > 2 may lie in the residual "
          "class; unsupported at this scale");
  }

  // Residual linkage of a quadratic system is decided through its (u, v)
  // coordinates; if those are not p-integral the class partition would be
  // unreliable, so refuse up front.
  for (const HeckeEigensystem& sys : ex.systems) {
    if (sys.rational) continue;
    bool integral = rat_valuation(sys.alpha_trace, p) >= Valuation::finite(0) &&
                    rat_valuation(sys.alpha_norm, p) >= Valuation::finite(0);
    for (const Rat& x : sys.u)
      if (rat_valuation(x, p) < Valuation::finite(0)) integral = false;
    for (const Rat& x : sys.v)
      if (rat_valuation(x, p) < Valuation::finite(0)) integral = false;
    if (!integral)
      throw std::invalid_argument(
          "localize_and_export: quadratic eigenvalue coordinates are not p-integral; "
          "residual classes cannot be decided in this presentation");
  }

  auto classes = residual_classes(ex.systems, p);
  std::size_t cls_index = 0;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (std::count(classes[c].begin(), classes[c].end(), designated_system)) cls_index = c;
  const std::vector<std::size_t>& members = classes[cls_index];

  // Extension for the class: trivial unless a quadratic member appears.
  std::size_t quad_count = 0;
  for (std::size_t m : members)
    if (!ex.systems[m].rational) ++quad_count;
  if (quad_count > 1)
    throw std::invalid_argument(
        "localize_and_export: residual class mixes several irrational eigenvalue fields; "
        "mixed extensions are unsupported");

  Extension ext(dvr);
  Rat gen_shift(0), gen_scale(1);  // alpha = gen_shift + gen_scale * gamma
  if (quad_count == 1) {
    const HeckeEigensystem* quad = nullptr;
    for (std::size_t m : members)
      if (!ex.systems[m].rational) quad = &ex.systems[m];
    Rat t = quad->alpha_trace, nm = quad->alpha_norm;
    fp::Poly residual = {fp::reduce_rat(nm, p), fp::reduce(Int(-fp::reduce_rat(t, p)), p), Int(1)};
    if (rat_valuation(t, p) < Valuation::finite(0) || rat_valuation(nm, p) < Valuation::finite(0))
      throw std::invalid_argument("localize_and_export: eigenvalue field not p-integral");
    if (fp::poly_irreducible(residual, p)) {
      ext = Extension(dvr, ExtKind::unramified, {nm, -t});
    } else if (p != 2) {
      // beta = alpha - t/2, beta^2 = (t^2 - 4n)/4
      Rat d4 = (t * t - nm * 4) / 4;
      if (d4 == 0)
        throw std::invalid_argument("localize_and_export: degenerate eigenvalue field");
      long vd = dvr.valuation(d4).value();
      long half = vd / 2;
      Rat scale = dvr.uniformizer_pow(half);
      Rat reduced = d4 / (scale * scale);  // gamma^2 = reduced
      if (vd % 2 == 1) {
        ext = Extension(dvr, ExtKind::eisenstein, {-reduced, Rat(0)});
      } else {
        // unit radicand: unramified iff it is a non-residue
        Int u = fp::reduce_rat(reduced, p);
        fp::Poly f = {fp::reduce(Int(-u), p), Int(0), Int(1)};
        if (!fp::poly_irreducible(f, p))
          throw std::invalid_argument(
              "localize_and_export: eigenvalue field splits at p; the residual class has "
              "no integral O_L presentation here");
        ext = Extension(dvr, ExtKind::unramified, {-reduced, Rat(0)});
      }
      gen_shift = t / 2;
      gen_scale = scale;
    } else {
      throw std::invalid_argument(
          "localize_and_export: ramified quadratic eigenvalue field at p = 2 is "
          "unsupported");
    }
  }

  EigensystemPresentation pres{ext, {}};
  for (std::size_t m : members) {
    const HeckeEigensystem& sys = ex.systems[m];
    std::vector<ExtScalar> row;
    for (std::size_t qi = 0; qi < primes.size(); ++qi) {
      if (sys.rational) {
        row.push_back(ExtScalar::from_rat(sys.u[qi], ext));
      } else {
        // a_q = u + v*alpha = (u + v*gen_shift) + (v*gen_scale)*gamma
        ExtScalar val = ExtScalar::from_rat(sys.u[qi] + sys.v[qi] * gen_shift, ext);
        val.coeffs[1] = sys.v[qi] * gen_scale;
        row.push_back(val);
      }
    }
    pres.rows.push_back(row);
  }
  FlatAlgebra t_alg = algebra_from_eigensystem(pres);
  AlgebraCertificate cert = validate_algebra(t_alg);
  if (!cert.all_pass())
    throw std::logic_error("localize_and_export: exported algebra fails validation: " +
                           cert.summary());
  std::size_t lam_pos = 0;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i] == designated_system) lam_pos = i;
  Character lam = character_from_row(t_alg, lam_pos);

  // Localized module: the class subspace meets the cuspidal lattice.
  QMat cusp = space.cuspidal_basis();
  Lattice cusp_lat = space.cuspidal_lattice(dvr);
  QMat cusp_lat_c = [&] {
    auto sol = solve_left(cusp, cusp_lat.basis, aux);
    if (!sol) throw std::logic_error("localize_and_export: cuspidal lattice conversion failed");
    return *sol;
  }();  // lattice basis in cuspidal coordinates

  std::size_t class_dim = 0;
  for (std::size_t m : members) class_dim += ex.systems[m].subspace.rows();

  QMat annihilators(cusp_lat_c.rows(), 0);
  for (std::size_t qi = 0; qi < primes.size(); ++qi) {
    // product over members of their minimal polynomial factor at q
    QMat op = ManinSpace::restrict_operator(cusp_lat_c, ex.cuspidal_ops[qi], dvr);
    QMat prod = QMat::identity(op.rows());
    for (std::size_t m : members) {
      const HeckeEigensystem& sys = ex.systems[m];
      if (sys.rational || sys.v[qi] == 0) {
        QMat f = op;
        Rat val = sys.rational ? sys.u[qi] : sys.u[qi];
        for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) -= val;
        prod = prod * f;
      } else {
        Rat b = sys.u[qi] * 2 + sys.v[qi] * sys.alpha_trace;
        Rat c = sys.u[qi] * sys.u[qi] + sys.u[qi] * sys.v[qi] * sys.alpha_trace +
                sys.v[qi] * sys.v[qi] * sys.alpha_norm;
        QMat f = op * op - op * b;
        for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) += c;
        prod = prod * f;
      }
    }
    annihilators = annihilators.concat(prod);
  }
  QMat mod_rows = annihilators.cols() == 0 ? QMat::identity(cusp_lat_c.rows())
                                           : left_kernel(annihilators, dvr);
  if (mod_rows.rows() != class_dim)
    throw std::logic_error(
        "localize_and_export: residual class subspace not separated at this prime bound; "
        "request a larger bound");

  HeckeModule mod;
  mod.lattice.ambient = cusp.rows();
  mod.lattice.basis = mod_rows * cusp_lat_c;  // rows over cuspidal coordinates

  // Action of the algebra basis через the adapted decomposition.
  QMat adapted(0, mod_rows.rows());
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // (member, offset)
  for (std::size_t m : members) {
    const HeckeEigensystem& sys = ex.systems[m];
    auto in_mod = solve_left(mod.lattice.basis, sys.subspace, aux);
    if (!in_mod) throw std::logic_error("localize_and_export: piece not inside the module");
    blocks.emplace_back(m, adapted.rows());
    adapted = adapted.stack(*in_mod);
  }
  QMat adapted_inv = [&] {
    auto inv = solve_left(adapted, QMat::identity(adapted.rows()), aux);
    if (!inv) throw std::logic_error("localize_and_export: adapted basis is singular");
    return *inv;
  }();

  const SplitPresentation& sp = *t_alg.split_presentation;
  // gamma action per quadratic member block, from the starred operator
  for (std::size_t s = 0; s < t_alg.rank(); ++s) {
    QMat diag(adapted.rows(), adapted.rows());
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      auto [m, offset] = blocks[bi];
      const HeckeEigensystem& sys = ex.systems[m];
      std::size_t kdim = sys.subspace.rows();
      const ExtScalar& val = sp.char_on_basis[bi][s];
      if (sys.rational) {
        for (std::size_t i = 0; i < kdim; ++i) diag(offset + i, offset + i) = val.coeffs[0];
      } else {
        // value = c0 + c1 * gamma with gamma = (alpha - gen_shift)/gen_scale
        std::size_t star = 0;
        for (std::size_t qi = 0; qi < primes.size(); ++qi)
          if (sys.v[qi] != 0) {
            star = qi;
            break;
          }
        QMat piece_in_block(kdim, mod_rows.rows());
        for (std::size_t i = 0; i < kdim; ++i)
          for (std::size_t j = 0; j < mod_rows.rows(); ++j)
            piece_in_block(i, j) = adapted(offset + i, j);
        QMat aop = ManinSpace::restrict_operator(
            piece_in_block * mod.lattice.basis, ex.cuspidal_ops[star], aux);
        // alpha action on the block: (a_star - u)/v
        QMat alpha_act = aop;
        for (std::size_t i = 0; i < kdim; ++i) alpha_act(i, i) -= sys.u[star];
        alpha_act = alpha_act * (1 / sys.v[star]);
        QMat gamma_act = alpha_act;
        for (std::size_t i = 0; i < kdim; ++i) gamma_act(i, i) -= gen_shift;
        gamma_act = gamma_act * (1 / gen_scale);
        for (std::size_t i = 0; i < kdim; ++i) {
          diag(offset + i, offset + i) += val.coeffs[0];
          for (std::size_t j = 0; j < kdim; ++j)
            diag(offset + i, offset + j) += val.coeffs[1] * gamma_act(i, j);
        }
      }
    }
    QMat act = adapted_inv * diag * adapted;
    if (!dvr.matrix_integral(act))
      throw std::logic_error("localize_and_export: algebra action is not integral on the lattice");
    mod.action.push_back(act);
  }
  ModuleCertificate mcert = validate_module(t_alg, mod);
  if (!mcert.all_pass())
    throw std::logic_error("localize_and_export: exported module fails validation: " +
                           mcert.summary());

  // Atkin-Lehner-twisted intersection pairing on the module basis.
  QMat omega = space.intersection_matrix(mod.lattice.basis * cusp);
  QMat w_cusp = ManinSpace::restrict_operator(cusp, space.atkin_lehner_matrix(), aux);
  QMat w_mod = [&] {
    auto sol = solve_left(mod.lattice.basis, mod.lattice.basis * w_cusp, aux);
    if (!sol)
      throw std::logic_error("localize_and_export: Atkin-Lehner does not preserve the class");
    return *sol;
  }();
  QMat gram = omega * w_mod.transpose();

  ExportBundle bundle{t_alg,
                      lam,
                      mod,
                      gram,
                      {},
                      false,
                      std::nullopt,
                      n,
                      p,
                      prime_bound,
                      primes,
                      members,
                      cls_index,
                      space.genus()};
  PairingInstance inst{t_alg, t_alg, mod, mod, gram, lam, lam};
  bundle.pairing_cert = verify_pairing_hypotheses(inst);
  bundle.pairing_perfect = bundle.pairing_cert.perfect;
  if (bundle.pairing_cert.all_pass()) bundle.pairing = inst;
  return bundle;
}

}  // namespace congmod
