#pragma once

#include "congmod/dvr.hpp"
#include "congmod/matrix.hpp"
#include "congmod/rational.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace congmod {

// Weight-2 modular symbols for Gamma_0(N) over Q, presented by Manin symbols
// (c:d) on P^1(Z/N) modulo the two- and three-term relations. Conventions:
//  - the symbol (c:d) is the coset of a matrix with bottom row (c,d) and
//    stands for the geodesic path {g(0), g(infinity)};
//  - sigma = [0,-1;1,0] acts by (c:d) -> (d:-c), tau = [0,-1;1,-1] by
//    (c:d) -> (d:-c-d);
//  - classes live in the quotient V = Q[P^1] / (x + x sigma, x + x tau + x tau^2),
//    which is the relative homology of the modular curve with respect to the
//    cusps.

inline long genus_mu_index(long n) {
  long mu = n;
  long m = n;
  for (long p = 2; p * p <= m; ++p) {
    if (m % p) continue;
    mu = mu / p * (p + 1);
    while (m % p == 0) m /= p;
  }
  if (m > 1) mu = mu / m * (m + 1);
  return mu;
}

inline long genus_nu2(long n) {
  if (n % 4 == 0) return 0;
  long nu = 1;
  long m = n;
  for (long p = 2; p * p <= m || m > 1; ++p) {
    if (p * p > m && m > 1) p = m;
    if (m % p) continue;
    while (m % p == 0) m /= p;
    if (p == 2) continue;  // factor 1
    nu *= (p % 4 == 1) ? 2 : 0;
    if (!nu) return 0;
  }
  return nu;
}

inline long genus_nu3(long n) {
  if (n % 9 == 0) return 0;
  long nu = 1;
  long m = n;
  for (long p = 2; p * p <= m || m > 1; ++p) {
    if (p * p > m && m > 1) p = m;
    if (m % p) continue;
    while (m % p == 0) m /= p;
    if (p == 3) continue;  // factor 1
    nu *= (p % 3 == 1) ? 2 : 0;
    if (!nu) return 0;
  }
  return nu;
}

inline long genus_nu_inf(long n) {
  long nu = 0;
  for (long d = 1; d <= n; ++d) {
    if (n % d) continue;
    long g = std::gcd(d, n / d);
    long phi = 0;
    for (long k = 1; k <= g; ++k)
      if (std::gcd(k, g) == 1) ++phi;
    nu += phi;
  }
  return nu;
}

// Genus of X_0(N) by the index / elliptic point / cusp count formula.
inline long genus_x0(long n) {
  long twelve_g = 12 + genus_mu_index(n) - 3 * genus_nu2(n) - 4 * genus_nu3(n)
                  - 6 * genus_nu_inf(n);
  assert(twelve_g % 12 == 0);
  return twelve_g / 12;
}

// Cusp a/c in lowest terms with c >= 0; infinity is 1/0.
struct Cusp {
  Int num, den;

  static Cusp of(Int a, Int c) {
    if (c == 0) return Cusp{Int(1), Int(0)};
    Int g = gcd(a, c);
    if (g != 0) {
      a /= g;
      c /= g;
    }
    if (c < 0) {
      a = -a;
      c = -c;
    }
    return Cusp{a, c};
  }
};

// Gamma_0(N)-equivalence of cusps: p1/q1 ~ p2/q2 iff s1 q2 = s2 q1 modulo
// gcd(q1 q2, N), where p_i s_i = 1 (mod q_i).
inline bool cusps_equivalent(long n, const Cusp& a, const Cusp& b) {
  auto inv_mod = [](const Int& p, const Int& q) -> Int {
    if (q == 0) return p;  // p = +-1, exact inverse in Z
    if (q == 1) return Int(0);
    Int r;
    int ok = mpz_invert(r.get_mpz_t(), Int(p % q).get_mpz_t(), q.get_mpz_t());
    assert(ok);
    (void)ok;
    return r;
  };
  Int s1 = inv_mod(a.num, a.den);
  Int s2 = inv_mod(b.num, b.den);
  Int mod = gcd(a.den * b.den, Int(n));
  if (mod == 0) mod = n;
  Int diff = s1 * b.den - s2 * a.den;
  return diff % mod == 0;
}

// Heilbronn matrices of determinant q (q prime), Cremona's construction.
struct IntMat2 {
  long a, b, c, d;
};

inline std::vector<IntMat2> heilbronn_matrices(long q) {
  // round(a/b) to nearest, halfway away from zero, in exact arithmetic
  auto round_div = [](long a, long b) -> long {
    long s = ((a < 0) != (b < 0)) ? -1 : 1;
    long aa = std::abs(a), bb = std::abs(b);
    return s * ((2 * aa + bb) / (2 * bb));
  };
  std::vector<IntMat2> out;
  out.push_back({1, 0, 0, q});
  for (long s = 0; s < q; ++s) {
    long r = s - (q - 1) / 2;
    long x1 = q, x2 = -r, y1 = 0, y2 = 1;
    long a = -q, b = r;
    out.push_back({x1, x2, y1, y2});
    while (b != 0) {
      long qq = round_div(a, b);
      long c = a - b * qq;
      a = -b;
      b = c;
      long x3 = qq * x2 - x1;
      x1 = x2;
      x2 = x3;
      long y3 = qq * y2 - y1;
      y1 = y2;
      y2 = y3;
      out.push_back({x1, x2, y1, y2});
    }
  }
  return out;
}

class ManinSpace {
public:
  explicit ManinSpace(long level) : n_(level) {
    if (level < 1) throw std::invalid_argument("ManinSpace: level must be positive");
    build_p1();
    build_quotient();
    build_boundary();
    build_spine_pairing();
  }

  long level() const { return n_; }
  std::size_t symbol_count() const { return reps_.size(); }
  std::size_t dim() const { return basis_symbols_.size(); }
  std::size_t cusp_class_count() const { return cusp_reps_.size(); }
  const QMat& cuspidal_basis() const { return cuspidal_basis_; }  // rows over quotient coords
  std::size_t cuspidal_rank() const { return cuspidal_basis_.rows(); }
  long genus() const { return genus_x0(n_); }

  // Index of the canonical representative of (c:d); -1 when gcd(c,d,N) > 1.
  long symbol_index(long c, long d) const {
    c %= n_;
    if (c < 0) c += n_;
    d %= n_;
    if (d < 0) d += n_;
    return lookup_[static_cast<std::size_t>(c) * n_ + d];
  }

  const std::vector<Rat>& symbol_class(std::size_t index) const { return proj_[index]; }

  // Class of the path {a1/b1, a2/b2} between cusps (b = 0 for infinity).
  std::vector<Rat> path_class(const Int& a1, const Int& b1, const Int& a2, const Int& b2) const {
    std::vector<Rat> acc = infinity_path_class(a2, b2);
    std::vector<Rat> from = infinity_path_class(a1, b1);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= from[i];
    return acc;
  }

  // Matrix of T_q on the quotient (rows are images of basis classes).
  QMat hecke_matrix(long q) const {
    if (n_ % q == 0)
      throw std::invalid_argument("hecke_matrix: q divides the level (U_q not supported)");
    std::vector<IntMat2> mats = heilbronn_matrices(q);
    QMat t(dim(), dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      auto [c, d] = reps_[basis_symbols_[i]];
      std::vector<Rat> acc(dim(), Rat(0));
      for (const IntMat2& m : mats) {
        long cc = c * m.a + d * m.c;
        long dd = c * m.b + d * m.d;
        long idx = symbol_index(cc, dd);
        if (idx < 0)
          throw std::logic_error("hecke_matrix: Heilbronn image escaped P^1");
        for (std::size_t k = 0; k < dim(); ++k) acc[k] += proj_[idx][k];
      }
      t.set_row(i, acc);
    }
    return t;
  }

  // Matrix of the Atkin-Lehner involution w_N (full Fricke) on the quotient.
  QMat atkin_lehner_matrix() const {
    QMat w(dim(), dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      auto [a, b, c, d] = lift_[basis_symbols_[i]];
      // w_N {g0, g infinity} = {-d/(N b), -c/(N a)}
      std::vector<Rat> img =
          path_class(Int(-d), Int(n_) * b, Int(-c), Int(n_) * a);
      w.set_row(i, img);
    }
    return w;
  }

  // Boundary of a quotient class as a vector over the cusp classes.
  QMat boundary_matrix() const { return boundary_; }

  // Intersection number of two cuspidal classes (quotient coordinates).
  Rat intersection(const std::vector<Rat>& xi, const std::vector<Rat>& eta) const {
    std::vector<Rat> chain = closed_chain_representative(xi);
    std::vector<Rat> spine = spine_cycle_representative(eta);
    Rat acc(0);
    for (std::size_t r = 0; r < free_reps_.size(); ++r) acc += chain[r] * spine[r];
    return acc;
  }

  // Gram matrix of the intersection pairing on given cuspidal rows.
  QMat intersection_matrix(const QMat& rows) const {
    QMat omega(rows.rows(), rows.rows());
    std::vector<std::vector<Rat>> chains(rows.rows()), spines(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      chains[i] = closed_chain_representative(rows.row(i));
      spines[i] = spine_cycle_representative(rows.row(i));
    }
    for (std::size_t i = 0; i < rows.rows(); ++i)
      for (std::size_t j = 0; j < rows.rows(); ++j) {
        Rat acc(0);
        for (std::size_t r = 0; r < free_reps_.size(); ++r) acc += chains[i][r] * spines[j][r];
        omega(i, j) = acc;
      }
    return omega;
  }

  // Restriction of a quotient operator to the span of the given rows.
  static QMat restrict_operator(const QMat& rows, const QMat& op, const Dvr& dvr) {
    auto sol = solve_left(rows, rows * op, dvr);
    if (!sol) throw std::logic_error("restrict_operator: subspace not invariant");
    return *sol;
  }

  // The integral structure: O-span of all symbol classes, full rank in V.
  Lattice full_lattice(const Dvr& dvr) const {
    QMat gens(symbol_count(), dim());
    for (std::size_t i = 0; i < symbol_count(); ++i) gens.set_row(i, proj_[i]);
    return lattice_from_rows(gens, dim(), dvr);
  }

  // Cuspidal lattice: kernel of the boundary inside the integral structure.
  Lattice cuspidal_lattice(const Dvr& dvr) const {
    Lattice full = full_lattice(dvr);
    QMat k = left_kernel(full.basis * boundary_, dvr);
    Lattice out;
    out.ambient = dim();
    out.basis = k * full.basis;
    return out;
  }

private:
  void build_p1() {
    lookup_.assign(static_cast<std::size_t>(n_) * n_, -1);
    std::vector<long> units;
    for (long u = 0; u < n_; ++u)
      if (std::gcd(u, n_) == 1) units.push_back(u);
    for (long c = 0; c < n_; ++c)
      for (long d = 0; d < n_; ++d) {
        if (std::gcd(std::gcd(c, d), n_) != 1) continue;
        if (lookup_[static_cast<std::size_t>(c) * n_ + d] >= 0) continue;
        long idx = static_cast<long>(reps_.size());
        std::pair<long, long> best{n_, n_};
        std::vector<std::pair<long, long>> orbit;
        for (long u : units) {
          long uc = (u * c) % n_, ud = (u * d) % n_;
          orbit.emplace_back(uc, ud);
          if (std::pair{uc, ud} < best) best = {uc, ud};
        }
        reps_.push_back(best);
        for (auto [uc, ud] : orbit) lookup_[static_cast<std::size_t>(uc) * n_ + ud] = idx;
      }
    if (n_ == 1) {
      // P^1(Z/1) is a single point (0:0).
      if (reps_.empty()) {
        reps_.push_back({0, 0});
        lookup_[0] = 0;
      }
    }
    sigma_.resize(reps_.size());
    tau_.resize(reps_.size());
    lift_.resize(reps_.size());
    for (std::size_t i = 0; i < reps_.size(); ++i) {
      auto [c, d] = reps_[i];
      sigma_[i] = symbol_index(d, -c);
      tau_[i] = symbol_index(d, -c - d);
      lift_[i] = sl2_lift(c, d);
    }
  }

  std::tuple<long, long, long, long> sl2_lift(long c, long d) const {
    if (n_ == 1) return {1, 0, 0, 1};
    // lift (c:d) to coprime integers, then complete to det 1
    for (long k = 0; k < n_; ++k) {
      long dd = d + k * n_;
      long cc = c;
      if (cc == 0 && dd == 0) continue;
      if (std::gcd(cc, dd) == 1) {
        // a*dd - b*cc = 1
        long a, b;
        long g = extended_gcd(dd, cc, a, b);  // a*dd + b*cc = g = 1
        assert(g == 1);
        (void)g;
        return {a, -b, cc, dd};
      }
    }
    throw std::logic_error("sl2_lift: no coprime lift found");
  }

  static long extended_gcd(long x, long y, long& a, long& b) {
    if (y == 0) {
      a = (x < 0) ? -1 : 1;
      b = 0;
      return std::abs(x);
    }
    long a1, b1;
    long g = extended_gcd(y, x % y, a1, b1);
    a = b1;
    b = a1 - (x / y) * b1;
    return g;
  }

  void build_quotient() {
    const std::size_t ns = reps_.size();
    // Relation rows: one per sigma orbit and one per tau orbit.
    std::vector<std::vector<Rat>> rows;
    std::vector<bool> seen_s(ns, false), seen_t(ns, false);
    for (std::size_t i = 0; i < ns; ++i) {
      if (!seen_s[i]) {
        seen_s[i] = true;
        std::vector<Rat> row(ns, Rat(0));
        row[i] += 1;
        std::size_t j = static_cast<std::size_t>(sigma_[i]);
        seen_s[j] = true;
        row[j] += 1;
        rows.push_back(row);
      }
      if (!seen_t[i]) {
        seen_t[i] = true;
        std::vector<Rat> row(ns, Rat(0));
        row[i] += 1;
        std::size_t j = static_cast<std::size_t>(tau_[i]);
        std::size_t k = static_cast<std::size_t>(tau_[j]);
        seen_t[j] = seen_t[k] = true;
        row[j] += 1;
        row[k] += 1;
        rows.push_back(row);
      }
    }

    // Reduced row echelon over Q.
    std::size_t nr = rows.size();
    std::vector<long> pivot_of_row(nr, -1);
    std::vector<long> row_of_pivot(ns, -1);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < ns && rank < nr; ++col) {
      std::size_t piv = nr;
      for (std::size_t r = rank; r < nr; ++r)
        if (rows[r][col] != 0) {
          piv = r;
          break;
        }
      if (piv == nr) continue;
      std::swap(rows[rank], rows[piv]);
      Rat inv = 1 / rows[rank][col];
      for (std::size_t k = col; k < ns; ++k) rows[rank][k] *= inv;
      for (std::size_t r = 0; r < nr; ++r) {
        if (r == rank || rows[r][col] == 0) continue;
        Rat f = rows[r][col];
        for (std::size_t k = col; k < ns; ++k) rows[r][k] -= f * rows[rank][k];
      }
      pivot_of_row[rank] = static_cast<long>(col);
      row_of_pivot[col] = static_cast<long>(rank);
      ++rank;
    }

    for (std::size_t j = 0; j < ns; ++j)
      if (row_of_pivot[j] < 0) basis_symbols_.push_back(j);
    std::map<std::size_t, std::size_t> col_to_basis;
    for (std::size_t b = 0; b < basis_symbols_.size(); ++b)
      col_to_basis[basis_symbols_[b]] = b;

    proj_.assign(ns, std::vector<Rat>(basis_symbols_.size(), Rat(0)));
    for (std::size_t j = 0; j < ns; ++j) {
      if (row_of_pivot[j] < 0) {
        proj_[j][col_to_basis[j]] = 1;
      } else {
        const auto& row = rows[static_cast<std::size_t>(row_of_pivot[j])];
        for (std::size_t k = 0; k < ns; ++k) {
          if (k == j || row[k] == 0) continue;
          assert(row_of_pivot[k] < 0);
          proj_[j][col_to_basis[k]] -= row[k];
        }
      }
    }
  }

  std::size_t cusp_class(const Cusp& c) {
    for (std::size_t i = 0; i < cusp_reps_.size(); ++i)
      if (cusps_equivalent(n_, cusp_reps_[i], c)) return i;
    cusp_reps_.push_back(c);
    return cusp_reps_.size() - 1;
  }

  void build_boundary() {
    // First pass: register every cusp class appearing on any symbol.
    std::vector<std::pair<std::size_t, std::size_t>> ends(reps_.size());
    for (std::size_t i = 0; i < reps_.size(); ++i) {
      auto [a, b, c, d] = lift_[i];
      std::size_t to = cusp_class(Cusp::of(Int(a), Int(c)));    // g(infinity)
      std::size_t from = cusp_class(Cusp::of(Int(b), Int(d)));  // g(0)
      ends[i] = {from, to};
    }
    symbol_boundary_ = std::move(ends);
    boundary_ = QMat(dim(), cusp_reps_.size());
    for (std::size_t i = 0; i < dim(); ++i) {
      auto [from, to] = symbol_boundary_[basis_symbols_[i]];
      boundary_(i, to) += 1;
      boundary_(i, from) -= 1;
    }
    Dvr aux(2);
    cuspidal_basis_ = left_kernel(boundary_, aux);
  }

  std::vector<Rat> infinity_path_class(const Int& a, const Int& b) const {
    // class of {infinity, a/b} via continued fraction convergents
    std::vector<Rat> acc(dim(), Rat(0));
    if (b == 0) return acc;
    Int x = a, y = b;
    Int p_prev(1), q_prev(0);  // p_{-1}/q_{-1} = infinity
    Int p_cur, q_cur;
    bool first = true;
    long k = 0;
    while (true) {
      Int quot, rem;
      mpz_fdiv_qr(quot.get_mpz_t(), rem.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
      Int p_new = first ? quot : quot * p_cur + p_prev;
      Int q_new = first ? Int(1) : quot * q_cur + q_prev;
      if (!first) {
        p_prev = p_cur;
        q_prev = q_cur;
      }
      p_cur = p_new;
      q_cur = q_new;
      // symbol (q_k, (-1)^{k-1} q_{k-1})
      Int second = (k % 2 == 0) ? Int(-q_prev) : q_prev;
      Int cm = q_cur % n_, dm = second % n_;
      long idx = symbol_index(cm.get_si(), dm.get_si());
      if (idx < 0) throw std::logic_error("infinity_path_class: invalid symbol");
      for (std::size_t t = 0; t < dim(); ++t) acc[t] += proj_[static_cast<std::size_t>(idx)][t];
      first = false;
      ++k;
      if (rem == 0) break;
      x = y;
      y = rem;
    }
    return acc;
  }

  // ---- intersection pairing via the dual spine --------------------------

  void build_spine_pairing() {
    const std::size_t ns = reps_.size();
    // t-orbits
    tindex_.assign(ns, -1);
    long ntv = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (tindex_[i] >= 0) continue;
      tindex_[i] = ntv;
      tindex_[static_cast<std::size_t>(tau_[i])] = ntv;
      tindex_[static_cast<std::size_t>(tau_[tau_[i]])] = ntv;
      ++ntv;
    }
    // free sigma orbits; spine edge y_x runs from t(x) to t(x sigma)
    rep_of_symbol_.assign(ns, -1);
    for (std::size_t i = 0; i < ns; ++i) {
      std::size_t j = static_cast<std::size_t>(sigma_[i]);
      if (j == i) continue;  // folded edge, no spine edge
      std::size_t rep = std::min(i, j);
      if (rep == i && rep_of_symbol_[i] < 0) {
        long e = static_cast<long>(free_reps_.size());
        free_reps_.push_back(i);
        rep_of_symbol_[i] = e;
        rep_of_symbol_[j] = e;
      }
    }

    // spanning forest by BFS over t-orbit vertices
    std::vector<long> parent_edge(static_cast<std::size_t>(ntv), -2);  // -2 unseen, -1 root
    std::vector<long> parent_dir(static_cast<std::size_t>(ntv), 0);
    std::vector<std::vector<std::pair<long, int>>> adj(static_cast<std::size_t>(ntv));
    for (std::size_t e = 0; e < free_reps_.size(); ++e) {
      std::size_t x = free_reps_[e];
      long tv = tindex_[x];
      long hv = tindex_[static_cast<std::size_t>(sigma_[x])];
      adj[static_cast<std::size_t>(tv)].push_back({static_cast<long>(e), +1});
      adj[static_cast<std::size_t>(hv)].push_back({static_cast<long>(e), -1});
    }
    std::vector<bool> edge_in_tree(free_reps_.size(), false);
    for (long root = 0; root < ntv; ++root) {
      if (parent_edge[static_cast<std::size_t>(root)] != -2) continue;
      parent_edge[static_cast<std::size_t>(root)] = -1;
      std::queue<long> work;
      work.push(root);
      while (!work.empty()) {
        long v = work.front();
        work.pop();
        for (auto [e, dir] : adj[static_cast<std::size_t>(v)]) {
          std::size_t x = free_reps_[static_cast<std::size_t>(e)];
          long other = (dir > 0) ? tindex_[static_cast<std::size_t>(sigma_[x])] : tindex_[x];
          if (parent_edge[static_cast<std::size_t>(other)] != -2) continue;
          parent_edge[static_cast<std::size_t>(other)] = e;
          parent_dir[static_cast<std::size_t>(other)] = dir;  // dir from v to other
          edge_in_tree[static_cast<std::size_t>(e)] = true;
          work.push(other);
        }
      }
    }

    // Fundamental cycles: non-tree edge followed by the tree path back.
    // A traversal is recorded by the symbol whose dual edge is crossed in the
    // direction right-triangle -> left-triangle.
    auto tree_path_to_root = [&](long v) {
      std::vector<long> edges;  // signed traversal symbols as indexes into reps_
      while (parent_edge[static_cast<std::size_t>(v)] >= 0) {
        long e = parent_edge[static_cast<std::size_t>(v)];
        std::size_t x = free_reps_[static_cast<std::size_t>(e)];
        int dir = parent_dir[static_cast<std::size_t>(v)];
        // dir +1: parent -> v along y_x (crossing symbol x); we walk v -> parent,
        // so we cross x sigma; dir -1 is the reverse.
        long symbol = (dir > 0) ? sigma_[x] : static_cast<long>(x);
        edges.push_back(symbol);
        v = (dir > 0) ? tindex_[x] : tindex_[static_cast<std::size_t>(sigma_[x])];
      }
      return edges;
    };

    for (std::size_t e = 0; e < free_reps_.size(); ++e) {
      if (edge_in_tree[e]) continue;
      std::size_t x = free_reps_[e];
      long tail = tindex_[x];
      long head = tindex_[static_cast<std::size_t>(sigma_[x])];
      // cycle: y_x, then head -> tail through the tree
      std::vector<long> cycle;
      cycle.push_back(static_cast<long>(x));
      std::vector<long> up = tree_path_to_root(head);
      std::vector<long> down_rev = tree_path_to_root(tail);
      // head -> root, then root -> tail (reverse of tail -> root, flipped).
      // Backtracking through the root is harmless: a traversal immediately
      // followed by its reverse contributes nothing below.
      for (long s : up) cycle.push_back(s);
      for (auto it = down_rev.rbegin(); it != down_rev.rend(); ++it)
        cycle.push_back(sigma_[static_cast<std::size_t>(*it)]);
      cycles_.push_back(cycle);
    }

    // Manin class and edge-coefficient vector of each fundamental cycle.
    cycle_classes_ = QMat(cycles_.size(), dim());
    cycle_edges_ = QMat(cycles_.size(), free_reps_.size());
    for (std::size_t cyc = 0; cyc < cycles_.size(); ++cyc) {
      const std::vector<long>& cycle = cycles_[cyc];
      std::vector<Rat> alpha(ns, Rat(0)), beta(ns, Rat(0));
      for (std::size_t step = 0; step < cycle.size(); ++step) {
        long z = cycle[step];
        long znext = cycle[(step + 1) % cycle.size()];
        // edge coefficient of the traversal y_z, recorded for every step
        long rep_edge = rep_of_symbol_[static_cast<std::size_t>(z)];
        assert(rep_edge >= 0);
        bool forward = free_reps_[static_cast<std::size_t>(rep_edge)] == static_cast<std::size_t>(z);
        cycle_edges_(cyc, static_cast<std::size_t>(rep_edge)) += forward ? 1 : -1;

        long w_in = sigma_[static_cast<std::size_t>(z)];
        long w_out = znext;
        if (w_out == w_in) continue;  // u-turn: no corner is touched
        if (w_out == tau_[static_cast<std::size_t>(w_in)]) {
          alpha[static_cast<std::size_t>(w_in)] -= 1;
          beta[static_cast<std::size_t>(w_out)] -= 1;
        } else if (w_out == tau_[static_cast<std::size_t>(tau_[static_cast<std::size_t>(w_in)])]) {
          alpha[static_cast<std::size_t>(w_out)] += 1;
          beta[static_cast<std::size_t>(w_in)] += 1;
        } else {
          throw std::logic_error("spine cycle: consecutive sides not in one triangle");
        }
      }
      // Closedness at the midpoint of each geometric edge: the first half of
      // an arc is minus the second half of the reversed arc, so the halves
      // match per sigma-orbit, not per symbol.
      std::vector<Rat> cls(dim(), Rat(0));
      for (std::size_t s = 0; s < ns; ++s) {
        std::size_t srev = static_cast<std::size_t>(sigma_[s]);
        if (alpha[s] + alpha[srev] != beta[s] + beta[srev])
          throw std::logic_error("spine cycle: half-edge bookkeeping is not closed");
        // one representative per free orbit; folded coordinates vanish
        if (srev <= s) continue;
        Rat coeff = alpha[s] - beta[srev];
        if (coeff == 0) continue;
        for (std::size_t t = 0; t < dim(); ++t) cls[t] += coeff * proj_[s][t];
      }
      cycle_classes_.set_row(cyc, cls);
    }

    // chain matrix: row per free sigma-orbit representative, [class | boundary]
    chain_matrix_ = QMat(free_reps_.size(), dim() + cusp_reps_.size());
    for (std::size_t r = 0; r < free_reps_.size(); ++r) {
      std::size_t x = free_reps_[r];
      for (std::size_t t = 0; t < dim(); ++t) chain_matrix_(r, t) = proj_[x][t];
      auto [from, to] = symbol_boundary_[x];
      chain_matrix_(r, dim() + to) += 1;
      chain_matrix_(r, dim() + from) -= 1;
    }
  }

  std::vector<Rat> closed_chain_representative(const std::vector<Rat>& cls) const {
    Dvr aux(2);
    QMat target(1, dim() + cusp_reps_.size());
    for (std::size_t t = 0; t < dim(); ++t) target(0, t) = cls[t];
    auto sol = solve_left(chain_matrix_, target, aux);
    if (!sol)
      throw std::invalid_argument("intersection: class is not cuspidal");
    return sol->row(0);
  }

  std::vector<Rat> spine_cycle_representative(const std::vector<Rat>& cls) const {
    Dvr aux(2);
    QMat target(1, dim());
    for (std::size_t t = 0; t < dim(); ++t) target(0, t) = cls[t];
    auto sol = solve_left(cycle_classes_, target, aux);
    if (!sol)
      throw std::invalid_argument("intersection: class not representable on the spine");
    return (*sol * cycle_edges_).row(0);
  }

  long n_;
  std::vector<std::pair<long, long>> reps_;
  std::vector<long> lookup_;
  std::vector<long> sigma_, tau_;
  std::vector<std::tuple<long, long, long, long>> lift_;
  std::vector<std::size_t> basis_symbols_;
  std::vector<std::vector<Rat>> proj_;
  std::vector<Cusp> cusp_reps_;
  std::vector<std::pair<std::size_t, std::size_t>> symbol_boundary_;
  QMat boundary_;
  QMat cuspidal_basis_;
  // spine data
  std::vector<long> tindex_;
  std::vector<long> rep_of_symbol_;
  std::vector<std::size_t> free_reps_;
  std::vector<std::vector<long>> cycles_;
  QMat cycle_classes_;
  QMat cycle_edges_;
  QMat chain_matrix_;
};

}  // namespace congmod
