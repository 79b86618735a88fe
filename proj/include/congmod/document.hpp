#pragma once

#include "congmod/algebra.hpp"
#include "congmod/detect.hpp"
#include "congmod/duality.hpp"
#include "congmod/hecke.hpp"
#include "congmod/module.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace congmod {

// Self-describing plain-text documents, one value per line, "a/b" rationals,
// versioned header. Nested blocks delimit structured members:
//
//   congmod-doc v1
//   kind: flat-algebra
//   prime: 5
//   ...
//   end
//
// Parsing problems throw ParseError; semantic problems surface as
// std::invalid_argument from the constructors downstream.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct DocNode {
  std::string name;  // block name; top level uses "doc"
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<DocNode> children;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  const std::string& need(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ParseError("missing key '" + key + "' in block '" + name + "'");
    return *v;
  }

  std::vector<const std::string*> all(const std::string& key) const {
    std::vector<const std::string*> out;
    for (const auto& [k, v] : entries)
      if (k == key) out.push_back(&v);
    return out;
  }

  const DocNode* child(const std::string& block) const {
    for (const DocNode& c : children)
      if (c.name == block) return &c;
    return nullptr;
  }

  const DocNode& need_child(const std::string& block) const {
    const DocNode* c = child(block);
    if (!c) throw ParseError("missing block '" + block + "' in '" + name + "'");
    return *c;
  }
};

namespace doc_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void parse_block(std::istream& in, DocNode& node) {
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line == "end" || line.rfind("end ", 0) == 0) return;
    if (line.rfind("begin ", 0) == 0) {
      DocNode child;
      child.name = trim(line.substr(6));
      parse_block(in, child);
      node.children.push_back(std::move(child));
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError("malformed line '" + line + "' in block '" + node.name + "'");
    node.entries.emplace_back(trim(line.substr(0, colon)), trim(line.substr(colon + 1)));
  }
  throw ParseError("unterminated block '" + node.name + "'");
}

inline std::vector<Rat> parse_rats(const std::string& s) {
  std::istringstream in(s);
  std::vector<Rat> out;
  std::string tok;
  while (in >> tok) {
    auto r = rat_from_string(tok);
    if (!r) throw ParseError("bad rational '" + tok + "'");
    out.push_back(*r);
  }
  return out;
}

inline std::string rats_to_string(const std::vector<Rat>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += rat_to_string(v[i]);
  }
  return s;
}

inline void write_matrix(std::ostream& out, const std::string& block, const QMat& m) {
  out << "begin " << block << "\n";
  out << "rows: " << m.rows() << "\n";
  out << "cols: " << m.cols() << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) out << "row: " << rats_to_string(m.row(i)) << "\n";
  out << "end " << block << "\n";
}

inline QMat parse_matrix(const DocNode& node) {
  std::size_t rows = std::stoul(node.need("rows"));
  std::size_t cols = std::stoul(node.need("cols"));
  QMat m(rows, cols);
  auto lines = node.all("row");
  if (lines.size() != rows) throw ParseError("matrix row count mismatch in '" + node.name + "'");
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<Rat> r = parse_rats(*lines[i]);
    if (r.size() != cols) throw ParseError("matrix column count mismatch in '" + node.name + "'");
    m.set_row(i, r);
  }
  return m;
}

}  // namespace doc_detail

inline DocNode parse_document(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    line = doc_detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line != "congmod-doc v1") throw ParseError("expected 'congmod-doc v1' header");
    DocNode top;
    top.name = "doc";
    doc_detail::parse_block(in, top);
    return top;
  }
  throw ParseError("empty document");
}

// Several documents may share one stream; nullopt at end of input.
inline std::optional<DocNode> parse_next_document(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    line = doc_detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line != "congmod-doc v1") throw ParseError("expected 'congmod-doc v1' header");
    DocNode top;
    top.name = "doc";
    doc_detail::parse_block(in, top);
    return top;
  }
  return std::nullopt;
}

// ---- extensions -------------------------------------------------------------

inline void write_extension(std::ostream& out, const Extension& ext) {
  switch (ext.kind()) {
    case ExtKind::trivial:
      out << "extension: trivial\n";
      return;
    case ExtKind::unramified:
      out << "extension: unramified " << doc_detail::rats_to_string(ext.defining()) << "\n";
      return;
    case ExtKind::eisenstein:
      out << "extension: eisenstein " << doc_detail::rats_to_string(ext.defining()) << "\n";
      return;
  }
}

inline Extension parse_extension(const std::string& line, const Dvr& dvr) {
  std::istringstream in(line);
  std::string kind;
  in >> kind;
  std::string rest;
  std::getline(in, rest);
  if (kind == "trivial") return Extension(dvr);
  std::vector<Rat> coeffs = doc_detail::parse_rats(rest);
  if (kind == "unramified") return Extension(dvr, ExtKind::unramified, coeffs);
  if (kind == "eisenstein") return Extension(dvr, ExtKind::eisenstein, coeffs);
  throw ParseError("unknown extension kind '" + kind + "'");
}

// ---- flat algebras ----------------------------------------------------------

inline void write_algebra_block(std::ostream& out, const FlatAlgebra& t, const std::string& block) {
  out << "begin " << block << "\n";
  out << "rank: " << t.rank() << "\n";
  out << "unit: " << doc_detail::rats_to_string(t.unit()) << "\n";
  for (std::size_t i = 0; i < t.rank(); ++i)
    for (std::size_t j = 0; j < t.rank(); ++j)
      for (std::size_t k = 0; k < t.rank(); ++k)
        if (t.c(i, j, k) != 0)
          out << "sc: " << i << " " << j << " " << k << " " << rat_to_string(t.c(i, j, k)) << "\n";
  if (t.split_presentation) {
    const SplitPresentation& sp = *t.split_presentation;
    out << "begin eigensystem\n";
    write_extension(out, sp.ext);
    for (std::size_t c = 0; c < sp.char_on_basis.size(); ++c) {
      std::vector<Rat> flat;
      for (const ExtScalar& x : sp.char_on_basis[c])
        for (const Rat& v : x.coeffs) flat.push_back(v);
      out << "char: " << doc_detail::rats_to_string(flat) << "\n";
    }
    out << "end eigensystem\n";
  }
  out << "end " << block << "\n";
}

inline FlatAlgebra parse_algebra_block(const DocNode& node, const Dvr& dvr) {
  std::size_t rank = std::stoul(node.need("rank"));
  std::vector<Rat> unit = doc_detail::parse_rats(node.need("unit"));
  if (unit.size() != rank) throw ParseError("unit vector length mismatch");
  std::vector<Rat> sc(rank * rank * rank, Rat(0));
  for (const std::string* line : node.all("sc")) {
    std::istringstream in(*line);
    std::size_t i, j, k;
    std::string val;
    if (!(in >> i >> j >> k >> val) || i >= rank || j >= rank || k >= rank)
      throw ParseError("bad structure constant line '" + *line + "'");
    auto r = rat_from_string(val);
    if (!r) throw ParseError("bad rational '" + val + "'");
    sc[(i * rank + j) * rank + k] = *r;
  }
  FlatAlgebra t(dvr, rank, std::move(sc), std::move(unit));
  if (const DocNode* eig = node.child("eigensystem")) {
    Extension ext = parse_extension(eig->need("extension"), dvr);
    SplitPresentation sp{ext, {}, {}};
    std::size_t d = ext.degree();
    for (const std::string* line : eig->all("char")) {
      std::vector<Rat> flat = doc_detail::parse_rats(*line);
      if (flat.size() != rank * d) throw ParseError("char row length mismatch");
      std::vector<ExtScalar> row(rank);
      bool rational = true;
      for (std::size_t s = 0; s < rank; ++s) {
        row[s].coeffs.assign(flat.begin() + static_cast<long>(s * d),
                             flat.begin() + static_cast<long>((s + 1) * d));
        for (std::size_t c = 1; c < d; ++c)
          if (row[s].coeffs[c] != 0) rational = false;
      }
      sp.char_on_basis.push_back(std::move(row));
      sp.rational_row.push_back(rational);
    }
    t.split_presentation = std::move(sp);
  }
  return t;
}

// ---- modules ----------------------------------------------------------------

inline void write_module_block(std::ostream& out, const HeckeModule& m, const std::string& block) {
  out << "begin " << block << "\n";
  out << "ambient: " << m.lattice.ambient << "\n";
  doc_detail::write_matrix(out, "lattice", m.lattice.basis);
  for (const QMat& a : m.action) doc_detail::write_matrix(out, "action", a);
  out << "end " << block << "\n";
}

inline HeckeModule parse_module_block(const DocNode& node) {
  HeckeModule m;
  m.lattice.ambient = std::stoul(node.need("ambient"));
  bool have_lattice = false;
  for (const DocNode& c : node.children) {
    if (c.name == "lattice") {
      m.lattice.basis = doc_detail::parse_matrix(c);
      have_lattice = true;
    } else if (c.name == "action") {
      m.action.push_back(doc_detail::parse_matrix(c));
    }
  }
  if (!have_lattice) throw ParseError("module block missing lattice");
  return m;
}

// ---- top-level documents ----------------------------------------------------

inline Dvr parse_prime(const DocNode& doc) {
  Int p(doc.need("prime"));
  return Dvr(p);
}

struct AlgebraDocument {
  FlatAlgebra algebra;
  std::optional<Character> lambda;
};

inline void write_algebra_document(std::ostream& out, const FlatAlgebra& t,
                                   const std::optional<Character>& lambda) {
  out << "congmod-doc v1\n";
  out << "kind: flat-algebra\n";
  out << "prime: " << t.dvr().prime().get_str() << "\n";
  write_algebra_block(out, t, "algebra");
  if (lambda) out << "lambda: " << doc_detail::rats_to_string(lambda->values) << "\n";
  out << "end\n";
}

inline AlgebraDocument parse_algebra_document(const DocNode& doc) {
  Dvr dvr = parse_prime(doc);
  AlgebraDocument out{parse_algebra_block(doc.need_child("algebra"), dvr), std::nullopt};
  if (const std::string* lam = doc.find("lambda")) {
    Character l;
    l.values = doc_detail::parse_rats(*lam);
    if (l.values.size() != out.algebra.rank()) throw ParseError("lambda length mismatch");
    out.lambda = l;
  }
  return out;
}

inline void write_pairing_document(std::ostream& out, const PairingInstance& p) {
  out << "congmod-doc v1\n";
  out << "kind: pairing-instance\n";
  out << "prime: " << p.t1.dvr().prime().get_str() << "\n";
  write_algebra_block(out, p.t1, "algebra-1");
  write_algebra_block(out, p.t2, "algebra-2");
  write_module_block(out, p.m1, "module-1");
  write_module_block(out, p.m2, "module-2");
  doc_detail::write_matrix(out, "gram", p.gram);
  out << "lambda: " << doc_detail::rats_to_string(p.lambda.values) << "\n";
  out << "lambda-tilde: " << doc_detail::rats_to_string(p.lambda_tilde.values) << "\n";
  out << "end\n";
}

inline PairingInstance parse_pairing_document(const DocNode& doc) {
  Dvr dvr = parse_prime(doc);
  FlatAlgebra t1 = parse_algebra_block(doc.need_child("algebra-1"), dvr);
  FlatAlgebra t2 = parse_algebra_block(doc.need_child("algebra-2"), dvr);
  HeckeModule m1 = parse_module_block(doc.need_child("module-1"));
  HeckeModule m2 = parse_module_block(doc.need_child("module-2"));
  QMat gram = doc_detail::parse_matrix(doc.need_child("gram"));
  Character lam, lam_tilde;
  lam.values = doc_detail::parse_rats(doc.need("lambda"));
  lam_tilde.values = doc_detail::parse_rats(doc.need("lambda-tilde"));
  return PairingInstance{std::move(t1), std::move(t2), std::move(m1),
                         std::move(m2), std::move(gram), lam, lam_tilde};
}

inline void write_presentation_document(std::ostream& out, const LocalRingPresentation& r,
                                        const Int& prime,
                                        const FlatAlgebra* algebra = nullptr,
                                        const std::vector<std::vector<Rat>>* images = nullptr,
                                        const Character* lambda = nullptr) {
  out << "congmod-doc v1\n";
  out << "kind: local-ring\n";
  out << "prime: " << prime.get_str() << "\n";
  out << "vars: " << r.num_variables << "\n";
  out << "theta: " << doc_detail::rats_to_string(r.theta_point) << "\n";
  for (const Polynomial& f : r.relations) {
    out << "relation:\n";
    for (const Monomial& m : f.terms) {
      out << "term: " << rat_to_string(m.coefficient);
      for (unsigned long e : m.exponents) out << " " << e;
      out << "\n";
    }
  }
  if (algebra) {
    write_algebra_block(out, *algebra, "algebra");
    for (const auto& img : *images) out << "image: " << doc_detail::rats_to_string(img) << "\n";
    out << "lambda: " << doc_detail::rats_to_string(lambda->values) << "\n";
  }
  out << "end\n";
}

struct PresentationDocument {
  LocalRingPresentation ring;
  std::optional<FlatAlgebra> algebra;
  std::vector<std::vector<Rat>> images;
  std::optional<Character> lambda;
};

inline PresentationDocument parse_presentation_document(const DocNode& doc) {
  Dvr dvr = parse_prime(doc);
  PresentationDocument out;
  out.ring.num_variables = std::stoul(doc.need("vars"));
  out.ring.theta_point = doc_detail::parse_rats(doc.need("theta"));
  Polynomial* current = nullptr;
  for (const auto& [key, value] : doc.entries) {
    if (key == "relation") {
      out.ring.relations.emplace_back();
      current = &out.ring.relations.back();
    } else if (key == "term") {
      if (!current) throw ParseError("term line before any relation");
      std::istringstream in(value);
      std::string coeff;
      in >> coeff;
      auto r = rat_from_string(coeff);
      if (!r) throw ParseError("bad coefficient '" + coeff + "'");
      Monomial m;
      m.coefficient = *r;
      unsigned long e;
      while (in >> e) m.exponents.push_back(e);
      if (m.exponents.size() != out.ring.num_variables)
        throw ParseError("monomial exponent count mismatch");
      current->terms.push_back(std::move(m));
    }
  }
  if (const DocNode* alg = doc.child("algebra")) {
    out.algebra = parse_algebra_block(*alg, dvr);
    for (const std::string* line : doc.all("image"))
      out.images.push_back(doc_detail::parse_rats(*line));
    Character lam;
    lam.values = doc_detail::parse_rats(doc.need("lambda"));
    out.lambda = lam;
  }
  return out;
}

inline void write_bundle_document(std::ostream& out, const ExportBundle& b) {
  out << "congmod-doc v1\n";
  out << "kind: msym-bundle\n";
  out << "prime: " << b.prime.get_str() << "\n";
  out << "level: " << b.level << "\n";
  out << "genus: " << b.genus << "\n";
  out << "prime-bound: " << b.prime_bound << "\n";
  out << "hecke-primes:";
  for (long q : b.hecke_primes) out << " " << q;
  out << "\n";
  out << "class-index: " << b.class_index << "\n";
  out << "class-members:";
  for (std::size_t m : b.class_members) out << " " << m;
  out << "\n";
  out << "pairing-perfect: " << (b.pairing_perfect ? 1 : 0) << "\n";
  write_algebra_block(out, b.t, "algebra");
  out << "lambda: " << doc_detail::rats_to_string(b.lambda.values) << "\n";
  write_module_block(out, b.module, "module");
  doc_detail::write_matrix(out, "gram", b.gram);
  out << "end\n";
}

struct BundleDocument {
  FlatAlgebra algebra;
  Character lambda;
  HeckeModule module;
  QMat gram;
  long level = 0;
  Int prime;
  long genus = 0;
  long prime_bound = 0;
  bool pairing_perfect = false;
};

inline BundleDocument parse_bundle_document(const DocNode& doc) {
  Dvr dvr = parse_prime(doc);
  BundleDocument out{parse_algebra_block(doc.need_child("algebra"), dvr),
                     {},
                     parse_module_block(doc.need_child("module")),
                     doc_detail::parse_matrix(doc.need_child("gram")),
                     0,
                     Int(0),
                     0,
                     0,
                     false};
  out.lambda.values = doc_detail::parse_rats(doc.need("lambda"));
  out.level = std::stol(doc.need("level"));
  out.prime = dvr.prime();
  out.genus = std::stol(doc.need("genus"));
  out.prime_bound = std::stol(doc.need("prime-bound"));
  out.pairing_perfect = doc.need("pairing-perfect") == "1";
  return out;
}

}  // namespace congmod
