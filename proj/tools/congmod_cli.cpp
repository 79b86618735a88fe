// Command-line driver: exact congruence-module computations on document
// fixtures, the modular-symbols instance factory, and batch verification.
//
// Exit status: 0 all assertions pass; 1 a mathematical assertion failed;
// 2 parse error; 3 validation/precondition failure.

#include "congmod/document.hpp"
#include "congmod/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace congmod;

namespace {

struct Output {
  std::ostringstream body;
  std::string out_path;

  ~Output() {
    std::cout << body.str();
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      f << body.str();
    }
  }
};

Character resolve_lambda(const AlgebraDocument& doc) {
  if (doc.lambda) return *doc.lambda;
  if (doc.algebra.split_presentation) return character_from_row(doc.algebra, 0);
  throw std::invalid_argument("no lambda: document carries neither a lambda line nor a "
                              "rational eigensystem row");
}

DocNode parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_document(in);
}

void report_algebra(std::ostream& out, const std::string& id, const FlatAlgebra& t,
                    const Character& lam) {
  AlgebraCertificate cert = validate_algebra(t);
  out << "instance: " << id << "\n";
  out << "certificate: " << cert.summary() << "\n";
  if (!cert.all_pass()) throw std::invalid_argument("algebra axioms fail: " + cert.summary());
  if (!validate_character(t, lam)) throw std::invalid_argument("invalid character");
  long e_ann = eta_wiles(t, lam);
  long e_fit = eta_fitting(t, lam);
  out << "eta-annihilator: " << e_ann << "\n";
  out << "eta-fitting: " << e_fit << "\n";
  if (e_ann != e_fit)
    throw std::logic_error("congruence-ideal route mismatch: annihilator vs Fitting ideal");
  CongruenceData reg = congruence_module(t, HeckeModule::regular(t), lam);
  out << "divisors:";
  for (long d : reg.elementary_divisors) out << " " << d;
  out << "\n";
  SplitData split = split_at_character(t, lam);
  out << "denominator-exponent: " << split.denominator_exponent << "\n";
}

void report_detect(std::ostream& out, const std::string& id, const FlatAlgebra& t,
                   const Character& lam) {
  DetectResult res = detect_congruence(t, lam);
  out << "instance: " << id << "\n";
  out << "eta-exponent: " << res.eta_exponent << "\n";
  out << "congruence-exists: " << (res.congruence_exists ? 1 : 0) << "\n";
  if (res.witness) {
    out << "witness-row: " << res.witness->partner_row << "\n";
    out << "witness-depth: " << res.witness->congruence_depth << "\n";
    out << "witness-extension: " << res.witness->extension.describe() << "\n";
  } else if (!res.note.empty()) {
    out << "witness-note: " << res.note << "\n";
  }
  if (t.split_presentation) {
    // cross-check against the brute-force oracle on the eigensystem table
    std::size_t lam_row = 0;
    bool found = false;
    const SplitPresentation& sp = *t.split_presentation;
    for (std::size_t c = 0; c < sp.char_on_basis.size() && !found; ++c) {
      if (!sp.rational_row[c]) continue;
      bool match = true;
      for (std::size_t s = 0; s < t.rank(); ++s)
        if (sp.char_on_basis[c][s].coeffs[0] != lam.values[s]) match = false;
      if (match) {
        lam_row = c;
        found = true;
      }
    }
    if (found) {
      auto partners = brute_force_congruence_oracle(sp.char_on_basis, lam_row, sp.ext);
      out << "oracle-partners: " << partners.size() << "\n";
      bool oracle_bit = !partners.empty();
      if (oracle_bit != res.congruence_exists || res.congruence_exists != (res.eta_exponent >= 1))
        throw std::logic_error(
            "congruence-detection mismatch: witness search, brute-force oracle and the "
            "congruence ideal disagree");
    }
  }
}

void report_pairing(std::ostream& out, const std::string& id, const PairingInstance& p) {
  out << "instance: " << id << "\n";
  ModuleCertificate c1 = validate_module(p.t1, p.m1);
  ModuleCertificate c2 = validate_module(p.t2, p.m2);
  if (!c1.all_pass() || !c2.all_pass())
    throw std::invalid_argument("module axioms fail: " + c1.summary() + " / " + c2.summary());
  PairingCertificate cert = verify_pairing_hypotheses(p);
  out << "hypotheses: " << cert.summary() << "\n";
  if (!cert.all_pass()) {
    out << "note: hypotheses fail; transfer assertions not applicable\n";
    long e1 = eta_module(p.t1, p.m1, p.lambda);
    long e2 = eta_module(p.t2, p.m2, p.lambda_tilde);
    out << "eta-side-1: " << e1 << "\n";
    out << "eta-side-2: " << e2 << "\n";
    return;
  }
  auto orders = congruence_module_pairing_order(p);
  out << "eta-side-1: " << orders.first << "\n";
  out << "eta-side-2: " << orders.second << "\n";
  Lattice k1 = kernel_fixed_part(p.t1, p.m1, p.lambda);
  Lattice k2 = kernel_fixed_part(p.t2, p.m2, p.lambda_tilde);
  if (k1.rank() == 1 && k2.rank() == 1) {
    long delta = delta_pairing(p);
    out << "delta-valuation: " << delta << "\n";
  } else {
    out << "delta-valuation: n/a (kernel ranks " << k1.rank() << " " << k2.rank() << ")\n";
  }
}

void report_presentation(std::ostream& out, const std::string& id,
                         const PresentationDocument& doc, const Dvr& dvr) {
  out << "instance: " << id << "\n";
  CotangentOrder ct = cotangent_order(doc.ring, dvr);
  out << "cotangent-order: "
      << (ct.infinite ? std::string("infinite") : std::to_string(ct.exponent)) << "\n";
  if (doc.algebra) {
    SurjectionCertificate cert =
        surjection_eta_inequality(doc.ring, *doc.algebra, doc.images, *doc.lambda);
    out << "surjective: " << (cert.surjective ? 1 : 0) << "\n";
    out << "theta-compatible: " << (cert.theta_compatible ? 1 : 0) << "\n";
    out << "eta-exponent: " << cert.eta_exponent << "\n";
    if (!cert.preconditions())
      throw std::invalid_argument("presented map is not a compatible surjection");
    if (!cert.inequality_holds)
      throw std::logic_error(
          "cotangent-order inequality violated: #(p/p^2) < #(O/eta) across a surjection");
  }
}

void report_bundle(std::ostream& out, const std::string& id, const BundleDocument& b) {
  out << "instance: " << id << "\n";
  out << "level: " << b.level << "\n";
  AlgebraCertificate acert = validate_algebra(b.algebra);
  if (!acert.all_pass()) throw std::invalid_argument("algebra axioms fail: " + acert.summary());
  ModuleCertificate mcert = validate_module(b.algebra, b.module);
  if (!mcert.all_pass()) throw std::invalid_argument("module axioms fail: " + mcert.summary());
  report_algebra(out, id + "/algebra", b.algebra, b.lambda);
  CongruenceData md = congruence_module(b.algebra, b.module, b.lambda);
  out << "eta-module: " << md.eta_exponent << "\n";
  out << "module-divisors:";
  for (long d : md.elementary_divisors) out << " " << d;
  out << "\n";
  if (b.pairing_perfect) {
    PairingInstance p{b.algebra, b.algebra, b.module, b.module, b.gram, b.lambda, b.lambda};
    report_pairing(out, id + "/pairing", p);
  }
}

void dispatch_file(std::ostream& out, const fs::path& path) {
  DocNode doc = parse_file(path.string());
  std::string kind = doc.need("kind");
  std::string id = path.filename().string();
  if (kind == "flat-algebra") {
    AlgebraDocument ad = parse_algebra_document(doc);
    Character lam = resolve_lambda(ad);
    report_algebra(out, id, ad.algebra, lam);
    report_detect(out, id, ad.algebra, lam);
  } else if (kind == "pairing-instance") {
    PairingInstance p = parse_pairing_document(doc);
    report_pairing(out, id, p);
  } else if (kind == "local-ring") {
    Dvr dvr = parse_prime(doc);
    PresentationDocument pd = parse_presentation_document(doc);
    report_presentation(out, id, pd, dvr);
  } else if (kind == "msym-bundle") {
    BundleDocument bd = parse_bundle_document(doc);
    report_bundle(out, id, bd);
  } else {
    throw ParseError("unknown document kind '" + kind + "'");
  }
}

int guarded(Output& output, const std::string& op, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ParseError& e) {
    output.body << "error: code=2 op=" << op << " msg=" << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    output.body << "error: code=3 op=" << op << " msg=" << e.what() << "\n";
    return 3;
  } catch (const std::logic_error& e) {
    output.body << "error: code=1 op=" << op << " msg=" << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact congruence modules over Z_(p): verification driver"};
  app.require_subcommand(1);
  bool timings = false;
  app.add_flag("--timings", timings, "append per-instance wall times to the report");

  std::string input, out_path, dir;
  long level = 11, prime_bound = 0, rank_bound = 4, count = 10;
  std::string prime_str = "5";
  std::size_t system_index = 0;
  unsigned long seed = 1;

  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "also write the report to this file");
  };

  CLI::App* eta = app.add_subcommand("eta", "congruence ideal of an algebra document, both routes");
  eta->add_option("--input", input, "flat-algebra document")->required();
  add_out(eta);

  CLI::App* detect = app.add_subcommand("detect", "congruence detection with witness search");
  detect->add_option("--input", input, "flat-algebra document")->required();
  add_out(detect);

  CLI::App* verify =
      app.add_subcommand("verify-pairing", "duality-transfer hypotheses and exponents");
  verify->add_option("--input", input, "pairing-instance document")->required();
  add_out(verify);

  CLI::App* cotangent =
      app.add_subcommand("cotangent", "cotangent order of a presented local ring");
  cotangent->add_option("--input", input, "local-ring document")->required();
  add_out(cotangent);

  CLI::App* synth = app.add_subcommand("synth", "generate validated random fixtures");
  synth->add_option("--seed", seed, "random seed")->required();
  synth->add_option("--count", count, "number of instances");
  synth->add_option("--rank-bound", rank_bound, "maximal algebra rank (<= 8)");
  synth->add_option("--prime", prime_str, "the prime p");
  synth->add_option("--out-dir", dir, "output directory")->required();
  add_out(synth);

  CLI::App* msym = app.add_subcommand("msym", "modular-symbols instance factory");
  msym->add_option("--level", level, "level N")->required();
  msym->add_option("--prime", prime_str, "the prime p")->required();
  msym->add_option("--system", system_index, "designated eigensystem index");
  msym->add_option("--prime-bound", prime_bound, "Hecke prime bound (default: Sturm)");
  msym->add_option("--out-file", input, "write the exported bundle document here");
  add_out(msym);

  CLI::App* suite = app.add_subcommand("run-suite", "verify every document in a directory");
  suite->add_option("--dir", dir, "fixture directory")->required();
  add_out(suite);

  CLI11_PARSE(app, argc, argv);

  Output output;
  output.out_path = out_path;
  int status = 0;

  if (eta->parsed() || detect->parsed()) {
    status = guarded(output, eta->parsed() ? "eta" : "detect", [&] {
      DocNode doc = parse_file(input);
      AlgebraDocument ad = parse_algebra_document(doc);
      Character lam = resolve_lambda(ad);
      output.body << "report: " << (eta->parsed() ? "eta" : "detect") << "\n";
      if (eta->parsed())
        report_algebra(output.body, fs::path(input).filename().string(), ad.algebra, lam);
      else
        report_detect(output.body, fs::path(input).filename().string(), ad.algebra, lam);
    });
  } else if (verify->parsed()) {
    status = guarded(output, "verify-pairing", [&] {
      DocNode doc = parse_file(input);
      PairingInstance p = parse_pairing_document(doc);
      output.body << "report: verify-pairing\n";
      report_pairing(output.body, fs::path(input).filename().string(), p);
    });
  } else if (cotangent->parsed()) {
    status = guarded(output, "cotangent", [&] {
      DocNode doc = parse_file(input);
      Dvr dvr = parse_prime(doc);
      PresentationDocument pd = parse_presentation_document(doc);
      output.body << "report: cotangent\n";
      report_presentation(output.body, fs::path(input).filename().string(), pd, dvr);
    });
  } else if (synth->parsed()) {
    status = guarded(output, "synth", [&] {
      if (rank_bound > 8) throw std::invalid_argument("rank bound exceeds 8");
      Dvr dvr{Int(prime_str)};
      fs::create_directories(dir);
      synth::Rng rng(seed);
      output.body << "report: synth\n";
      for (long i = 0; i < count; ++i) {
        FlatAlgebra t =
            synth::random_split_algebra(dvr, static_cast<std::size_t>(rank_bound), rng);
        Character lam = character_from_row(t, 0);
        char name[64];
        std::snprintf(name, sizeof(name), "algebra-%04ld.doc", i);
        {
          std::ofstream f(fs::path(dir) / name);
          write_algebra_document(f, t, lam);
        }
        PairingInstance pair = synth::construct_dual_pair(t, lam, seed * 1000003 + i);
        std::snprintf(name, sizeof(name), "pair-%04ld.doc", i);
        {
          std::ofstream f(fs::path(dir) / name);
          write_pairing_document(f, pair);
        }
        output.body << "instance: " << i << " rank=" << t.rank() << " eta=" << eta_wiles(t, lam)
                    << "\n";
      }
      output.body << "generated: " << count << "\n";
    });
  } else if (msym->parsed()) {
    status = guarded(output, "msym", [&] {
      Dvr dvr{Int(prime_str)};
      ManinSpace space(level);
      ExportBundle bundle = localize_and_export(space, dvr, system_index, prime_bound);
      output.body << "report: msym\n";
      output.body << "level: " << bundle.level << "\n";
      output.body << "genus: " << bundle.genus << "\n";
      output.body << "cuspidal-rank: " << space.cuspidal_rank() << "\n";
      output.body << "systems-in-class: " << bundle.class_members.size() << "\n";
      output.body << "algebra-rank: " << bundle.t.rank() << "\n";
      output.body << "pairing: " << bundle.pairing_cert.summary() << "\n";
      report_algebra(output.body, "exported", bundle.t, bundle.lambda);
      report_detect(output.body, "exported", bundle.t, bundle.lambda);
      if (!input.empty()) {
        std::ofstream f(input);
        write_bundle_document(f, bundle);
        output.body << "written: " << input << "\n";
      }
    });
  } else if (suite->parsed()) {
    output.body << "report: run-suite\n";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".doc")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    long pass = 0, fail = 0;
    for (const fs::path& f : files) {
      auto start = std::chrono::steady_clock::now();
      int rc = guarded(output, "run-suite", [&] { dispatch_file(output.body, f); });
      if (timings) {
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", secs);
        output.body << "timing: " << f.filename().string() << " " << buf << "\n";
      }
      if (rc == 0) {
        ++pass;
      } else {
        ++fail;
        status = std::max(status, rc);
      }
    }
    output.body << "suite: files=" << files.size() << " pass=" << pass << " fail=" << fail
                << "\n";
  }

  return status;
}
