#include "congmod/document.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "congmod/synth.hpp"
#include "test_util.hpp"

using namespace congmod;
using namespace congmod::testutil;

namespace {

template <typename WriteFn>
std::string serialize(WriteFn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

}  // namespace

TEST(Rationals, CanonicalForm) {
  EXPECT_EQ(rat_to_string(make_rat(4, -6)), "-2/3");
  EXPECT_EQ(rat_to_string(Rat(5)), "5/1");
  EXPECT_EQ(*rat_from_string("7"), Rat(7));
  EXPECT_EQ(*rat_from_string("-3/9"), make_rat(-1, 3));
  EXPECT_FALSE(rat_from_string("1/0").has_value());
  EXPECT_FALSE(rat_from_string("x").has_value());
}

TEST(Document, AlgebraRoundTripIsByteStable) {
  Dvr o(7);
  FlatAlgebra t = algebra_from_eigensystem(rational_eigensystem(o, {{1, 3}, {50, 3}, {8, 10}}));
  Character lam = character_from_row(t, 0);
  std::string first = serialize([&](std::ostream& s) { write_algebra_document(s, t, lam); });
  std::istringstream in(first);
  AlgebraDocument parsed = parse_algebra_document(parse_document(in));
  ASSERT_TRUE(parsed.lambda.has_value());
  std::string second = serialize(
      [&](std::ostream& s) { write_algebra_document(s, parsed.algebra, parsed.lambda); });
  EXPECT_EQ(first, second);
  EXPECT_EQ(eta_wiles(parsed.algebra, *parsed.lambda), eta_wiles(t, lam));
}

TEST(Document, PairingRoundTripIsByteStable) {
  Dvr o(5);
  synth::Rng rng(31);
  FlatAlgebra t = synth::random_split_algebra(o, 4, rng);
  PairingInstance p = synth::construct_dual_pair(t, character_from_row(t, 0), 99);
  std::string first = serialize([&](std::ostream& s) { write_pairing_document(s, p); });
  std::istringstream in(first);
  PairingInstance parsed = parse_pairing_document(parse_document(in));
  std::string second = serialize([&](std::ostream& s) { write_pairing_document(s, parsed); });
  EXPECT_EQ(first, second);
  EXPECT_TRUE(verify_pairing_hypotheses(parsed).all_pass());
}

TEST(Document, PresentationRoundTripIsByteStable) {
  Dvr o(5);
  LocalRingPresentation r;
  r.num_variables = 2;
  Polynomial f1, f2;
  f1.terms.push_back({{2, 0}, Rat(1)});
  f1.terms.push_back({{1, 0}, Rat(-125)});
  f2.terms.push_back({{0, 1}, Rat(25)});
  r.relations = {f1, f2};
  r.theta_point = {Rat(0), Rat(0)};
  std::string first =
      serialize([&](std::ostream& s) { write_presentation_document(s, r, o.prime()); });
  std::istringstream in(first);
  PresentationDocument parsed = parse_presentation_document(parse_document(in));
  std::string second =
      serialize([&](std::ostream& s) { write_presentation_document(s, parsed.ring, o.prime()); });
  EXPECT_EQ(first, second);
}

TEST(Document, BundleRoundTripIsByteStable) {
  ManinSpace m(11);
  Dvr o(7);
  ExportBundle bundle = localize_and_export(m, o, 0);
  std::string first = serialize([&](std::ostream& s) { write_bundle_document(s, bundle); });
  std::istringstream in(first);
  BundleDocument parsed = parse_bundle_document(parse_document(in));
  EXPECT_EQ(parsed.level, 11);
  EXPECT_EQ(parsed.genus, 1);
  EXPECT_TRUE(validate_module(parsed.algebra, parsed.module).all_pass());
  // re-serialize through a fresh bundle shell
  ExportBundle shell = bundle;
  shell.t = parsed.algebra;
  shell.lambda = parsed.lambda;
  shell.module = parsed.module;
  shell.gram = parsed.gram;
  std::string second = serialize([&](std::ostream& s) { write_bundle_document(s, shell); });
  EXPECT_EQ(first, second);
}

TEST(Document, ParseErrors) {
  auto parse_str = [](const std::string& s) {
    std::istringstream in(s);
    return parse_document(in);
  };
  EXPECT_THROW(parse_str("nonsense\n"), ParseError);
  EXPECT_THROW(parse_str("congmod-doc v1\nkind: flat-algebra\n"), ParseError);  // no end
  EXPECT_THROW(parse_str("congmod-doc v1\nbroken line without colon\nend\n"), ParseError);
  DocNode doc = parse_str("congmod-doc v1\nkind: flat-algebra\nprime: 5\nend\n");
  EXPECT_THROW(parse_algebra_document(doc), ParseError);  // missing algebra block
  DocNode doc2 = parse_str(
      "congmod-doc v1\nkind: flat-algebra\nprime: 5\n"
      "begin algebra\nrank: 1\nunit: 1/1\nsc: 0 0 0 zzz\nend algebra\nend\n");
  EXPECT_THROW(parse_algebra_document(doc2), ParseError);
}

TEST(Document, CommentsAndBlankLinesIgnored) {
  std::istringstream in(
      "# fixture\n\ncongmod-doc v1\nkind: flat-algebra\nprime: 5\n"
      "begin algebra\nrank: 1\nunit: 1/1\nsc: 0 0 0 1/1\nend algebra\nlambda: 1/1\nend\n");
  AlgebraDocument doc = parse_algebra_document(parse_document(in));
  EXPECT_EQ(doc.algebra.rank(), 1u);
  EXPECT_TRUE(doc.lambda.has_value());
}
