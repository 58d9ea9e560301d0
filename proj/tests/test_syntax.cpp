#include "doctest.h"
#include "testkit.hpp"

#include "chasekit/text.hpp"

using namespace chasekit;

namespace {

SigPtr sig_pr() {
  return make_signature({}, {{"P", 1}, {"R", 2}, {"Q", 1}});
}

Formula F(const std::string& s, SigPtr sig) { return parse_formula(s, *sig); }

}  // namespace

TEST_CASE("substitution basics") {
  auto sig = sig_pr();
  Context xy({"x", "y"});
  Formula rxy = F("R(x,y)", sig);
  // identity substitution
  VarMap id{{"x", Term::var("x")}, {"y", Term::var("y")}};
  CHECK(substitute(rxy, id, xy) == rxy);
  // both variables to the same constant
  auto sigc = make_signature({{"c", 0}}, {{"R", 2}});
  Formula rx1x2 = parse_formula("R(x1,x2)", *sigc);
  VarMap both{{"x1", Term::app("c", {})}, {"x2", Term::app("c", {})}};
  Formula rcc = substitute(rx1x2, both, Context());
  CHECK(print_formula(rcc) == "R(c,c)");
  // capture avoidance: substituting x := y into ∃y R(x,y) renames the binder
  Formula exy = F("exists y. R(x,y)", sig);
  VarMap tox{{"x", Term::var("y")}};
  Formula out = substitute(exy, tox, Context({"y"}));
  REQUIRE(out.kind() == Formula::Kind::exists);
  CHECK(out.bound()[0] != "y");
  CHECK(alpha_equal(out, parse_formula("exists z. R(y,z)", *sig)));
}

TEST_CASE("substitution errors") {
  auto sig = sig_pr();
  Formula rxy = F("R(x,y)", sig);
  VarMap partial{{"x", Term::var("x")}};
  CHECK_THROWS_AS(substitute(rxy, partial, Context({"x", "y"})), UnboundVariable);
}

TEST_CASE("weaken") {
  auto sig = sig_pr();
  Formula px = F("P(x)", sig);
  CHECK(weaken(px, Context({"x"}), Context({"x", "y"})) == px);
  CHECK(weaken(Formula::top(), Context(), Context({"x"})) == Formula::top());
  CHECK_THROWS_AS(weaken(F("R(x,y)", sig), Context({"x", "y"}), Context({"x"})),
                  NotASubcontext);
}

TEST_CASE("classify_fragment") {
  auto sig = sig_pr();
  CHECK(classify_fragment(F("P(x) & Q(x)", sig)) == Fragment::horn);
  CHECK(classify_fragment(F("exists y. R(x,y)", sig)) == Fragment::regular);
  Sequent s = parse_sequent("P(x) |-[x] R(x,x) | Q(x)", *sig);
  CHECK(classify_fragment(s) == Fragment::geometric);
}

TEST_CASE("substitution composition is alpha-stable (randomized)") {
  testkit::Rng rng(testkit::seed_from_env() + 1);
  auto sig = sig_pr();
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<std::string> vars = {"x", "y"};
    Formula f = testkit::random_regular(rng, *sig, vars, 2, 3);
    // f : map x,y -> terms over {u,v}; g : map u,v -> terms over {s,t}
    auto rterm = [&](std::vector<std::string> pool) {
      return Term::var(pool[rng.pick(0, (int)pool.size() - 1)]);
    };
    VarMap fm{{"x", rterm({"u", "v"})}, {"y", rterm({"u", "v"})}};
    VarMap gm{{"u", rterm({"s", "t"})}, {"v", rterm({"s", "t"})}};
    Context uv({"u", "v"}), st({"s", "t"});
    Formula one = substitute(substitute(f, fm, uv), gm, st);
    VarMap comp;
    for (auto& [v, t] : fm) comp[v] = substitute(t, gm);
    Formula two = substitute(f, comp, st);
    CHECK(alpha_equal(one, two));
  }
}

TEST_CASE("substitute preserves the relation multiset") {
  testkit::Rng rng(testkit::seed_from_env() + 2);
  auto sig = sig_pr();
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<std::string> vars = {"x", "y"};
    Formula f = testkit::random_regular(rng, *sig, vars, 2, 3);
    VarMap m{{"x", Term::var("y")}, {"y", Term::var("y")}};
    Formula g = substitute(f, m, Context({"y"}));
    CHECK(relation_multiset(f) == relation_multiset(g));
  }
}

TEST_CASE("classify is stable under weakening") {
  testkit::Rng rng(testkit::seed_from_env() + 3);
  auto sig = sig_pr();
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<std::string> vars = {"x"};
    Formula f = testkit::random_regular(rng, *sig, vars, 2, 3);
    Formula w = weaken(f, Context({"x"}), Context({"x", "zz"}));
    CHECK(classify_fragment(f) == classify_fragment(w));
  }
}

TEST_CASE("alpha equivalence is an equivalence and substitution respects it") {
  testkit::Rng rng(testkit::seed_from_env() + 4);
  auto sig = sig_pr();
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<std::string> vars = {"x"};
    Formula f = testkit::random_regular(rng, *sig, vars, 2, 3);
    CHECK(alpha_equal(f, f));
    // rename every binder apart deterministically via an identity substitute
    VarMap id{{"x", Term::var("x")}};
    Formula g = substitute(f, id, Context({"x"}));
    CHECK(alpha_equal(f, g));
    CHECK(alpha_equal(g, f));
    VarMap m{{"x", Term::var("w")}};
    CHECK(alpha_equal(substitute(f, m, Context({"w"})), substitute(g, m, Context({"w"}))));
  }
}

TEST_CASE("parser and printer round trip") {
  auto sig = make_signature({{"f", 1}, {"c", 0}}, {{"P", 1}, {"R", 2}});
  for (const char* text : {
           "P(x)",
           "true",
           "exists y1 y2. P(x) & R(x,y1) & y1 = y2",
           "P(c) & (exists y. R(f(x),y))",
           "f(f(c)) = c",
       }) {
    Formula f = parse_formula(text, *sig);
    Formula g = parse_formula(print_formula(f), *sig);
    CHECK(f == g);
  }
  Sequent s = parse_sequent("P(x) |-[x] exists y. R(x,y)", *sig);
  CHECK(print_sequent(s) == "P(x) |-[x] exists y. R(x,y)");
  Sequent s2 = parse_sequent(print_sequent(s), *sig);
  CHECK(alpha_equal(s, s2));
}

TEST_CASE("theory files parse and print deterministically") {
  std::string text =
      "rel P/1\n"
      "rel R/2\n"
      "axiom t1: P(x) |-[x] exists y. R(x,y)\n"
      "axiom t2: R(x,y) |-[x,y] Q(y)\n";
  CHECK_THROWS_AS(parse_theory(text), ParseError);  // Q undeclared
  std::string good =
      "rel P/1\nrel Q/1\nrel R/2\n"
      "axiom t1: P(x) |-[x] exists y. R(x,y)\n"
      "axiom t2: R(x,y) |-[x,y] Q(y)\n";
  Theory t = parse_theory(good);
  CHECK(t.axioms.size() == 2);
  std::string printed = print_theory(t);
  Theory t2 = parse_theory(printed);
  CHECK(print_theory(t2) == printed);
}

TEST_CASE("structure files round trip") {
  std::string text =
      "carrier: a b c\n"
      "rel R: (a,b) (b,c)\n"
      "rel P: b\n"
      "fun f: a->b b->c c->c\n";
  Structure a = parse_structure(text);
  std::string printed = print_structure(a);
  Structure b = parse_structure(printed);
  CHECK(a == b);
  CHECK(print_structure(b) == printed);
  // empty tables keep their arity
  std::string empt = "carrier: a\nrel R/2:\nfun f/1: a->a\n";
  Structure e = parse_structure(empt);
  CHECK(e.sig->rel_arity("R") == 2);
  Structure e2 = parse_structure(print_structure(e));
  CHECK(e == e2);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_formula("P(x", *sig_pr());
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.col > 1);
  }
}
