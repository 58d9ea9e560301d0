#include "doctest.h"
#include "testkit.hpp"

#include "chasekit/text.hpp"

using namespace chasekit;
using namespace testkit;

namespace {

SigPtr sig_pr() { return make_signature({}, {{"P", 1}, {"R", 2}}); }

}  // namespace

TEST_CASE("prenex examples") {
  auto sig = sig_pr();
  // P(x): nothing to do
  PrenexResult p1 = prenex(parse_formula("P(x)", *sig), Context({"x"}));
  CHECK(p1.bound.empty());
  CHECK(p1.matrix.to_formula() == parse_formula("P(x)", *sig));
  // nested existentials hoist; oracle = small-structure equivalence
  Formula f2 = parse_formula("exists y. R(x,y) & (exists z. R(y,z))", *sig);
  PrenexResult p2 = prenex(f2, Context({"x"}));
  CHECK(p2.bound.size() == 2);
  CHECK(p2.matrix.atoms.size() == 2);
  Formula back2 = Formula::exists(p2.bound, p2.matrix.to_formula());
  CHECK(semantically_equivalent(f2, back2, Context({"x"}), sig, 3));
  // reflexivity padding for an unused bound variable
  Formula f3 = parse_formula("exists y. P(x)", *sig);
  PrenexResult p3 = prenex(f3, Context({"x"}));
  REQUIRE(p3.bound.size() == 1);
  REQUIRE(p3.matrix.atoms.size() == 2);
  const Atom& pad = p3.matrix.atoms[1];
  CHECK(pad.is_eq());
  CHECK(pad.lhs() == Term::var(p3.bound[0]));
  CHECK(pad.rhs() == Term::var(p3.bound[0]));
  CHECK(semantically_equivalent(f3, Formula::exists(p3.bound, p3.matrix.to_formula()),
                                Context({"x"}), sig, 3));
}

TEST_CASE("normalize_sequent examples") {
  auto sig = make_signature({}, {{"P", 1}, {"Q", 1}, {"R", 2}});
  {
    Sequent s = parse_sequent("P(x) |-[x] exists y. R(x,y)", *sig);
    NormalSequent ns = normalize_sequent(s);
    CHECK(print_sequent(ns.to_sequent()) == "P(x) |-[x] exists y. P(x) & R(x,y)");
    CHECK(sequents_equivalent(s, ns.to_sequent(), sig, 3));
  }
  {
    Sequent s = parse_sequent("R(x,y) |-[x,y] Q(y)", *sig);
    NormalSequent ns = normalize_sequent(s);
    CHECK(ns.bound.empty());
    CHECK(print_sequent(ns.to_sequent()) == "R(x,y) |-[x,y] R(x,y) & Q(y)");
    CHECK(sequents_equivalent(s, ns.to_sequent(), sig, 3));
  }
  {
    Sequent s = parse_sequent("true |-[] true", *sig);
    NormalSequent ns = normalize_sequent(s);
    CHECK(ns.ctx.empty());
    CHECK(ns.bound.empty());
    CHECK(ns.matrix.atoms.empty());
  }
}

TEST_CASE("normalization: side condition and equivalence on random sequents") {
  Rng rng(seed_from_env() + 10);
  auto sig = sig_pr();
  int done = 0;
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<std::string> vars = {"x", "y"};
    Sequent s;
    s.ctx = Context(vars);
    s.ante = random_regular(rng, *sig, vars, 1, 2);
    s.cons = {random_regular(rng, *sig, vars, 1, 2)};
    NormalSequent ns = normalize_sequent(s);
    // the normality side condition, as stated
    for (auto& a : ns.ante.atoms)
      CHECK(horn_entails(ns.matrix, a, ns.ctx.extended(ns.bound.vars())));
    // semantic equivalence on every structure with <= 3 elements
    CHECK(sequents_equivalent(s, ns.to_sequent(), sig, 3));
    ++done;
  }
  CHECK(done == 40);
}

TEST_CASE("horn_entails matches the bounded derivation-search oracle") {
  auto sig = make_signature({}, {{"P", 1}, {"Q", 1}, {"R", 2}});
  Context ctx({"x", "y"});
  auto H = [&](const std::string& s) {
    auto h = as_horn(parse_formula(s, *sig));
    REQUIRE(h);
    return *h;
  };
  // the spec's examples
  CHECK(horn_entails(H("R(x,y) & x = y"), Atom::relation("R", {Term::var("y"), Term::var("x")}),
                     ctx));
  CHECK_FALSE(horn_entails(H("P(x)"), Atom::relation("Q", {Term::var("x")}), ctx));
  CHECK(horn_entails(HornFormula{}, Atom::equality(Term::var("x"), Term::var("x")), ctx));
  // randomized cross-check
  Rng rng(seed_from_env() + 11);
  for (int iter = 0; iter < 150; ++iter) {
    std::vector<std::string> vars = {"x", "y"};
    HornFormula gamma = random_horn(rng, *sig, vars, 3, true);
    Atom alpha = random_atom(rng, *sig, vars, true);
    bool mine = horn_entails(gamma, alpha, ctx);
    bool oracle = horn_search_oracle(gamma, alpha, 4);
    CHECK(mine == oracle);
  }
}

TEST_CASE("horn_entails handles function terms") {
  auto sig = make_signature({{"f", 1}, {"c", 0}}, {{"P", 1}});
  Context ctx({"x"});
  auto at = [&](const std::string& s) {
    Formula f = parse_formula(s, *sig);
    REQUIRE(f.kind() == Formula::Kind::atom);
    return f.as_atom();
  };
  HornFormula gamma;
  gamma.atoms = {at("x = c"), at("P(f(c))")};
  CHECK(horn_entails(gamma, at("P(f(x))"), ctx));
  CHECK(horn_entails(gamma, at("f(x) = f(c)"), ctx));
  CHECK_FALSE(horn_entails(gamma, at("P(c)"), ctx));
}

TEST_CASE("eliminate_equality produces E_sigma and an equality-free theory") {
  Theory t = parse_theory("rel R/2\naxiom a1: x = y |-[x,y] R(x,y)\n");
  EqElimResult ee = eliminate_equality(t);
  CHECK(theory_equality_free(ee.theory));
  // direct replacement of the axiom
  const Sequent* a1 = ee.theory.find("a1");
  REQUIRE(a1);
  CHECK(print_sequent(*a1) == "E(x,y) |-[x,y] R(x,y)");
  // E_sigma axioms hold in e(A) for random A (the [DERIVED] oracle)
  Rng rng(seed_from_env() + 12);
  for (int iter = 0; iter < 30; ++iter) {
    Structure a = random_structure(rng, t.sig, 3);
    Structure ea = e_expand(a, ee.esig.e);
    for (auto& [name, ax] : eq_theory(ee.esig).axioms) CHECK(validates(ea, ax));
  }
  // empty theory over {R/2}: only E_sigma, and its axioms are the stated ones
  Theory empty = parse_theory("rel R/2\n");
  EqElimResult e2 = eliminate_equality(empty);
  CHECK(e2.theory.axioms.size() == 5);  // refl, sym, trans, 2 positions of R
  for (auto& [name, ax] : e2.theory.axioms) {
    Structure a = random_structure(rng, empty.sig, 3);
    CHECK(validates(e_expand(a, e2.esig.e), ax));
  }
}

TEST_CASE("back translation inverts the E replacement") {
  Rng rng(seed_from_env() + 13);
  auto sig = sig_pr();
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::string> vars = {"x", "y"};
    Formula f = random_regular(rng, *sig, vars, 2, 3, true);
    Formula e = replace_equality(f, "E");
    CHECK(restore_equality(e, "E") == f);
  }
}

TEST_CASE("satisfaction transfer: A |= phi iff e(A) |= phi^E") {
  Rng rng(seed_from_env() + 14);
  auto sig = sig_pr();
  for (int iter = 0; iter < 100; ++iter) {
    Structure a = random_structure(rng, sig, 3);
    if (a.elems.empty()) continue;
    std::vector<std::string> vars = {"x", "y"};
    Formula f = random_regular(rng, *sig, vars, 2, 3, true);
    Structure ea = e_expand(a, "E");
    Formula fe = replace_equality(f, "E");
    ElemAssignment m{{"x", rng.pick(0, (int)a.elems.size() - 1)},
                     {"y", rng.pick(0, (int)a.elems.size() - 1)}};
    CHECK(evaluate(a, f, m) == evaluate(ea, fe, m));
  }
}

TEST_CASE("eliminate_functions flattens and preserves the fragment") {
  Theory t = parse_theory("fun f/1\nrel P/1\naxiom a1: true |-[x] P(f(x))\n");
  FnElimResult fe = eliminate_functions(t);
  CHECK(fe.sig->relational());
  const Sequent* a1 = fe.theory.find("a1");
  REQUIRE(a1);
  CHECK(classify_fragment(*a1) == Fragment::regular);
  CHECK(print_sequent(*a1) == "true |-[x] exists z_f_0. F_f(x,z_f_0) & P(z_f_0)");
  CHECK(fe.theory.find("F_f_total"));
  CHECK(fe.theory.find("F_f_sv"));
  // constants flatten the same way
  Theory tc = parse_theory("fun c/0\nrel P/1\naxiom a1: true |-[] P(c)\n");
  FnElimResult fc = eliminate_functions(tc);
  CHECK(print_sequent(*fc.theory.find("a1")) == "true |-[] exists z_c_0. F_c(z_c_0) & P(z_c_0)");
  // relational input is untouched
  Theory tr = parse_theory("rel P/1\naxiom a1: P(x) |-[x] P(x)\n");
  FnElimResult fr = eliminate_functions(tr);
  CHECK_FALSE(fr.changed);
  CHECK(print_theory(fr.theory) == print_theory(tr));
}

TEST_CASE("flattening is semantically faithful via graph structures") {
  Rng rng(seed_from_env() + 15);
  auto sig = make_signature({{"f", 1}}, {{"P", 1}, {"R", 2}});
  Theory t;
  t.sig = sig;
  FnElimResult fe = eliminate_functions(t);
  for (int iter = 0; iter < 100; ++iter) {
    Structure a = random_structure(rng, sig, 3);
    if (a.elems.empty()) continue;
    std::vector<std::string> vars = {"x"};
    Formula phi = random_regular(rng, *sig, vars, 2, 3, true);
    // inject function terms
    Formula with_f = parse_formula("P(f(x))", *sig);
    Formula full = Formula::conj({phi, with_f});
    Formula flat = flatten_formula(full, Context({"x"}), *sig, fe.graph_of);
    CHECK(classify_fragment(flat) != Fragment::unsupported);
    Structure g = structure_of_graphs(a, fe);
    ElemAssignment m{{"x", rng.pick(0, (int)a.elems.size() - 1)}};
    CHECK(evaluate(a, full, m) == evaluate(g, flat, m));
  }
}

TEST_CASE("structure_of_graphs round trip and error") {
  auto sig = make_signature({{"f", 1}}, {});
  Structure a;
  a.sig = sig;
  a.elems = {"0", "1"};
  a.funs["f"][{0}] = 1;
  a.funs["f"][{1}] = 0;
  Theory t;
  t.sig = sig;
  FnElimResult fe = eliminate_functions(t);
  Structure g = structure_of_graphs(a, fe);
  CHECK(g.rels.at("F_f").count({0, 1}) == 1);
  CHECK(g.rels.at("F_f").count({1, 0}) == 1);
  Structure back = structure_from_graphs(g, sig, fe);
  CHECK(back == a);
  // a non-functional graph is rejected on the way back
  Structure bad = g;
  bad.rels["F_f"] = {{0, 1}, {0, 0}};
  CHECK_THROWS_AS(structure_from_graphs(bad, sig, fe), NotFunctional);
}

TEST_CASE("eliminate_equality requires a relational signature") {
  Theory t = parse_theory("fun f/1\nrel P/1\naxiom a: P(x) |-[x] P(f(x))\n");
  CHECK_THROWS_AS(eliminate_equality(t), NotRelational);
}
