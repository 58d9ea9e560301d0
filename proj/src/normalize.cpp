#include "chasekit/normalize.hpp"

#include <algorithm>
#include <functional>

#include "chasekit/semantics.hpp"

namespace chasekit {

Sequent NormalSequent::to_sequent() const {
  Sequent s;
  s.ctx = ctx;
  s.ante = ante.to_formula();
  s.cons = {Formula::exists(bound, matrix.to_formula())};
  return s;
}

Theory NormalTheory::to_theory() const {
  Theory t;
  t.sig = sig;
  for (auto& [name, ns] : axioms) t.axioms.emplace_back(name, ns.to_sequent());
  return t;
}

bool NormalTheory::equality_free() const {
  for (auto& [name, ns] : axioms) {
    for (auto& a : ns.ante.atoms)
      if (a.is_eq()) return false;
    for (auto& a : ns.matrix.atoms)
      if (a.is_eq()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Prenex

namespace {

// Hoists all binders, renaming them fresh; no padding yet.
HornFormula prenex_core(const Formula& f, FreshNames& fresh, std::vector<std::string>& bound_out) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return HornFormula{{f.as_atom()}};
    case Formula::Kind::conj: {
      HornFormula h;
      for (auto& p : f.parts()) {
        HornFormula sub = prenex_core(p, fresh, bound_out);
        h.atoms.insert(h.atoms.end(), sub.atoms.begin(), sub.atoms.end());
      }
      return h;
    }
    case Formula::Kind::exists: {
      VarMap rename;
      for (auto& v : f.bound()) {
        std::string nv = fresh.fresh(v);
        bound_out.push_back(nv);
        rename[v] = Term::var(nv);
      }
      Formula body = f.body();
      for (auto& v : free_vars_ordered(body))
        if (!rename.count(v)) rename[v] = Term::var(v);
      body = substitute(body, rename, Context());
      return prenex_core(body, fresh, bound_out);
    }
  }
  throw Error("unreachable");
}

}  // namespace

PrenexResult prenex(const Formula& phi, const Context& ctx) {
  FreshNames fresh;
  fresh.reserve_all(ctx);
  for (auto& v : free_vars_ordered(phi)) fresh.reserve(v);
  std::vector<std::string> bound;
  HornFormula matrix = prenex_core(phi, fresh, bound);
  // padding: every bound variable must occur in some atom
  for (auto& y : bound) {
    bool occurs = false;
    for (auto& a : matrix.atoms) {
      std::vector<std::string> vs;
      for (auto& t : a.args) term_vars(t, vs);
      if (std::find(vs.begin(), vs.end(), y) != vs.end()) {
        occurs = true;
        break;
      }
    }
    if (!occurs) matrix.atoms.push_back(Atom::equality(Term::var(y), Term::var(y)));
  }
  return PrenexResult{Context(bound), std::move(matrix)};
}

// ---------------------------------------------------------------------------
// Normalization

NormalSequent normalize_sequent(const Sequent& s) {
  if (!s.regular_consequent()) throw NotRegular("disjunctive consequent cannot be normalized");
  if (classify_fragment(s) == Fragment::unsupported) throw NotRegular("not a regular sequent");
  // hoist antecedent existentials into the context (∃-left)
  PrenexResult pa = prenex(s.ante, s.ctx);
  Context full_ctx = s.ctx.extended(pa.bound.vars());
  // prenex the consequent, fresh with respect to the extended context
  PrenexResult pc = prenex(s.cons_formula(), full_ctx);
  NormalSequent ns;
  ns.ctx = full_ctx;
  ns.ante = pa.matrix;
  ns.bound = pc.bound;
  // matrix: antecedent first, then consequent matrix, duplicates dropped
  ns.matrix = pa.matrix;
  for (auto& a : pc.matrix.atoms)
    if (std::find(ns.matrix.atoms.begin(), ns.matrix.atoms.end(), a) == ns.matrix.atoms.end())
      ns.matrix.atoms.push_back(a);
  return ns;
}

NormalTheory normalize_theory(const Theory& t) {
  NormalTheory nt;
  nt.sig = t.sig;
  for (auto& [name, ax] : t.axioms) nt.axioms.emplace_back(name, normalize_sequent(ax));
  return nt;
}

bool is_normal(const Sequent& s) {
  if (!s.regular_consequent()) return false;
  auto ante = as_horn(s.ante);
  if (!ante) return false;
  const Formula& c = s.cons_formula();
  Context bound;
  HornFormula matrix;
  if (c.kind() == Formula::Kind::exists) {
    auto m = as_horn(c.body());
    if (!m) return false;
    bound = c.bound();
    matrix = *m;
  } else {
    auto m = as_horn(c);
    if (!m) return false;
    matrix = *m;
  }
  return horn_entails_all(matrix, *ante, s.ctx.extended(bound.vars()));
}

bool theory_is_normal(const Theory& t) {
  for (auto& [name, ax] : t.axioms)
    if (!is_normal(ax)) return false;
  return true;
}

namespace {

bool formula_equality_free(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return !f.as_atom().is_eq();
    case Formula::Kind::conj:
      for (auto& p : f.parts())
        if (!formula_equality_free(p)) return false;
      return true;
    case Formula::Kind::exists:
      return formula_equality_free(f.body());
  }
  return true;
}

}  // namespace

bool theory_equality_free(const Theory& t) {
  for (auto& [name, ax] : t.axioms) {
    if (!formula_equality_free(ax.ante)) return false;
    for (auto& d : ax.cons)
      if (!formula_equality_free(d)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Congruence closure for Horn entailment over the empty theory

namespace {

struct CongruenceClosure {
  std::vector<Term> nodes;
  std::vector<int> parent;

  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return;
    if (x > y) std::swap(x, y);
    parent[y] = x;
  }
  int node_of(const Term& t) {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == t) return (int)i;
    nodes.push_back(t);
    parent.push_back((int)nodes.size() - 1);
    return (int)nodes.size() - 1;
  }
  void add_subterms(const Term& t) {
    node_of(t);
    for (auto& a : t.args()) add_subterms(a);
  }
  // congruence: f(a̅) ~ f(b̅) when arguments are pairwise equivalent
  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j) {
          if (find((int)i) == find((int)j)) continue;
          const Term& a = nodes[i];
          const Term& b = nodes[j];
          if (a.is_var() || b.is_var()) continue;
          if (a.head() != b.head() || a.args().size() != b.args().size()) continue;
          bool all = true;
          for (size_t k = 0; k < a.args().size(); ++k)
            if (find(node_of(a.args()[k])) != find(node_of(b.args()[k]))) {
              all = false;
              break;
            }
          if (all) {
            unite((int)i, (int)j);
            changed = true;
          }
        }
      }
    }
  }
};

}  // namespace

bool horn_entails(const HornFormula& gamma, const Atom& alpha, const Context& ctx) {
  (void)ctx;
  CongruenceClosure cc;
  for (auto& a : gamma.atoms)
    for (auto& t : a.args) cc.add_subterms(t);
  for (auto& t : alpha.args) cc.add_subterms(t);
  for (auto& a : gamma.atoms)
    if (a.is_eq()) cc.unite(cc.node_of(a.lhs()), cc.node_of(a.rhs()));
  cc.close();
  if (alpha.is_eq()) return cc.find(cc.node_of(alpha.lhs())) == cc.find(cc.node_of(alpha.rhs()));
  for (auto& a : gamma.atoms) {
    if (a.is_eq() || a.rel != alpha.rel || a.args.size() != alpha.args.size()) continue;
    bool all = true;
    for (size_t i = 0; i < a.args.size(); ++i)
      if (cc.find(cc.node_of(a.args[i])) != cc.find(cc.node_of(alpha.args[i]))) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

bool horn_entails_all(const HornFormula& gamma, const HornFormula& delta, const Context& ctx) {
  for (auto& a : delta.atoms)
    if (!horn_entails(gamma, a, ctx)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Elimination of equality

EqSignature make_eq_signature(SigPtr base) {
  std::string e = "E";
  int k = 0;
  while (base->has_rel(e) || base->has_fun(e)) e = "E" + std::to_string(k++);
  return EqSignature{std::move(base), e};
}

Theory eq_theory(const EqSignature& es) {
  auto sig = std::make_shared<Signature>(*es.base);
  sig->rels[es.e] = 2;
  Theory t;
  t.sig = sig;
  auto V = [](const char* v) { return Term::var(v); };
  auto E = [&](Term a, Term b) {
    return Formula::atom(Atom::relation(es.e, {std::move(a), std::move(b)}));
  };
  {
    Sequent s;
    s.ctx = Context({"x"});
    s.ante = Formula::top();
    s.cons = {E(V("x"), V("x"))};
    t.axioms.emplace_back(es.e + "_refl", std::move(s));
  }
  {
    Sequent s;
    s.ctx = Context({"x", "y"});
    s.ante = E(V("x"), V("y"));
    s.cons = {E(V("y"), V("x"))};
    t.axioms.emplace_back(es.e + "_sym", std::move(s));
  }
  {
    Sequent s;
    s.ctx = Context({"x", "y", "z"});
    s.ante = Formula::conj({E(V("x"), V("y")), E(V("y"), V("z"))});
    s.cons = {E(V("x"), V("z"))};
    t.axioms.emplace_back(es.e + "_trans", std::move(s));
  }
  // one congruence axiom per relation symbol per argument position
  for (auto& [r, ar] : es.base->rels) {
    for (int pos = 0; pos < ar; ++pos) {
      std::vector<std::string> ctx_vars;
      std::vector<Term> args, args2;
      for (int i = 0; i < ar; ++i) {
        std::string v = "x" + std::to_string(i);
        ctx_vars.push_back(v);
        args.push_back(Term::var(v));
        args2.push_back(Term::var(v));
      }
      std::string vp = "x" + std::to_string(pos) + "_";
      ctx_vars.push_back(vp);
      args2[pos] = Term::var(vp);
      Sequent s;
      s.ctx = Context(ctx_vars);
      s.ante = Formula::conj(
          {E(Term::var("x" + std::to_string(pos)), Term::var(vp)),
           Formula::atom(Atom::relation(r, args))});
      s.cons = {Formula::atom(Atom::relation(r, args2))};
      t.axioms.emplace_back(es.e + "_resp_" + r + "_" + std::to_string(pos), std::move(s));
    }
  }
  return t;
}

Formula replace_equality(const Formula& f, const std::string& e) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      const Atom& a = f.as_atom();
      if (a.is_eq()) return Formula::atom(Atom::relation(e, a.args));
      return f;
    }
    case Formula::Kind::conj: {
      std::vector<Formula> parts;
      for (auto& p : f.parts()) parts.push_back(replace_equality(p, e));
      return Formula::conj(std::move(parts));
    }
    case Formula::Kind::exists:
      return Formula::exists(f.bound(), replace_equality(f.body(), e));
  }
  throw Error("unreachable");
}

Formula restore_equality(const Formula& f, const std::string& e) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      const Atom& a = f.as_atom();
      if (!a.is_eq() && a.rel == e) return Formula::atom(Atom::equality(a.args[0], a.args[1]));
      return f;
    }
    case Formula::Kind::conj: {
      std::vector<Formula> parts;
      for (auto& p : f.parts()) parts.push_back(restore_equality(p, e));
      return Formula::conj(std::move(parts));
    }
    case Formula::Kind::exists:
      return Formula::exists(f.bound(), restore_equality(f.body(), e));
  }
  throw Error("unreachable");
}

Theory restore_equality(const Theory& t, const std::string& e) {
  Theory out;
  auto sig = std::make_shared<Signature>(*t.sig);
  sig->rels.erase(e);
  out.sig = sig;
  for (auto& [name, ax] : t.axioms) {
    Sequent s;
    s.ctx = ax.ctx;
    s.ante = restore_equality(ax.ante, e);
    for (auto& d : ax.cons) s.cons.push_back(restore_equality(d, e));
    out.axioms.emplace_back(name, std::move(s));
  }
  return out;
}

EqElimResult eliminate_equality(const Theory& t) {
  if (!t.sig->relational()) throw NotRelational("eliminate_equality requires a relational signature");
  EqElimResult out;
  out.esig = make_eq_signature(t.sig);
  out.theory = eq_theory(out.esig);
  for (auto& [name, ax] : t.axioms) {
    Sequent s;
    s.ctx = ax.ctx;
    s.ante = replace_equality(ax.ante, out.esig.e);
    for (auto& d : ax.cons) s.cons.push_back(replace_equality(d, out.esig.e));
    std::string n = name;
    while (out.theory.has(n)) n += "_";
    out.theory.axioms.emplace_back(n, std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elimination of function symbols

namespace {

// Rewrites one atom: innermost-leftmost function applications become fresh
// bound variables constrained by graph atoms.
struct Flattener {
  const Signature& sig;
  const std::map<std::string, std::string>& graph_of;
  FreshNames fresh;
  std::map<std::string, int> counters;

  std::string next_var(const std::string& f) {
    for (;;) {
      int k = counters[f]++;
      std::string cand = "z_" + f + "_" + std::to_string(k);
      std::string got = fresh.fresh(cand);
      if (got == cand) return cand;
      // name collided with ambient vars; keep bumping the counter
    }
  }

  Term flatten_term(const Term& t, std::vector<Atom>& constraints, std::vector<std::string>& bound) {
    if (t.is_var()) return t;
    std::vector<Term> args;
    for (auto& a : t.args()) args.push_back(flatten_term(a, constraints, bound));
    std::string z = next_var(t.head());
    bound.push_back(z);
    args.push_back(Term::var(z));
    constraints.push_back(Atom::relation(graph_of.at(t.head()), std::move(args)));
    return Term::var(z);
  }

  Formula flatten_atom(const Atom& a) {
    std::vector<Atom> constraints;
    std::vector<std::string> bound;
    Atom out = a;
    for (auto& t : out.args) t = flatten_term(t, constraints, bound);
    std::vector<Formula> parts;
    for (auto& c : constraints) parts.push_back(Formula::atom(c));
    parts.push_back(Formula::atom(out));
    return Formula::exists(Context(bound), Formula::conj(std::move(parts)));
  }

  Formula walk(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::atom:
        return flatten_atom(f.as_atom());
      case Formula::Kind::conj: {
        std::vector<Formula> parts;
        for (auto& p : f.parts()) parts.push_back(walk(p));
        return Formula::conj(std::move(parts));
      }
      case Formula::Kind::exists: {
        for (auto& v : f.bound()) fresh.reserve(v);
        return Formula::exists(f.bound(), walk(f.body()));
      }
    }
    throw Error("unreachable");
  }
};

}  // namespace

Formula flatten_formula(const Formula& f, const Context& ctx, const Signature& sig,
                        const std::map<std::string, std::string>& graph_of) {
  Flattener fl{sig, graph_of, {}, {}};
  fl.fresh.reserve_all(ctx);
  for (auto& v : free_vars_ordered(f)) fl.fresh.reserve(v);
  return fl.walk(f);
}

Formula unflatten_formula(const Formula& f, const std::map<std::string, std::string>& graph_of) {
  std::map<std::string, std::string> inverse;
  for (auto& [fn, gr] : graph_of) inverse[gr] = fn;
  std::function<Formula(const Formula&)> walk = [&](const Formula& g) -> Formula {
    switch (g.kind()) {
      case Formula::Kind::atom: {
        const Atom& a = g.as_atom();
        auto it = a.is_eq() ? inverse.end() : inverse.find(a.rel);
        if (it == inverse.end()) return g;
        std::vector<Term> args(a.args.begin(), a.args.end() - 1);
        return Formula::atom(Atom::equality(Term::app(it->second, std::move(args)), a.args.back()));
      }
      case Formula::Kind::conj: {
        std::vector<Formula> parts;
        for (auto& p : g.parts()) parts.push_back(walk(p));
        return Formula::conj(std::move(parts));
      }
      case Formula::Kind::exists:
        return Formula::exists(g.bound(), walk(g.body()));
    }
    throw Error("unreachable");
  };
  return walk(f);
}

FnElimResult eliminate_functions(const Theory& t) {
  FnElimResult out;
  if (t.sig->relational()) {
    out.sig = t.sig;
    out.theory = t;
    out.changed = false;
    return out;
  }
  out.changed = true;
  auto sig = std::make_shared<Signature>();
  sig->rels = t.sig->rels;
  for (auto& [f, ar] : t.sig->funs) {
    std::string g = "F_" + f;
    while (sig->rels.count(g) || t.sig->funs.count(g)) g += "_";
    sig->rels[g] = ar + 1;
    out.graph_of[f] = g;
  }
  out.sig = sig;
  Theory raw;
  raw.sig = sig;
  // F_Σ: totality and single-valuedness per function symbol
  for (auto& [f, ar] : t.sig->funs) {
    const std::string& g = out.graph_of[f];
    std::vector<std::string> xs;
    std::vector<Term> args;
    for (int i = 0; i < ar; ++i) {
      xs.push_back("x" + std::to_string(i));
      args.push_back(Term::var(xs.back()));
    }
    {
      Sequent s;
      s.ctx = Context(xs);
      s.ante = Formula::top();
      std::vector<Term> a2 = args;
      a2.push_back(Term::var("z"));
      s.cons = {Formula::exists(Context({"z"}), Formula::atom(Atom::relation(g, a2)))};
      std::string n = g + "_total";
      while (raw.has(n)) n += "_";
      raw.axioms.emplace_back(n, std::move(s));
    }
    {
      Sequent s;
      std::vector<std::string> ctx_vars = xs;
      ctx_vars.push_back("z");
      ctx_vars.push_back("z_");
      s.ctx = Context(ctx_vars);
      std::vector<Term> a1 = args, a2 = args;
      a1.push_back(Term::var("z"));
      a2.push_back(Term::var("z_"));
      s.ante = Formula::conj(
          {Formula::atom(Atom::relation(g, a1)), Formula::atom(Atom::relation(g, a2))});
      s.cons = {Formula::atom(Atom::equality(Term::var("z"), Term::var("z_")))};
      std::string n = g + "_sv";
      while (raw.has(n)) n += "_";
      raw.axioms.emplace_back(n, std::move(s));
    }
  }
  for (auto& [name, ax] : t.axioms) {
    Sequent s;
    s.ctx = ax.ctx;
    s.ante = flatten_formula(ax.ante, ax.ctx, *t.sig, out.graph_of);
    for (auto& d : ax.cons) s.cons.push_back(flatten_formula(d, ax.ctx, *t.sig, out.graph_of));
    std::string n = name;
    while (raw.has(n)) n += "_";
    raw.axioms.emplace_back(n, std::move(s));
  }
  // the published theory is the normalization (Horn antecedents, ∃+Horn consequents)
  out.theory = normalize_theory(raw).to_theory();
  return out;
}

Structure structure_of_graphs(const Structure& a, const FnElimResult& fe) {
  Structure b;
  b.sig = fe.sig;
  b.elems = a.elems;
  b.rels = a.rels;
  for (auto& [f, table] : a.funs) {
    auto it = fe.graph_of.find(f);
    if (it == fe.graph_of.end()) throw Error("no graph relation for function " + f);
    auto& tab = b.rels[it->second];
    for (auto& [args, val] : table) {
      std::vector<int> tup = args;
      tup.push_back(val);
      tab.insert(tup);
    }
  }
  return b;
}

Structure structure_from_graphs(const Structure& b, SigPtr original_sig, const FnElimResult& fe) {
  Structure a;
  a.sig = original_sig;
  a.elems = b.elems;
  for (auto& [r, tuples] : b.rels) {
    bool is_graph = false;
    for (auto& [f, g] : fe.graph_of)
      if (g == r) is_graph = true;
    if (!is_graph) a.rels[r] = tuples;
  }
  size_t n = b.elems.size();
  for (auto& [f, ar] : original_sig->funs) {
    const std::string& g = fe.graph_of.at(f);
    auto it = b.rels.find(g);
    auto& table = a.funs[f];
    if (it != b.rels.end()) {
      for (auto& tup : it->second) {
        std::vector<int> args(tup.begin(), tup.end() - 1);
        auto jt = table.find(args);
        if (jt != table.end() && jt->second != tup.back())
          throw NotFunctional("graph relation " + g + " is not single-valued");
        table[args] = tup.back();
      }
    }
    size_t expect = 1;
    for (int i = 0; i < ar; ++i) expect *= n;
    if (table.size() != expect) throw NotFunctional("graph relation " + g + " is not total");
  }
  return a;
}

}  // namespace chasekit
