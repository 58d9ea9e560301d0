#include <algorithm>
#include <functional>

#include "chasekit/normalize.hpp"
#include "chasekit/proofs.hpp"

// Prenexing with derivations, diagram derivations (⊤ ⊢ φ(c_ā) from Diag(A))
// and the elimination of diagram constants.

namespace chasekit {

namespace {

// identity node bridging α-equivalent formulas
Derivation d_alpha(const Context& ctx, const Formula& from, const Formula& to) {
  if (!alpha_equal(from, to)) throw IllFormedDerivation("d_alpha: not α-equivalent");
  Derivation d;
  d.rule = Rule::identity;
  d.conclusion.ctx = ctx;
  d.conclusion.ante = from;
  d.conclusion.cons = {to};
  return d;
}

void all_var_names(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) {
    out.insert(t.head());
    return;
  }
  for (auto& a : t.args()) all_var_names(a, out);
}

void all_var_names(const Formula& f, std::set<std::string>& out) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      for (auto& t : f.as_atom().args) all_var_names(t, out);
      return;
    case Formula::Kind::conj:
      for (auto& p : f.parts()) all_var_names(p, out);
      return;
    case Formula::Kind::exists:
      for (auto& v : f.bound()) out.insert(v);
      all_var_names(f.body(), out);
      return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// prenex_deriv

namespace {

struct Pren {
  Context bound;
  HornFormula matrix;
  Derivation bwd;  // ∃bound ⋀matrix ⊢_ctx φ
};

Pren prenex_rec(const Formula& phi, const Context& ctx, FreshNames& fresh) {
  switch (phi.kind()) {
    case Formula::Kind::atom:
      return Pren{Context(), HornFormula{{phi.as_atom()}}, d_identity(ctx, phi)};
    case Formula::Kind::conj: {
      std::vector<Pren> subs;
      for (auto& p : phi.parts()) subs.push_back(prenex_rec(p, ctx, fresh));
      std::vector<std::string> all_bound;
      HornFormula matrix;
      std::vector<std::pair<size_t, size_t>> ranges;
      for (auto& s : subs) {
        for (auto& v : s.bound) all_bound.push_back(v);
        ranges.emplace_back(matrix.atoms.size(), s.matrix.atoms.size());
        matrix.atoms.insert(matrix.atoms.end(), s.matrix.atoms.begin(), s.matrix.atoms.end());
      }
      Context big = ctx.extended(all_bound);
      Formula mconj = matrix.to_formula();
      std::vector<Derivation> premises;
      for (size_t i = 0; i < subs.size(); ++i) {
        auto [off, len] = ranges[i];
        std::vector<size_t> keep;
        for (size_t k = 0; k < len; ++k) keep.push_back(off + k);
        Derivation step = d_project(big, mconj, keep);  // ⋀M ⊢ ⋀m_i
        Formula ex_i = Formula::exists(subs[i].bound, subs[i].matrix.to_formula());
        if (!subs[i].bound.empty()) {
          VarMap idw;
          for (auto& v : subs[i].bound) idw[v] = Term::var(v);
          step = d_cut(std::move(step), d_exists_intro(big, ex_i, idw));
        } else if (!alpha_equal(step.conclusion.cons[0], ex_i)) {
          step = d_cut(std::move(step), d_alpha(big, step.conclusion.cons[0], ex_i));
        }
        step = d_cut(std::move(step), d_weaken(subs[i].bwd, big));  // ⋀M ⊢ p_i
        premises.push_back(std::move(step));
      }
      Derivation body =
          premises.empty() ? d_top_intro(big, mconj) : d_and_intro(std::move(premises));
      if (!alpha_equal(body.conclusion.cons[0], phi))
        body = d_cut(std::move(body), d_alpha(big, body.conclusion.cons[0], phi));
      Derivation bwd = all_bound.empty() ? std::move(body)
                                         : d_exists_left(std::move(body), Context(all_bound));
      return Pren{Context(all_bound), std::move(matrix), std::move(bwd)};
    }
    case Formula::Kind::exists: {
      VarMap rename;
      std::vector<std::string> nb;
      for (auto& v : phi.bound()) {
        std::string nv = fresh.fresh(v);
        nb.push_back(nv);
        rename[v] = Term::var(nv);
      }
      for (auto& v : free_vars_ordered(phi.body()))
        if (!rename.count(v)) rename[v] = Term::var(v);
      Context ctx_b = ctx.extended(nb);
      Formula body = substitute(phi.body(), rename, ctx_b);
      Pren rec = prenex_rec(body, ctx_b, fresh);
      std::vector<std::string> full_bound = nb;
      for (auto& v : rec.bound) full_bound.push_back(v);
      Context big = ctx.extended(full_bound);
      Formula mconj = rec.matrix.to_formula();
      Derivation step = d_identity(big, mconj);
      if (!rec.bound.empty()) {
        Formula ex_rec = Formula::exists(rec.bound, mconj);
        VarMap idw;
        for (auto& v : rec.bound) idw[v] = Term::var(v);
        step = d_cut(d_exists_intro(big, ex_rec, idw), d_weaken(rec.bwd, big));
      } else {
        step = d_weaken(rec.bwd, big);
        if (!alpha_equal(step.conclusion.ante, mconj))
          step = d_cut(d_alpha(big, mconj, step.conclusion.ante), std::move(step));
      }
      // step: ⋀m ⊢_big body
      Formula ex_outer = Formula::exists(Context(nb), body);
      VarMap idw2;
      for (auto& v : nb) idw2[v] = Term::var(v);
      step = d_cut(std::move(step), d_exists_intro(big, ex_outer, idw2));
      if (!alpha_equal(ex_outer, phi))
        step = d_cut(std::move(step), d_alpha(big, ex_outer, phi));
      Derivation bwd = d_exists_left(std::move(step), Context(full_bound));
      return Pren{Context(full_bound), std::move(rec.matrix), std::move(bwd)};
    }
  }
  throw Error("unreachable");
}

}  // namespace

PrenexDeriv prenex_deriv(const Formula& phi, const Context& ctx) {
  FreshNames fresh;
  fresh.reserve_all(ctx);
  for (auto& v : free_vars_ordered(phi)) fresh.reserve(v);
  Pren p = prenex_rec(phi, ctx, fresh);
  HornFormula padded = p.matrix;
  for (auto& y : p.bound) {
    bool occurs = false;
    for (auto& a : padded.atoms) {
      std::vector<std::string> vs;
      for (auto& t : a.args) term_vars(t, vs);
      if (std::find(vs.begin(), vs.end(), y) != vs.end()) {
        occurs = true;
        break;
      }
    }
    if (!occurs) padded.atoms.push_back(Atom::equality(Term::var(y), Term::var(y)));
  }
  Derivation bwd = std::move(p.bwd);
  if (padded.atoms.size() != p.matrix.atoms.size()) {
    Context big = ctx.extended(p.bound.vars());
    std::vector<size_t> keep;
    for (size_t i = 0; i < p.matrix.atoms.size(); ++i) keep.push_back(i);
    Derivation proj = d_project(big, padded.to_formula(), keep);
    if (!alpha_equal(proj.conclusion.cons[0], p.matrix.to_formula()))
      proj = d_cut(std::move(proj),
                   d_alpha(big, proj.conclusion.cons[0], p.matrix.to_formula()));
    if (p.bound.empty()) {
      bwd = d_cut(std::move(proj), std::move(bwd));
    } else {
      bwd = d_cut(d_exists_mono(std::move(proj), p.bound), std::move(bwd));
    }
  }
  return PrenexDeriv{std::move(p.bound), std::move(padded), std::move(bwd)};
}

// ---------------------------------------------------------------------------
// derive_from_diagram

namespace {

Term const_term(const DiagramResult& diag, int e) {
  return Term::app(diag.constant_of[e], {});
}

std::string find_diagram_axiom(const DiagramResult& diag, const Formula& want) {
  for (auto& [name, ax] : diag.theory.axioms)
    if (ax.cons.size() == 1 && ax.cons[0] == want) return name;
  throw Error("internal: no diagram axiom for a required fact");
}

// ⊤ ⊢ t = c_v where v is the value of the ground term t in A
Derivation ground_term_value(const Structure& a, const Term& t, const DiagramResult& diag,
                             int& value_out) {
  Context empty;
  if (t.is_var()) throw Error("internal: ground term expected");
  if (t.args().empty()) {
    for (size_t e = 0; e < diag.constant_of.size(); ++e) {
      if (diag.constant_of[e] == t.head()) {
        value_out = (int)e;
        return d_eq_refl(empty, t);
      }
    }
  }
  std::vector<Derivation> arg_derivs;
  std::vector<int> arg_vals;
  for (auto& u : t.args()) {
    int v = -1;
    arg_derivs.push_back(ground_term_value(a, u, diag, v));
    arg_vals.push_back(v);
  }
  auto ft = a.funs.find(t.head());
  if (ft == a.funs.end()) throw Error("internal: unknown function " + t.head());
  auto it = ft->second.find(arg_vals);
  if (it == ft->second.end()) throw NotFunctional("function table not total: " + t.head());
  value_out = it->second;
  std::vector<Term> cargs;
  for (int v : arg_vals) cargs.push_back(const_term(diag, v));
  Term lhs = Term::app(t.head(), cargs);
  Term rhs = const_term(diag, value_out);
  Formula fact = Formula::atom(Atom::equality(lhs, rhs));
  Derivation cur = d_theory_axiom(diag.theory, find_diagram_axiom(diag, fact), empty);
  FreshNames holes;
  {
    std::set<std::string> names;
    all_var_names(Formula::atom(Atom::equality(t, rhs)), names);
    for (auto& v : names) holes.reserve(v);
  }
  for (size_t i = 0; i < t.args().size(); ++i) {
    const Term& sub = t.args()[i];
    if (sub == cargs[i]) continue;
    std::string hole = holes.fresh("h");
    std::vector<Term> targs;
    for (size_t j = 0; j < t.args().size(); ++j) {
      if (j < i)
        targs.push_back(t.args()[j]);
      else if (j == i)
        targs.push_back(Term::var(hole));
      else
        targs.push_back(cargs[j]);
    }
    Formula tmpl = Formula::atom(Atom::equality(Term::app(t.head(), targs), rhs));
    cur = d_rewrite(std::move(cur), d_sym(arg_derivs[i]), tmpl, hole);
  }
  return cur;
}

// ⊤ ⊢ α for a ground atom α true in A
Derivation ground_atom_fact(const Structure& a, const Atom& alpha, const DiagramResult& diag) {
  Context empty;
  if (alpha.is_eq()) {
    int v1 = -1, v2 = -1;
    Derivation d1 = ground_term_value(a, alpha.lhs(), diag, v1);
    Derivation d2 = ground_term_value(a, alpha.rhs(), diag, v2);
    if (v1 != v2) throw NotSatisfied("equality atom does not hold in the structure");
    return d_trans(std::move(d1), d_sym(std::move(d2)));
  }
  std::vector<Derivation> arg_derivs;
  std::vector<int> vals;
  for (auto& t : alpha.args) {
    int v = -1;
    arg_derivs.push_back(ground_term_value(a, t, diag, v));
    vals.push_back(v);
  }
  if (!a.has_tuple(alpha.rel, vals)) throw NotSatisfied("relation atom does not hold");
  std::vector<Term> cargs;
  for (int v : vals) cargs.push_back(const_term(diag, v));
  Formula fact = Formula::atom(Atom::relation(alpha.rel, cargs));
  Derivation cur = d_theory_axiom(diag.theory, find_diagram_axiom(diag, fact), empty);
  FreshNames holes;
  {
    std::set<std::string> names;
    all_var_names(Formula::atom(alpha), names);
    for (auto& v : names) holes.reserve(v);
  }
  for (size_t i = 0; i < alpha.args.size(); ++i) {
    const Term& sub = alpha.args[i];
    if (sub == cargs[i]) continue;
    std::string hole = holes.fresh("h");
    std::vector<Term> targs;
    for (size_t j = 0; j < alpha.args.size(); ++j) {
      if (j < i)
        targs.push_back(alpha.args[j]);
      else if (j == i)
        targs.push_back(Term::var(hole));
      else
        targs.push_back(cargs[j]);
    }
    Formula tmpl = Formula::atom(Atom::relation(alpha.rel, targs));
    cur = d_rewrite(std::move(cur), d_sym(arg_derivs[i]), tmpl, hole);
  }
  return cur;
}

}  // namespace

Derivation derive_from_diagram(const Structure& a, const Formula& phi, const ElemAssignment& abar,
                               const DiagramResult& diag) {
  Context ctx(free_vars_ordered(phi));
  for (auto& v : ctx)
    if (!abar.count(v)) throw UnboundVariable("no element assigned to " + v);
  if (!evaluate(a, phi, abar)) throw NotSatisfied("structure does not satisfy the formula");
  PrenexDeriv pd = prenex_deriv(phi, ctx);
  auto wit = least_witness(a, pd.bound, pd.matrix.to_formula(), abar);
  if (!wit) throw Error("internal: prenex lost satisfaction");
  VarMap ground;
  for (auto& [v, e] : *wit) ground[v] = const_term(diag, e);
  Context empty;
  std::vector<Derivation> facts;
  for (auto& at : pd.matrix.atoms)
    facts.push_back(ground_atom_fact(a, substitute(at, ground), diag));
  Derivation body =
      facts.empty() ? d_top_intro(empty, Formula::top()) : d_and_intro(std::move(facts));
  VarMap ground_ctx;
  for (auto& v : ctx) ground_ctx[v] = ground.at(v);
  Formula ex = Formula::exists(pd.bound, pd.matrix.to_formula());
  Formula ex_ground = ctx.empty() ? ex : substitute(ex, ground_ctx, empty);
  if (ex_ground.kind() == Formula::Kind::exists) {
    VarMap w;
    for (auto& v : ex_ground.bound()) w[v] = ground.at(v);
    body = d_cut(std::move(body), d_exists_intro(empty, ex_ground, w));
  } else if (!alpha_equal(body.conclusion.cons[0], ex_ground)) {
    body = d_cut(std::move(body), d_alpha(empty, body.conclusion.cons[0], ex_ground));
  }
  Derivation back = ctx.empty() ? pd.backward : d_substitution(pd.backward, ground_ctx, empty);
  return d_cut(std::move(body), std::move(back));
}

// ---------------------------------------------------------------------------
// Diagram-constant elimination

Theory combine_with_diagram(const Theory& t, const DiagramResult& diag) {
  Theory out;
  out.sig = diag.sig;
  out.axioms = t.axioms;
  for (auto& [name, ax] : diag.theory.axioms) {
    std::string n = name;
    while (out.has(n)) n += "_";
    out.axioms.emplace_back(n, ax);
  }
  return out;
}

namespace {

void pair_positions_term(const Term& pat, const Term& abs, const std::set<std::string>& ybar,
                         const std::set<std::string>& wbar,
                         std::vector<std::pair<std::string, std::string>>& out) {
  if (pat.is_var() && ybar.count(pat.head())) {
    if (!abs.is_var() || !wbar.count(abs.head()))
      throw Error("internal: pattern variable not abstracted");
    out.emplace_back(pat.head(), abs.head());
    return;
  }
  if (pat.is_var() != abs.is_var()) throw Error("internal: pattern shape mismatch");
  if (pat.is_var()) return;
  if (pat.head() != abs.head() || pat.args().size() != abs.args().size())
    throw Error("internal: pattern shape mismatch");
  for (size_t i = 0; i < pat.args().size(); ++i)
    pair_positions_term(pat.args()[i], abs.args()[i], ybar, wbar, out);
}

void pair_positions(const Formula& pat, const Formula& abs, const std::set<std::string>& ybar,
                    const std::set<std::string>& wbar,
                    std::vector<std::pair<std::string, std::string>>& out) {
  if (pat.kind() != abs.kind()) throw Error("internal: pattern shape mismatch");
  switch (pat.kind()) {
    case Formula::Kind::atom: {
      const Atom& x = pat.as_atom();
      const Atom& y = abs.as_atom();
      if (x.kind != y.kind || x.rel != y.rel || x.args.size() != y.args.size())
        throw Error("internal: pattern shape mismatch");
      for (size_t i = 0; i < x.args.size(); ++i)
        pair_positions_term(x.args[i], y.args[i], ybar, wbar, out);
      return;
    }
    case Formula::Kind::conj:
      if (pat.parts().size() != abs.parts().size())
        throw Error("internal: pattern shape mismatch");
      for (size_t i = 0; i < pat.parts().size(); ++i)
        pair_positions(pat.parts()[i], abs.parts()[i], ybar, wbar, out);
      return;
    case Formula::Kind::exists:
      pair_positions(pat.body(), abs.body(), ybar, wbar, out);
      return;
  }
}

}  // namespace

Derivation d_rewrite_to(
    const Context& ctx, Derivation cur, const Formula& want,
    const std::function<Derivation(const std::string&, const std::string&)>& get_eq) {
  for (;;) {
    Formula have = cur.conclusion.cons[0];
    if (have == want) return cur;
    std::set<std::string> names;
    all_var_names(have, names);
    all_var_names(want, names);
    for (auto& v : ctx) names.insert(v);
    FreshNames fr(names);
    std::string hole = fr.fresh("h");
    bool done = false;
    std::string from_var, to_var;
    std::function<Term(const Term&, const Term&)> fix_term = [&](const Term& h,
                                                                 const Term& w) -> Term {
      if (done || h == w) return h;
      if (h.is_var() && w.is_var()) {
        done = true;
        from_var = h.head();
        to_var = w.head();
        return Term::var(hole);
      }
      if (h.is_var() || w.is_var()) throw Error("internal: rewrite shape mismatch");
      if (h.head() != w.head() || h.args().size() != w.args().size())
        throw Error("internal: rewrite shape mismatch");
      std::vector<Term> args;
      for (size_t i = 0; i < h.args().size(); ++i)
        args.push_back(fix_term(h.args()[i], w.args()[i]));
      return Term::app(h.head(), args);
    };
    std::function<Formula(const Formula&, const Formula&)> fix = [&](const Formula& h,
                                                                     const Formula& w) -> Formula {
      if (done || h == w) return h;
      if (h.kind() != w.kind()) throw Error("internal: rewrite shape mismatch");
      switch (h.kind()) {
        case Formula::Kind::atom: {
          Atom a = h.as_atom();
          const Atom& b = w.as_atom();
          for (size_t i = 0; i < a.args.size(); ++i) a.args[i] = fix_term(a.args[i], b.args[i]);
          return Formula::atom(a);
        }
        case Formula::Kind::conj: {
          std::vector<Formula> parts;
          for (size_t i = 0; i < h.parts().size(); ++i)
            parts.push_back(fix(h.parts()[i], w.parts()[i]));
          return Formula::conj(parts);
        }
        case Formula::Kind::exists:
          return Formula::exists(h.bound(), fix(h.body(), w.body()));
      }
      throw Error("unreachable");
    };
    Formula tmpl = fix(have, want);
    if (!done) throw Error("internal: no rewritable position found");
    cur = d_rewrite(std::move(cur), get_eq(from_var, to_var), tmpl, hole);
  }
}

DiagramElimination eliminate_diagram_constants(const Derivation& d, const Structure& a,
                                               const Theory& t, const DiagramResult& diag,
                                               const Sequent& pattern, const Context& ybar,
                                               const ElemAssignment& abar) {
  Theory combined = combine_with_diagram(t, diag);
  CheckResult chk = check_derivation(d, combined);
  if (!chk.ok)
    throw CheckFailed("derivation does not check at " + chk.path + ": " + chk.message);
  if (d.conclusion.cons.size() != 1 || pattern.cons.size() != 1)
    throw IllFormedDerivation("diagram elimination needs a single-consequent root");
  VarMap inst;
  for (auto& v : ybar) {
    auto it = abar.find(v);
    if (it == abar.end()) throw UnboundVariable("no element for pattern variable " + v);
    inst[v] = Term::app(diag.constant_of[it->second], {});
  }
  Context xbar = pattern.ctx.minus(ybar);
  for (auto& v : xbar) inst[v] = Term::var(v);
  Sequent expect = substitute(pattern, inst, xbar);
  if (!(alpha_equal(expect.ante, d.conclusion.ante) &&
        alpha_equal(expect.cons[0], d.conclusion.cons[0]) &&
        expect.ctx.set_equals(d.conclusion.ctx)))
    throw IllFormedDerivation("pattern does not instantiate to the derivation's root");
  std::set<std::string> consts(diag.constant_of.begin(), diag.constant_of.end());
  if (mentions_constants(pattern.ante, consts) || mentions_constants(pattern.cons[0], consts))
    throw IllFormedDerivation("pattern must not mention diagram constants");

  // ξ: diagram sentences used at leaves, in pre-order, deduplicated.
  // Diagram axioms sit after T's in `combined` (clash-renamed there).
  std::set<std::string> diag_names;
  for (size_t i = t.axioms.size(); i < combined.axioms.size(); ++i)
    diag_names.insert(combined.axioms[i].first);
  std::vector<Formula> xi;
  std::function<void(const Derivation&)> collect = [&](const Derivation& n) {
    if (n.rule == Rule::theory_axiom && diag_names.count(n.axiom)) {
      const Formula& s = n.conclusion.cons[0];
      bool seen = false;
      for (auto& f : xi) seen = seen || f == s;
      if (!seen) xi.push_back(s);
    }
    for (auto& p : n.premises) collect(p);
  };
  collect(d);
  Formula xiF = Formula::conj(xi);
  size_t xi_n = xiF.is_top() ? 0 : xiF.conjuncts().size();

  // d2: every sequent θ1 ⊢ Θ becomes ξ ∧ θ1 ⊢ Θ, over T alone
  std::function<Derivation(const Derivation&)> add_hyp = [&](const Derivation& n) -> Derivation {
    const Sequent& c = n.conclusion;
    Formula new_ante = Formula::conj({xiF, c.ante});
    if (n.rule == Rule::theory_axiom && diag_names.count(n.axiom)) {
      size_t idx = 0;
      bool found = false;
      auto xps = xiF.conjuncts();
      for (size_t i = 0; i < xps.size(); ++i)
        if (xps[i] == c.cons[0]) {
          idx = i;
          found = true;
          break;
        }
      if (!found) throw Error("internal: missing ξ conjunct");
      return d_and_elim(c.ctx, xiF, idx);
    }
    switch (n.rule) {
      case Rule::cut: {
        Derivation l = add_hyp(n.premises[0]);
        Derivation r = add_hyp(n.premises[1]);
        if (xi.empty()) return d_cut(std::move(l), std::move(r));
        std::vector<size_t> xi_idx;
        for (size_t i = 0; i < xi_n; ++i) xi_idx.push_back(i);
        Derivation proj = d_project(c.ctx, l.conclusion.ante, xi_idx);
        if (!alpha_equal(proj.conclusion.cons[0], xiF))
          proj = d_cut(std::move(proj), d_alpha(c.ctx, proj.conclusion.cons[0], xiF));
        Derivation pre = d_and_intro({std::move(proj), std::move(l)});
        return d_cut(std::move(pre), std::move(r));
      }
      case Rule::and_intro: {
        std::vector<Derivation> kids;
        for (auto& p : n.premises) kids.push_back(add_hyp(p));
        if (kids.empty()) return d_top_intro(c.ctx, new_ante);
        return d_and_intro(std::move(kids));
      }
      case Rule::substitution: {
        Derivation ch = add_hyp(n.premises[0]);
        return d_substitution(std::move(ch), n.subst, n.subst_ctx);
      }
      case Rule::exists_left: {
        Derivation ch = add_hyp(n.premises[0]);  // ξ∧φ ⊢_{C∪b} ψ
        Derivation adj = d_exists_left(std::move(ch), n.binder);
        Formula want_ante = Formula::conj({xiF, n.conclusion.ante});
        size_t exists_at = want_ante.conjuncts().size() - 1;
        Derivation frob = d_frobenius(c.ctx, want_ante, exists_at);
        if (!alpha_equal(frob.conclusion.cons[0], adj.conclusion.ante))
          frob = d_cut(std::move(frob),
                       d_alpha(c.ctx, frob.conclusion.cons[0], adj.conclusion.ante));
        return d_cut(std::move(frob), std::move(adj));
      }
      case Rule::exists_right: {
        Derivation ch = add_hyp(n.premises[0]);  // ξ ∧ ∃bφ ⊢_C ψ
        const Sequent& pc = n.conclusion;        // φ ⊢_{C∪b} ψ
        Formula phi = pc.ante;
        Formula exphi = n.premises[0].conclusion.ante;
        Formula gam = Formula::conj({xiF, phi});
        auto gparts = gam.conjuncts();
        std::vector<size_t> phi_idx;
        for (size_t i = xi_n; i < gparts.size(); ++i) phi_idx.push_back(i);
        Derivation p2 = d_project(pc.ctx, gam, phi_idx);
        if (!alpha_equal(p2.conclusion.cons[0], phi))
          p2 = d_cut(std::move(p2), d_alpha(pc.ctx, p2.conclusion.cons[0], phi));
        VarMap idw;
        for (auto& v : n.binder) idw[v] = Term::var(v);
        Derivation p2b = d_cut(std::move(p2), d_exists_intro(pc.ctx, exphi, idw));
        Derivation pre;
        if (xi.empty()) {
          pre = std::move(p2b);
        } else {
          std::vector<size_t> xi_idx;
          for (size_t i = 0; i < xi_n; ++i) xi_idx.push_back(i);
          Derivation p1 = d_project(pc.ctx, gam, xi_idx);
          if (!alpha_equal(p1.conclusion.cons[0], xiF))
            p1 = d_cut(std::move(p1), d_alpha(pc.ctx, p1.conclusion.cons[0], xiF));
          pre = d_and_intro({std::move(p1), std::move(p2b)});
        }
        return d_cut(std::move(pre), d_weaken(std::move(ch), pc.ctx));
      }
      case Rule::weaken: {
        Derivation ch = add_hyp(n.premises[0]);
        return d_weaken(std::move(ch), c.ctx);
      }
      default: {
        auto parts = new_ante.conjuncts();
        std::vector<size_t> keep;
        for (size_t i = xi_n; i < parts.size(); ++i) keep.push_back(i);
        Derivation proj = d_project(c.ctx, new_ante, keep);
        if (!alpha_equal(proj.conclusion.cons[0], c.ante))
          proj = d_cut(std::move(proj), d_alpha(c.ctx, proj.conclusion.cons[0], c.ante));
        return d_cut(std::move(proj), n);
      }
    }
  };
  Derivation d2 = add_hyp(d);

  // abstract over T with the constant-extended signature (the axioms still
  // avoid the constants; only the scoping needs Σ + |A|)
  Theory t_ext;
  t_ext.sig = diag.sig;
  t_ext.axioms = t.axioms;
  Abstraction abs = abstract_constants(d2, consts, t_ext);
  const Context& wbar = abs.fresh;

  std::set<std::string> yset(ybar.begin(), ybar.end());
  std::set<std::string> wset(wbar.begin(), wbar.end());
  auto abs_parts = abs.derivation.conclusion.ante.conjuncts();
  std::vector<Formula> xibar_parts(abs_parts.begin(),
                                   abs_parts.begin() + std::min(xi_n, abs_parts.size()));
  std::vector<Formula> phibar_parts(abs_parts.begin() + std::min(xi_n, abs_parts.size()),
                                    abs_parts.end());
  Formula phibar = Formula::conj(phibar_parts);
  Formula xibar = Formula::conj(xibar_parts);
  std::vector<std::pair<std::string, std::string>> rho_pairs;
  {
    std::vector<std::pair<std::string, std::string>> pairs;
    pair_positions(pattern.ante, phibar, yset, wset, pairs);
    pair_positions(pattern.cons[0], abs.derivation.conclusion.cons[0], yset, wset, pairs);
    for (auto& pr : pairs)
      if (std::find(rho_pairs.begin(), rho_pairs.end(), pr) == rho_pairs.end())
        rho_pairs.push_back(pr);
  }
  std::vector<Formula> rho_atoms;
  for (auto& [y, w] : rho_pairs)
    rho_atoms.push_back(Formula::atom(Atom::equality(Term::var(y), Term::var(w))));
  Formula rho = Formula::conj(rho_atoms);
  Formula chi = Formula::exists(wbar, Formula::conj({rho, xibar}));

  Context CTX = pattern.ctx;
  Context big = CTX.extended(wbar.vars());
  Formula gamma0 = Formula::conj({rho, xibar, pattern.ante});
  size_t rho_n = rho_pairs.size();
  auto get_eq = [&](const std::string& from, const std::string& to) -> Derivation {
    for (size_t k = 0; k < rho_pairs.size(); ++k) {
      if (rho_pairs[k].first == from && rho_pairs[k].second == to)
        return d_and_elim(big, gamma0, k);
      if (rho_pairs[k].first == to && rho_pairs[k].second == from)
        return d_sym(d_and_elim(big, gamma0, k));
    }
    throw Error("internal: no ρ equality for a rewrite");
  };
  // a) Γ0 ⊢ φ̄(x̄,w̄): rewrite pattern conjuncts position-wise
  auto pat_parts = pattern.ante.conjuncts();
  auto bar_parts = phibar.conjuncts();
  if (pat_parts.size() != bar_parts.size())
    throw Error("internal: abstraction changed the conjunct count");
  std::vector<Derivation> ante_derivs;
  for (size_t i = 0; i < xi_n; ++i) ante_derivs.push_back(d_and_elim(big, gamma0, rho_n + i));
  for (size_t i = 0; i < bar_parts.size(); ++i) {
    Derivation cur = d_and_elim(big, gamma0, rho_n + xi_n + i);
    cur = d_rewrite_to(big, std::move(cur), bar_parts[i], get_eq);
    ante_derivs.push_back(std::move(cur));
  }
  Derivation to_abs = ante_derivs.empty() ? d_top_intro(big, gamma0)
                                          : d_and_intro(std::move(ante_derivs));
  if (!alpha_equal(to_abs.conclusion.cons[0], abs.derivation.conclusion.ante))
    to_abs = d_cut(std::move(to_abs),
                   d_alpha(big, to_abs.conclusion.cons[0], abs.derivation.conclusion.ante));
  Derivation mid = d_cut(std::move(to_abs), d_weaken(abs.derivation, big));
  // d) ψ̄(x̄,w̄) back to ψ(x̄,ȳ)
  Derivation inner = d_rewrite_to(big, std::move(mid), pattern.cons[0], get_eq);
  // e) conjoin χ and discharge w̄
  Derivation proof;
  Formula goal_ante = Formula::conj({chi, pattern.ante});
  if (wbar.empty()) {
    if (!alpha_equal(goal_ante, gamma0))
      proof = d_cut(d_alpha(CTX, goal_ante, gamma0), std::move(inner));
    else
      proof = std::move(inner);
  } else {
    Derivation adj = d_exists_left(std::move(inner), wbar);  // ∃w̄Γ0 ⊢ ψ
    Derivation frob = d_frobenius(CTX, goal_ante, 0);
    if (!alpha_equal(frob.conclusion.cons[0], adj.conclusion.ante))
      frob = d_cut(std::move(frob),
                   d_alpha(CTX, frob.conclusion.cons[0], adj.conclusion.ante));
    proof = d_cut(std::move(frob), std::move(adj));
  }

  DiagramElimination out;
  out.chi = chi;
  out.proof = std::move(proof);
  for (auto& [w, cname] : abs.assignment) {
    for (size_t e = 0; e < diag.constant_of.size(); ++e)
      if (diag.constant_of[e] == cname) out.chi_witness[w] = (int)e;
  }
  ElemAssignment chi_asg;
  for (auto& v : free_vars_ordered(chi)) {
    auto it = abar.find(v);
    if (it == abar.end()) throw Error("internal: χ mentions a non-pattern variable");
    chi_asg[v] = it->second;
  }
  if (!evaluate(a, chi, chi_asg)) throw Error("internal: A does not satisfy χ(ā)");
  return out;
}

}  // namespace chasekit
