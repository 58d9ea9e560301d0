#include <algorithm>
#include <functional>

#include "chasekit/chase.hpp"
#include "chasekit/text.hpp"

// Conservativity witnesses: a regular fact about chase-level elements is
// pushed down level by level. New witnesses are grouped by shared
// justification; each group contributes ∃z̄(ε ∧ χ) where χ is the firing
// axiom's antecedent and ε records the positional equalities; facts over old
// elements contribute either themselves or ∃z̄(ρ ∧ χ) for the firing that
// added the tuple. Per-step witnesses compose by cut.

namespace chasekit {

namespace {

struct AxiomUse {
  Derivation node;     // χ(z̄') ⊢_{X∪z̄'} ∃w̄' ζ(z̄',w̄')
  Formula chi;         // renamed antecedent
  Context zbar;        // renamed axiom context
  Context wbar;        // renamed bound (empty when the axiom adjoins nothing)
  std::vector<Formula> zeta_parts;
  std::vector<Atom> zeta_atoms;  // original matrix atoms (pre-rename), aligned
};

// Renames the axiom apart (fresh z̄', w̄') and produces the instantiating
// derivation at context X ∪ z̄'.
AxiomUse make_axiom_use(const std::string& name, const NormalSequent& ns, const Context& X,
                        FreshNames& fresh) {
  AxiomUse use;
  std::vector<std::string> z2, w2;
  VarMap zmap, allmap;
  for (auto& v : ns.ctx) {
    std::string nv = fresh.fresh("z_" + v);
    z2.push_back(nv);
    zmap[v] = Term::var(nv);
    allmap[v] = Term::var(nv);
  }
  for (auto& v : ns.bound) {
    std::string nv = fresh.fresh("w_" + v);
    w2.push_back(nv);
    allmap[v] = Term::var(nv);
  }
  use.zbar = Context(z2);
  use.wbar = Context(w2);
  use.zeta_atoms = ns.matrix.atoms;
  // α-renamed axiom leaf: binder renamed to w̄'
  Derivation leaf;
  leaf.rule = Rule::theory_axiom;
  leaf.axiom = name;
  {
    Sequent c;
    c.ctx = ns.ctx;
    c.ante = ns.ante.to_formula();
    std::vector<Formula> zf;
    for (auto& at : ns.matrix.atoms) {
      VarMap m;
      for (auto& v : ns.ctx) m[v] = Term::var(v);
      for (size_t i = 0; i < ns.bound.size(); ++i) m[ns.bound[i]] = Term::var(w2[i]);
      zf.push_back(Formula::atom(substitute(at, m)));
    }
    c.cons = {Formula::exists(use.wbar, Formula::conj(zf))};
    leaf.conclusion = std::move(c);
  }
  Context target = X.extended(z2);
  use.node = d_substitution(std::move(leaf), zmap, target);
  use.chi = use.node.conclusion.ante;
  const Formula& exz = use.node.conclusion.cons[0];
  if (exz.kind() == Formula::Kind::exists) {
    use.zeta_parts = exz.body().conjuncts();
  } else {
    use.zeta_parts = exz.conjuncts();
  }
  return use;
}

// Derives  Γ ⊢_X ∃w̄(Γ ∧ ζ)  from  Γ ⊢ ∃w̄ζ  (or Γ ∧ ζ directly when w̄ = ∅),
// cuts with `inner` (Γ ∧ ζ ⊢_{X∪w̄} target, with w̄ ∉ FV(target)), and closes.
Derivation thread_through(const Context& X, const Formula& gamma, Derivation gamma_to_exz,
                          const Context& wbar, Derivation inner) {
  auto gparts = gamma.conjuncts();
  if (wbar.empty()) {
    // Γ ⊢ Γ∧ζ then cut
    std::vector<Derivation> ps;
    for (size_t i = 0; i < gparts.size(); ++i) ps.push_back(d_and_elim(X, gamma, i));
    ps.push_back(std::move(gamma_to_exz));
    Derivation both = d_and_intro(std::move(ps));
    if (!alpha_equal(both.conclusion.cons[0], inner.conclusion.ante)) {
      Derivation bridge;
      bridge.rule = Rule::identity;
      bridge.conclusion.ctx = X;
      bridge.conclusion.ante = both.conclusion.cons[0];
      bridge.conclusion.cons = {inner.conclusion.ante};
      if (!alpha_equal(bridge.conclusion.ante, bridge.conclusion.cons[0]))
        throw Error("internal: thread_through shape mismatch");
      both = d_cut(std::move(both), std::move(bridge));
    }
    return d_cut(std::move(both), std::move(inner));
  }
  // Γ ⊢ Γ ∧ ∃w̄ζ
  std::vector<Derivation> ps;
  for (size_t i = 0; i < gparts.size(); ++i) ps.push_back(d_and_elim(X, gamma, i));
  ps.push_back(std::move(gamma_to_exz));
  Derivation both = d_and_intro(std::move(ps));
  // Frobenius at the last conjunct
  Derivation frob = d_frobenius(X, both.conclusion.cons[0], gparts.size());
  Derivation adj = d_exists_left(std::move(inner), wbar);
  if (!alpha_equal(frob.conclusion.cons[0], adj.conclusion.ante)) {
    Derivation bridge;
    bridge.rule = Rule::identity;
    bridge.conclusion.ctx = X;
    bridge.conclusion.ante = frob.conclusion.cons[0];
    bridge.conclusion.cons = {adj.conclusion.ante};
    if (!alpha_equal(bridge.conclusion.ante, bridge.conclusion.cons[0]))
      throw Error("internal: thread_through frobenius mismatch");
    frob = d_cut(std::move(frob), std::move(bridge));
  }
  return d_cut(d_cut(std::move(both), std::move(frob)), std::move(adj));
}

struct StepState {
  const ChaseTrace& trace;
  const Theory& theory_t;
  int level;  // k: descend from levels[k] to levels[k-1]

  const Structure& S() const { return trace.levels[level]; }
  const Structure& B() const { return trace.levels[level - 1]; }

  const NormalSequent& axiom_named(const std::string& name) const {
    for (auto& [n, ns] : trace.theory.axioms)
      if (n == name) return ns;
    throw Error("internal: unknown axiom " + name);
  }

  // element index at this level born as (axiom, args, j)
  int born_element(const std::string& axiom, const std::vector<int>& args, int j) const {
    for (size_t e = B().elems.size(); e < S().elems.size(); ++e) {
      const auto& b = trace.births[e];
      if (b && b->axiom == axiom && b->args == args && b->index == j) return (int)e;
    }
    throw Error("internal: missing chase element for a firing");
  }
};

}  // namespace

namespace {

// One conservativity step: φ true at level k, produce (ψ, ψ ⊢ φ) with ψ true
// at level k-1.
std::pair<Formula, Derivation> step_witness(const StepState& st, const Formula& phi,
                                            const ElemAssignment& abar, const Context& ctx) {
  PrenexDeriv pd = prenex_deriv(phi, ctx);
  Formula mconj = pd.matrix.to_formula();
  auto wit = least_witness(st.S(), pd.bound, mconj, abar);
  if (!wit) throw Error("internal: step lost satisfaction");
  size_t old_count = st.B().elems.size();
  // classify bound variables
  std::vector<std::string> old_vars, new_vars;
  for (auto& y : pd.bound) {
    if ((size_t)wit->at(y) < old_count)
      old_vars.push_back(y);
    else
      new_vars.push_back(y);
  }
  // group new variables by co-occurrence in matrix atoms
  std::map<std::string, int> group_of;
  {
    std::map<std::string, std::string> par;
    for (auto& v : new_vars) par[v] = v;
    std::function<std::string(const std::string&)> find = [&](const std::string& v) {
      std::string r = v;
      while (par.at(r) != r) r = par.at(r);
      return r;
    };
    auto unite = [&](const std::string& a, const std::string& b) {
      std::string ra = find(a), rb = find(b);
      if (ra != rb) {
        // earlier variable in new_vars order wins
        auto pos = [&](const std::string& x) {
          return std::find(new_vars.begin(), new_vars.end(), x) - new_vars.begin();
        };
        if (pos(ra) <= pos(rb))
          par[rb] = ra;
        else
          par[ra] = rb;
      }
    };
    for (auto& at : pd.matrix.atoms) {
      std::vector<std::string> vs;
      for (auto& t : at.args) term_vars(t, vs);
      std::vector<std::string> nv;
      for (auto& v : vs)
        if (par.count(v)) nv.push_back(v);
      for (size_t i = 1; i < nv.size(); ++i) unite(nv[0], nv[i]);
    }
    int next = 0;
    std::map<std::string, int> rep_id;
    for (auto& v : new_vars) {
      std::string r = find(v);
      if (!rep_id.count(r)) rep_id[r] = next++;
      group_of[v] = rep_id[r];
    }
  }
  int n_groups = 0;
  for (auto& [v, g] : group_of) n_groups = std::max(n_groups, g + 1);
  std::vector<std::vector<std::string>> group_vars(n_groups);
  for (auto& y : new_vars) group_vars[group_of[y]].push_back(y);
  // partition matrix atoms
  std::vector<size_t> base_atoms;                    // no new variable
  std::vector<std::vector<size_t>> group_atoms(n_groups);
  for (size_t i = 0; i < pd.matrix.atoms.size(); ++i) {
    std::vector<std::string> vs;
    for (auto& t : pd.matrix.atoms[i].args) term_vars(t, vs);
    int g = -1;
    for (auto& v : vs)
      if (group_of.count(v)) g = group_of[v];
    if (g < 0)
      base_atoms.push_back(i);
    else
      group_atoms[g].push_back(i);
  }

  Context X = ctx.extended(old_vars);
  ElemAssignment full = *wit;  // covers ctx ∪ bound
  FreshNames fresh;
  fresh.reserve_all(ctx);
  for (auto& y : pd.bound) fresh.reserve(y);

  auto value_of = [&](const std::string& v) { return full.at(v); };

  std::vector<Formula> psi_parts;       // conjuncts of Ψ
  std::vector<Derivation> part_derivs;  // per psi_part: part ⊢_X target-part
  std::vector<Formula> target_parts;    // φ_0 atoms then ∃Y_i(...)

  // --- base atoms (no new variables)
  for (size_t ai : base_atoms) {
    const Atom& at = pd.matrix.atoms[ai];
    Formula af = Formula::atom(at);
    // value tuple
    if (at.is_eq()) {
      // both sides old with equal values: holds in B as well
      psi_parts.push_back(af);
      part_derivs.push_back(d_identity(X, af));
      target_parts.push_back(af);
      continue;
    }
    std::vector<int> tup;
    for (auto& t : at.args) tup.push_back(value_of(t.head()));
    if (st.B().has_tuple(at.rel, tup)) {
      psi_parts.push_back(af);
      part_derivs.push_back(d_identity(X, af));
      target_parts.push_back(af);
      continue;
    }
    // find the level-k firing and matrix conjunct that added the tuple
    const auto& firings = st.trace.firings[st.level - 1];
    bool found = false;
    for (auto& fr : firings) {
      const NormalSequent& ns = st.axiom_named(fr.axiom);
      for (size_t m = 0; m < ns.matrix.atoms.size() && !found; ++m) {
        const Atom& s = ns.matrix.atoms[m];
        if (s.is_eq() || s.rel != at.rel || s.args.size() != at.args.size()) continue;
        bool zonly = true;
        std::vector<int> sv;
        for (auto& t : s.args) {
          auto zi = ns.ctx.index_of(t.head());
          if (!zi) {
            zonly = false;
            break;
          }
          sv.push_back(fr.args[*zi]);
        }
        if (!zonly || sv != tup) continue;
        found = true;
        // σ = ∃z̄(ρ ∧ χ): ρ pairs t_j with the z-variable at position j
        AxiomUse use = make_axiom_use(fr.axiom, ns, X, fresh);
        std::vector<Atom> rho;
        for (size_t j = 0; j < at.args.size(); ++j) {
          std::string t_var = at.args[j].head();
          std::string z0 = s.args[j].head();
          std::string z2 = use.zbar[*ns.ctx.index_of(z0)];
          Atom eq = Atom::equality(Term::var(t_var), Term::var(z2));
          if (std::find(rho.begin(), rho.end(), eq) == rho.end()) rho.push_back(eq);
        }
        std::vector<Formula> gparts;
        for (auto& e : rho) gparts.push_back(Formula::atom(e));
        for (auto& c : use.chi.conjuncts()) gparts.push_back(c);
        Formula gamma = Formula::conj(gparts);
        size_t rho_n = rho.size();
        Context XZ = X.extended(use.zbar.vars());
        // Γ ⊢ ∃w̄ζ via χ-projection and the axiom node
        std::vector<size_t> chi_idx;
        for (size_t i2 = rho_n; i2 < gparts.size(); ++i2) chi_idx.push_back(i2);
        Derivation chi_proj = d_project(XZ, gamma, chi_idx);
        if (!alpha_equal(chi_proj.conclusion.cons[0], use.chi))
          chi_proj = d_cut(std::move(chi_proj),
                           d_identity(XZ, use.chi));  // conj collapse bridge
        Derivation to_exz = d_cut(std::move(chi_proj), use.node);
        // inner: Γ ∧ ζ ⊢ α by rewriting the matched conjunct
        Formula gz = Formula::conj({gamma, Formula::conj(use.zeta_parts)});
        Context XZW = XZ.extended(use.wbar.vars());
        Derivation inner = d_and_elim(XZW, gz, gparts.size() + m);
        auto var_eq = [&](const std::string& from, const std::string& to) -> Derivation {
          for (size_t r = 0; r < rho.size(); ++r) {
            const Atom& e = rho[r];
            if (e.lhs().head() == to && e.rhs().head() == from)
              return d_sym(d_and_elim(XZW, gz, r));
            if (e.lhs().head() == from && e.rhs().head() == to)
              return d_and_elim(XZW, gz, r);
          }
          throw Error("internal: no ρ equality available");
        };
        inner = d_rewrite_to(XZW, std::move(inner), af, var_eq);
        Derivation chain = thread_through(XZ, gamma, std::move(to_exz), use.wbar,
                                          std::move(inner));
        Formula sigma = Formula::exists(use.zbar, gamma);
        Derivation ds = use.zbar.empty() ? std::move(chain)
                                         : d_exists_left(std::move(chain), use.zbar);
        psi_parts.push_back(sigma);
        part_derivs.push_back(std::move(ds));
        target_parts.push_back(af);
      }
      if (found) break;
    }
    if (!found) throw Error("internal: no firing justifies a new tuple");
  }

  // --- groups of new variables
  std::vector<Context> group_binders;
  for (int g = 0; g < n_groups; ++g) {
    const auto& yvars = group_vars[g];
    // shared justification
    const Birth* birth = nullptr;
    for (auto& y : yvars) {
      const auto& b = st.trace.births[full.at(y)];
      if (!b) throw Error("internal: new element without birth record");
      if (!birth) {
        birth = &*b;
      } else if (b->axiom != birth->axiom || b->args != birth->args) {
        throw Error("internal: group mixes justifications");
      }
    }
    const NormalSequent& ns = st.axiom_named(birth->axiom);
    AxiomUse use = make_axiom_use(birth->axiom, ns, X, fresh);
    // f: group variable -> renamed bound variable
    VarMap to_w;
    for (auto& y : yvars) {
      int idx = st.trace.births[full.at(y)]->index;
      to_w[y] = Term::var(use.wbar[idx]);
    }
    std::vector<Atom> eps;
    std::vector<size_t> matched;  // ζ-conjunct per group atom (eq atoms: SIZE_MAX)
    for (size_t ai : group_atoms[g]) {
      const Atom& at = pd.matrix.atoms[ai];
      if (at.is_eq()) {
        matched.push_back(SIZE_MAX);
        continue;
      }
      std::vector<int> tup;
      for (auto& t : at.args) tup.push_back(value_of(t.head()));
      bool found = false;
      for (size_t m = 0; m < ns.matrix.atoms.size() && !found; ++m) {
        const Atom& s = ns.matrix.atoms[m];
        if (s.is_eq() || s.rel != at.rel || s.args.size() != at.args.size()) continue;
        std::vector<int> sv;
        bool ok = true;
        for (auto& t : s.args) {
          if (auto zi = ns.ctx.index_of(t.head())) {
            sv.push_back(birth->args[*zi]);
          } else if (auto wi = ns.bound.index_of(t.head())) {
            sv.push_back(st.born_element(birth->axiom, birth->args, (int)*wi));
          } else {
            ok = false;
            break;
          }
        }
        if (!ok || sv != tup) continue;
        found = true;
        matched.push_back(m);
        for (size_t j = 0; j < at.args.size(); ++j) {
          const std::string& tv = at.args[j].head();
          if (to_w.count(tv)) continue;  // new-variable position
          std::string z0 = s.args[j].head();
          auto zi = ns.ctx.index_of(z0);
          if (!zi) throw Error("internal: old position matched a bound variable");
          Atom eq = Atom::equality(Term::var(tv), Term::var(use.zbar[*zi]));
          if (std::find(eps.begin(), eps.end(), eq) == eps.end()) eps.push_back(eq);
        }
      }
      if (!found) throw Error("internal: no ζ conjunct justifies a group atom");
    }
    // ψ_g = ∃z̄(ε ∧ χ)
    std::vector<Formula> gparts;
    for (auto& e : eps) gparts.push_back(Formula::atom(e));
    for (auto& c : use.chi.conjuncts()) gparts.push_back(c);
    Formula gamma = Formula::conj(gparts);
    size_t eps_n = eps.size();
    Context XZ = X.extended(use.zbar.vars());
    std::vector<size_t> chi_idx;
    for (size_t i2 = eps_n; i2 < gparts.size(); ++i2) chi_idx.push_back(i2);
    Derivation chi_proj = d_project(XZ, gamma, chi_idx);
    if (!alpha_equal(chi_proj.conclusion.cons[0], use.chi))
      chi_proj = d_cut(std::move(chi_proj), d_identity(XZ, use.chi));
    Derivation to_exz = d_cut(std::move(chi_proj), use.node);
    // inner: Γ ∧ ζ ⊢ (group conj)[y -> w], then ∃-introduce Y
    Formula gz = Formula::conj({gamma, Formula::conj(use.zeta_parts)});
    Context XZW = XZ.extended(use.wbar.vars());
    auto var_eq = [&](const std::string& from, const std::string& to) -> Derivation {
      for (size_t r = 0; r < eps.size(); ++r) {
        const Atom& e = eps[r];
        if (e.lhs().head() == to && e.rhs().head() == from)
          return d_sym(d_and_elim(XZW, gz, r));
        if (e.lhs().head() == from && e.rhs().head() == to)
          return d_and_elim(XZW, gz, r);
      }
      throw Error("internal: no ε equality available");
    };
    std::vector<Derivation> conj_derivs;
    VarMap subst_w = to_w;
    std::vector<Formula> grp_formulas;
    for (size_t idx = 0; idx < group_atoms[g].size(); ++idx) {
      const Atom& at = pd.matrix.atoms[group_atoms[g][idx]];
      grp_formulas.push_back(Formula::atom(at));
      VarMap m = to_w;
      std::vector<std::string> vs;
      for (auto& t : at.args) term_vars(t, vs);
      for (auto& v : vs)
        if (!m.count(v)) m[v] = Term::var(v);
      Atom want = substitute(at, m);
      if (at.is_eq()) {
        conj_derivs.push_back(d_refl_under(XZW, gz, want.lhs()));
        if (!(want.lhs() == want.rhs()))
          throw Error("internal: group equality did not collapse");
        continue;
      }
      size_t mj = matched[idx];
      Derivation cur = d_and_elim(XZW, gz, gparts.size() + mj);
      cur = d_rewrite_to(XZW, std::move(cur), Formula::atom(want), var_eq);
      conj_derivs.push_back(std::move(cur));
    }
    Derivation inner = conj_derivs.empty() ? d_top_intro(XZW, gz)
                                           : d_and_intro(std::move(conj_derivs));
    // ∃-introduce the group variables
    Context ybinder(group_vars[g]);
    Formula grp_conj = Formula::conj(grp_formulas);
    Formula exy = Formula::exists(ybinder, grp_conj);
    Derivation intro = d_exists_intro(XZW, exy, subst_w);
    if (!alpha_equal(inner.conclusion.cons[0], intro.conclusion.ante))
      inner = d_cut(std::move(inner),
                    d_identity(XZW, intro.conclusion.ante));  // α bridge
    inner = d_cut(std::move(inner), std::move(intro));
    Derivation chain = thread_through(XZ, gamma, std::move(to_exz), use.wbar,
                                      std::move(inner));
    Formula psi_g = Formula::exists(use.zbar, gamma);
    Derivation dg = use.zbar.empty() ? std::move(chain)
                                     : d_exists_left(std::move(chain), use.zbar);
    psi_parts.push_back(psi_g);
    part_derivs.push_back(std::move(dg));
    target_parts.push_back(exy);
    group_binders.push_back(ybinder);
  }

  // --- assemble Ψ ⊢_X φ
  Formula Psi = Formula::conj(psi_parts);
  std::vector<Derivation> joined;
  {
    // map each psi_part to its range in Psi's conjuncts (conj flattening may
    // split a part into several conjuncts, or none for a top part)
    size_t at = 0;
    for (size_t i = 0; i < psi_parts.size(); ++i) {
      size_t len = psi_parts[i].kind() == Formula::Kind::conj
                       ? psi_parts[i].parts().size()
                       : 1;
      std::vector<size_t> keep;
      for (size_t k2 = 0; k2 < len; ++k2) keep.push_back(at + k2);
      at += len;
      Derivation proj = d_project(X, Psi, keep);
      if (!alpha_equal(proj.conclusion.cons[0], psi_parts[i]))
        proj = d_cut(std::move(proj), d_identity(X, psi_parts[i]));
      joined.push_back(d_cut(std::move(proj), std::move(part_derivs[i])));
    }
  }
  Derivation to_targets = joined.empty() ? d_top_intro(X, Psi) : d_and_intro(std::move(joined));
  // pull the group binders out and align with the prenex matrix
  Derivation pulled = d_conj_pull(X, target_parts);
  Derivation combined = d_cut(std::move(to_targets), std::move(pulled));
  // inside the binder: align conjuncts to the prenex matrix order
  Context ystar;
  for (auto& b : group_binders) ystar = ystar.extended(b.vars());
  Formula pulled_cons = combined.conclusion.cons[0];
  Formula inner_now =
      pulled_cons.kind() == Formula::Kind::exists ? pulled_cons.body() : pulled_cons;
  Derivation align = d_conj_align(X.extended(ystar.vars()), inner_now, mconj);
  Derivation aligned = ystar.empty()
                           ? d_cut(std::move(combined), std::move(align))
                           : d_cut(std::move(combined), d_exists_mono(std::move(align), ystar));
  // Ψ ⊢ ∃ȳ m  (ȳ = the full prenex bound, identity witnesses)
  Derivation to_exy;
  if (pd.bound.empty()) {
    to_exy = std::move(aligned);
  } else {
    Formula exy_full = Formula::exists(pd.bound, mconj);
    VarMap idw;
    for (auto& v : pd.bound) idw[v] = Term::var(v);
    Derivation intro = d_exists_intro(X.extended(ystar.vars()), exy_full, idw);
    Derivation lift = ystar.empty() ? std::move(intro)
                                    : d_exists_left(std::move(intro), ystar);
    // lift: ∃Y* m ⊢_X ∃ȳ m   (or m ⊢ ∃ȳm when no groups)
    to_exy = d_cut(std::move(aligned), std::move(lift));
  }
  // cut with the prenex backward derivation, then discharge x̄'
  Derivation full_step = d_cut(std::move(to_exy), d_weaken(pd.backward, X));
  Formula psi = Formula::exists(Context(old_vars), Psi);
  if (!old_vars.empty()) full_step = d_exists_left(std::move(full_step), Context(old_vars));
  return {psi, std::move(full_step)};
}

}  // namespace

WitnessResult conservativity_witness(const ChaseTrace& trace, const Formula& phi,
                                     const std::vector<int>& abar) {
  Context ctx(free_vars_ordered(phi));
  if (abar.size() != ctx.size())
    throw UnboundVariable("tuple length does not match the formula's free variables");
  ElemAssignment asg;
  for (size_t i = 0; i < ctx.size(); ++i) asg[ctx[i]] = abar[i];
  int n = -1;
  for (size_t lvl = 0; lvl < trace.levels.size(); ++lvl) {
    if (evaluate(trace.levels[lvl], phi, asg)) {
      n = (int)lvl;
      break;
    }
  }
  if (n < 0) {
    if (trace.status == ChaseStatus::saturated)
      throw NotSatisfiedAtAnyLevel("the formula holds at no chase level");
    throw TraceExhausted("the formula holds at no recorded level (trace incomplete)");
  }
  Theory theory_t = trace.theory.to_theory();
  Formula cur = phi;
  std::optional<Derivation> total;
  for (int k = n; k >= 1; --k) {
    StepState st{trace, theory_t, k};
    auto [psi, dstep] = step_witness(st, cur, asg, ctx);
    total = total ? d_cut(std::move(dstep), std::move(*total)) : std::move(dstep);
    cur = psi;
  }
  WitnessResult out;
  out.psi = cur;
  out.proof = total ? std::move(*total) : d_identity(ctx, phi);
  return out;
}

WitnessResult simplify_witness(const WitnessResult& w, const Context& ctx, const Theory& t) {
  (void)t;
  // drop reflexivity conjuncts t = t, recursively
  std::function<Formula(const Formula&)> simp = [&](const Formula& f) -> Formula {
    switch (f.kind()) {
      case Formula::Kind::atom:
        return f;
      case Formula::Kind::conj: {
        std::vector<Formula> parts;
        for (auto& p : f.parts()) {
          Formula sp = simp(p);
          if (sp.kind() == Formula::Kind::atom && sp.as_atom().is_eq() &&
              sp.as_atom().lhs() == sp.as_atom().rhs())
            continue;
          parts.push_back(sp);
        }
        return Formula::conj(std::move(parts));
      }
      case Formula::Kind::exists:
        return Formula::exists(f.bound(), simp(f.body()));
    }
    throw Error("unreachable");
  };
  Formula simplified = simp(w.psi);
  if (simplified == w.psi) return w;
  // bridge: simplified ⊢ ψ (reinstate dropped reflexivity conjuncts)
  std::function<Derivation(const Context&, const Formula&, const Formula&)> rebuild =
      [&](const Context& c, const Formula& from, const Formula& to) -> Derivation {
    if (from == to) return d_identity(c, from);
    if (to.kind() == Formula::Kind::exists) {
      Context inner = c.extended(to.bound().vars());
      Formula from_body = from.kind() == Formula::Kind::exists ? from.body() : from;
      Derivation body = rebuild(inner, from_body, to.body());
      if (from.kind() == Formula::Kind::exists) {
        return d_exists_mono(std::move(body), to.bound());
      }
      // from has no quantifier left (all conjuncts dropped?): introduce
      VarMap idw;
      for (auto& v : to.bound()) idw[v] = Term::var(v);
      (void)idw;
      throw Error("internal: simplifier removed a quantifier");
    }
    // conjunction: project kept conjuncts, reprove dropped reflexivity
    return d_conj_align(c, from, to);
  };
  Derivation bridge = rebuild(ctx, simplified, w.psi);
  WitnessResult out;
  out.psi = simplified;
  out.proof = d_cut(std::move(bridge), w.proof);
  return out;
}

}  // namespace chasekit
