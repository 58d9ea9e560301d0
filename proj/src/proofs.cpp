#include "chasekit/proofs.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace chasekit {

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::theory_axiom: return "theory_axiom";
    case Rule::identity: return "identity";
    case Rule::cut: return "cut";
    case Rule::substitution: return "substitution";
    case Rule::and_intro: return "and_intro";
    case Rule::and_elim: return "and_elim";
    case Rule::top_intro: return "top_intro";
    case Rule::eq_refl: return "eq_refl";
    case Rule::eq_subst: return "eq_subst";
    case Rule::exists_left: return "exists_left";
    case Rule::exists_right: return "exists_right";
    case Rule::weaken: return "weaken";
    case Rule::frobenius: return "frobenius";
    case Rule::or_intro: return "or_intro";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Checker

namespace {

// an identity VarMap wouldn't rename binders, so substitution recomputation
// stays structurally predictable for var-to-var maps
VarMap extend_identity(const VarMap& m, const Formula& f) {
  VarMap out = m;
  for (auto& v : free_vars_ordered(f))
    if (!out.count(v)) out[v] = Term::var(v);
  return out;
}

bool binder_free_in(const Context& binder, const Formula& f) {
  auto fv = free_vars(f);
  for (auto& v : binder)
    if (fv.count(v)) return true;
  return false;
}

Formula frobenius_conclusion(const Formula& ante, size_t i) {
  auto parts = ante.conjuncts();
  if (i >= parts.size()) throw IllFormedDerivation("frobenius index out of range");
  const Formula& e = parts[i];
  if (e.kind() != Formula::Kind::exists) throw IllFormedDerivation("frobenius conjunct is not an exists");
  std::vector<Formula> spliced;
  for (size_t j = 0; j < parts.size(); ++j) {
    if (j == i)
      spliced.push_back(e.body());
    else
      spliced.push_back(parts[j]);
  }
  for (size_t j = 0; j < parts.size(); ++j) {
    if (j == i) continue;
    if (binder_free_in(e.bound(), parts[j]))
      throw IllFormedDerivation("frobenius binder occurs in another conjunct");
  }
  return Formula::exists(e.bound(), Formula::conj(std::move(spliced)));
}

struct Checker {
  const Theory& theory;
  CheckResult result;

  void fail(const std::string& path, const std::string& msg) {
    if (!result.ok) return;  // keep the first failure
    result.ok = false;
    result.path = path.empty() ? "root" : path;
    result.message = msg;
  }

  void require(bool cond, const std::string& path, const std::string& msg) {
    if (!cond) fail(path, msg);
  }

  void check(const Derivation& d, const std::string& path) {
    if (!result.ok) return;
    const Sequent& c = d.conclusion;
    try {
      check_sequent(c, *theory.sig);
    } catch (const Error& e) {
      fail(path, std::string("ill-formed conclusion: ") + e.what());
      return;
    }
    auto single = [&](const Derivation& p) { return p.conclusion.cons.size() == 1; };
    switch (d.rule) {
      case Rule::theory_axiom: {
        require(d.premises.empty(), path, "theory_axiom takes no premises");
        const Sequent* ax = theory.find(d.axiom);
        if (!ax) {
          fail(path, "unknown axiom: " + d.axiom);
          return;
        }
        require(ax->ctx.subset_of(c.ctx), path, "axiom context not contained in conclusion context");
        require(alpha_equal(ax->ante, c.ante), path, "antecedent differs from axiom");
        require(ax->cons.size() == c.cons.size(), path, "consequent shape differs from axiom");
        for (size_t i = 0; i < c.cons.size() && result.ok; ++i)
          require(alpha_equal(ax->cons[i], c.cons[i]), path, "consequent differs from axiom");
        break;
      }
      case Rule::identity:
        require(d.premises.empty(), path, "identity takes no premises");
        require(c.cons.size() == 1 && alpha_equal(c.ante, c.cons[0]), path,
                "identity requires equal antecedent and consequent");
        break;
      case Rule::cut: {
        require(d.premises.size() == 2, path, "cut takes two premises");
        if (!result.ok) return;
        const Sequent& l = d.premises[0].conclusion;
        const Sequent& r = d.premises[1].conclusion;
        require(l.cons.size() == 1, path, "left cut premise must have a single consequent");
        require(l.ctx.set_equals(c.ctx) && r.ctx.set_equals(c.ctx), path,
                "cut contexts do not agree");
        if (result.ok) require(alpha_equal(l.cons[0], r.ante), path, "cut formulas do not match");
        require(alpha_equal(c.ante, l.ante), path, "cut antecedent mismatch");
        require(c.cons.size() == r.cons.size(), path, "cut consequent mismatch");
        for (size_t i = 0; i < c.cons.size() && result.ok; ++i)
          require(alpha_equal(c.cons[i], r.cons[i]), path, "cut consequent mismatch");
        break;
      }
      case Rule::substitution: {
        require(d.premises.size() == 1, path, "substitution takes one premise");
        if (!result.ok) return;
        const Sequent& p = d.premises[0].conclusion;
        require(c.ctx.set_equals(d.subst_ctx), path, "conclusion context differs from target");
        for (auto& v : p.ctx)
          if (!d.subst.count(v)) {
            fail(path, "substitution not total on premise context: " + v);
            return;
          }
        try {
          for (auto& [v, t] : d.subst) check_term(t, d.subst_ctx, *theory.sig);
          Formula want_ante = substitute(p.ante, extend_identity(d.subst, p.ante), d.subst_ctx);
          require(alpha_equal(c.ante, want_ante), path, "substituted antecedent mismatch");
          require(c.cons.size() == p.cons.size(), path, "substituted consequent mismatch");
          for (size_t i = 0; i < c.cons.size() && result.ok; ++i) {
            Formula want = substitute(p.cons[i], extend_identity(d.subst, p.cons[i]), d.subst_ctx);
            require(alpha_equal(c.cons[i], want), path, "substituted consequent mismatch");
          }
        } catch (const Error& e) {
          fail(path, std::string("substitution: ") + e.what());
          return;
        }
        break;
      }
      case Rule::and_intro: {
        require(c.cons.size() == 1, path, "and_intro concludes a single consequent");
        std::vector<Formula> parts;
        for (size_t i = 0; i < d.premises.size() && result.ok; ++i) {
          const Sequent& p = d.premises[i].conclusion;
          require(single(d.premises[i]), path, "and_intro premise must have a single consequent");
          require(p.ctx.set_equals(c.ctx), path, "and_intro contexts do not agree");
          if (result.ok) require(alpha_equal(p.ante, c.ante), path, "and_intro antecedents differ");
          if (result.ok) parts.push_back(p.cons[0]);
        }
        if (result.ok)
          require(alpha_equal(c.cons[0], Formula::conj(std::move(parts))), path,
                  "and_intro conclusion mismatch");
        break;
      }
      case Rule::and_elim: {
        require(d.premises.empty(), path, "and_elim takes no premises");
        require(c.cons.size() == 1, path, "and_elim concludes a single consequent");
        auto parts = c.ante.conjuncts();
        if (d.index >= parts.size()) {
          fail(path, "and_elim index out of range");
          return;
        }
        require(alpha_equal(c.cons[0], parts[d.index]), path, "and_elim conclusion mismatch");
        break;
      }
      case Rule::top_intro:
        require(d.premises.empty(), path, "top_intro takes no premises");
        require(c.cons.size() == 1 && c.cons[0].is_top(), path, "top_intro concludes top");
        break;
      case Rule::eq_refl: {
        require(d.premises.empty(), path, "eq_refl takes no premises");
        require(c.ante.is_top(), path, "eq_refl antecedent must be top");
        Formula want = Formula::atom(Atom::equality(d.term_a, d.term_a));
        require(c.cons.size() == 1 && alpha_equal(c.cons[0], want), path,
                "eq_refl conclusion mismatch");
        break;
      }
      case Rule::eq_subst: {
        require(d.premises.empty(), path, "eq_subst takes no premises");
        require(!c.ctx.contains(d.hole), path, "eq_subst hole must not be a context variable");
        if (!result.ok) return;
        try {
          VarMap ma = extend_identity({{d.hole, d.term_a}}, d.tmpl);
          VarMap mb = extend_identity({{d.hole, d.term_b}}, d.tmpl);
          Formula with_a = substitute(d.tmpl, ma, c.ctx);
          Formula with_b = substitute(d.tmpl, mb, c.ctx);
          Formula want_ante =
              Formula::conj({Formula::atom(Atom::equality(d.term_a, d.term_b)), with_a});
          require(alpha_equal(c.ante, want_ante), path, "eq_subst antecedent mismatch");
          require(c.cons.size() == 1 && alpha_equal(c.cons[0], with_b), path,
                  "eq_subst conclusion mismatch");
        } catch (const Error& e) {
          fail(path, std::string("eq_subst: ") + e.what());
          return;
        }
        break;
      }
      case Rule::exists_left: {
        require(d.premises.size() == 1, path, "exists_left takes one premise");
        if (!result.ok) return;
        const Sequent& p = d.premises[0].conclusion;
        require(single(d.premises[0]) && c.cons.size() == 1, path,
                "exists_left needs single consequents");
        for (auto& v : d.binder)
          require(!c.ctx.contains(v), path, "exists_left binder in conclusion context");
        require(p.ctx.set_equals(c.ctx.unioned(d.binder)), path,
                "exists_left premise context mismatch");
        if (!result.ok) return;
        require(!binder_free_in(d.binder, p.cons[0]), path,
                "exists_left binder occurs in consequent");
        require(alpha_equal(c.ante, Formula::exists(d.binder, p.ante)), path,
                "exists_left antecedent mismatch");
        require(alpha_equal(c.cons[0], p.cons[0]), path, "exists_left consequent mismatch");
        break;
      }
      case Rule::exists_right: {
        require(d.premises.size() == 1, path, "exists_right takes one premise");
        if (!result.ok) return;
        const Sequent& p = d.premises[0].conclusion;
        require(single(d.premises[0]) && c.cons.size() == 1, path,
                "exists_right needs single consequents");
        require(p.ante.kind() == Formula::Kind::exists, path,
                "exists_right premise antecedent must be an exists");
        if (!result.ok) return;
        const Context& full = p.ante.bound();
        require(d.binder.size() <= full.size(), path, "exists_right binder too long");
        for (size_t i = 0; i < d.binder.size() && result.ok; ++i)
          require(d.binder[i] == full[i], path, "exists_right binder is not a prefix");
        for (auto& v : d.binder)
          require(!p.ctx.contains(v), path, "exists_right binder in premise context");
        if (!result.ok) return;
        std::vector<std::string> rest(full.vars().begin() + d.binder.size(), full.vars().end());
        Formula want_ante = Formula::exists(Context(rest), p.ante.body());
        require(c.ctx.set_equals(p.ctx.unioned(d.binder)), path,
                "exists_right conclusion context mismatch");
        require(alpha_equal(c.ante, want_ante), path, "exists_right antecedent mismatch");
        require(alpha_equal(c.cons[0], p.cons[0]), path, "exists_right consequent mismatch");
        break;
      }
      case Rule::weaken: {
        require(d.premises.size() == 1, path, "weaken takes one premise");
        if (!result.ok) return;
        const Sequent& p = d.premises[0].conclusion;
        require(p.ctx.subset_of(c.ctx), path, "weaken target is not a supercontext");
        require(alpha_equal(c.ante, p.ante), path, "weaken antecedent mismatch");
        require(c.cons.size() == p.cons.size(), path, "weaken consequent mismatch");
        for (size_t i = 0; i < c.cons.size() && result.ok; ++i)
          require(alpha_equal(c.cons[i], p.cons[i]), path, "weaken consequent mismatch");
        break;
      }
      case Rule::frobenius: {
        require(d.premises.empty(), path, "frobenius takes no premises");
        try {
          Formula want = frobenius_conclusion(c.ante, d.index);
          require(c.cons.size() == 1 && alpha_equal(c.cons[0], want), path,
                  "frobenius conclusion mismatch");
        } catch (const Error& e) {
          fail(path, e.what());
          return;
        }
        break;
      }
      case Rule::or_intro:
        require(d.premises.empty(), path, "or_intro takes no premises");
        if (d.index >= c.cons.size()) {
          fail(path, "or_intro index out of range");
          return;
        }
        require(alpha_equal(c.ante, c.cons[d.index]), path, "or_intro antecedent mismatch");
        break;
    }
    for (size_t i = 0; i < d.premises.size() && result.ok; ++i)
      check(d.premises[i], path.empty() ? std::to_string(i) : path + "." + std::to_string(i));
  }
};

}  // namespace

CheckResult check_derivation(const Derivation& d, const Theory& t) {
  Checker c{t, {}};
  c.check(d, "");
  return c.result;
}

std::map<Rule, int> rule_multiset(const Derivation& d) {
  std::map<Rule, int> out;
  std::function<void(const Derivation&)> walk = [&](const Derivation& n) {
    ++out[n.rule];
    for (auto& p : n.premises) walk(p);
  };
  walk(d);
  return out;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

Sequent seq1(const Context& ctx, Formula ante, Formula cons) {
  Sequent s;
  s.ctx = ctx;
  s.ante = std::move(ante);
  s.cons = {std::move(cons)};
  return s;
}

[[noreturn]] void misuse(const std::string& msg) { throw IllFormedDerivation(msg); }

}  // namespace

Derivation d_identity(const Context& ctx, const Formula& f) {
  Derivation d;
  d.rule = Rule::identity;
  d.conclusion = seq1(ctx, f, f);
  return d;
}

Derivation d_theory_axiom(const Theory& t, const std::string& name, const Context& ctx) {
  const Sequent* ax = t.find(name);
  if (!ax) misuse("no axiom named " + name);
  if (!ax->ctx.subset_of(ctx)) misuse("axiom context not in requested context");
  Derivation d;
  d.rule = Rule::theory_axiom;
  d.axiom = name;
  d.conclusion = *ax;
  d.conclusion.ctx = ctx;
  return d;
}

Derivation d_cut(Derivation lhs, Derivation rhs) {
  const Sequent& l = lhs.conclusion;
  const Sequent& r = rhs.conclusion;
  if (l.cons.size() != 1) misuse("cut: left premise must be single-consequent");
  if (!l.ctx.set_equals(r.ctx)) misuse("cut: contexts disagree");
  if (!alpha_equal(l.cons[0], r.ante)) misuse("cut: formulas do not match");
  Derivation d;
  d.rule = Rule::cut;
  d.conclusion = r;
  d.conclusion.ante = l.ante;
  d.conclusion.ctx = l.ctx;
  d.premises = {std::move(lhs), std::move(rhs)};
  return d;
}

Derivation d_substitution(Derivation premise, const VarMap& map, const Context& target) {
  const Sequent& p = premise.conclusion;
  VarMap m = map;
  for (auto& v : p.ctx)
    if (!m.count(v)) misuse("substitution: map not total on premise context");
  Derivation d;
  d.rule = Rule::substitution;
  d.subst = m;
  d.subst_ctx = target;
  Sequent c;
  c.ctx = target;
  c.ante = substitute(p.ante, extend_identity(m, p.ante), target);
  for (auto& f : p.cons) c.cons.push_back(substitute(f, extend_identity(m, f), target));
  d.conclusion = std::move(c);
  d.premises = {std::move(premise)};
  return d;
}

Derivation d_and_intro(std::vector<Derivation> premises) {
  if (premises.empty()) misuse("and_intro needs at least one premise (use d_top_intro)");
  const Sequent& first = premises[0].conclusion;
  std::vector<Formula> parts;
  for (auto& p : premises) {
    if (p.conclusion.cons.size() != 1) misuse("and_intro: premise not single-consequent");
    if (!p.conclusion.ctx.set_equals(first.ctx)) misuse("and_intro: contexts disagree");
    if (!alpha_equal(p.conclusion.ante, first.ante)) misuse("and_intro: antecedents differ");
    parts.push_back(p.conclusion.cons[0]);
  }
  Derivation d;
  d.rule = Rule::and_intro;
  d.conclusion = seq1(first.ctx, first.ante, Formula::conj(std::move(parts)));
  d.premises = std::move(premises);
  return d;
}

Derivation d_and_elim(const Context& ctx, const Formula& conj, size_t i) {
  auto parts = conj.conjuncts();
  if (i >= parts.size()) misuse("and_elim: index out of range");
  Derivation d;
  d.rule = Rule::and_elim;
  d.index = i;
  d.conclusion = seq1(ctx, conj, parts[i]);
  return d;
}

Derivation d_top_intro(const Context& ctx, const Formula& ante) {
  Derivation d;
  d.rule = Rule::top_intro;
  d.conclusion = seq1(ctx, ante, Formula::top());
  return d;
}

Derivation d_eq_refl(const Context& ctx, const Term& t) {
  Derivation d;
  d.rule = Rule::eq_refl;
  d.term_a = t;
  d.conclusion = seq1(ctx, Formula::top(), Formula::atom(Atom::equality(t, t)));
  return d;
}

Derivation d_eq_subst(const Context& ctx, const Term& t, const Term& s, const Formula& tmpl,
                      const std::string& hole) {
  if (ctx.contains(hole)) misuse("eq_subst: hole clashes with context");
  Derivation d;
  d.rule = Rule::eq_subst;
  d.term_a = t;
  d.term_b = s;
  d.tmpl = tmpl;
  d.hole = hole;
  Formula with_t = substitute(tmpl, extend_identity({{hole, t}}, tmpl), ctx);
  Formula with_s = substitute(tmpl, extend_identity({{hole, s}}, tmpl), ctx);
  d.conclusion =
      seq1(ctx, Formula::conj({Formula::atom(Atom::equality(t, s)), with_t}), with_s);
  return d;
}

Derivation d_exists_left(Derivation premise, const Context& binder) {
  const Sequent& p = premise.conclusion;
  if (p.cons.size() != 1) misuse("exists_left: premise not single-consequent");
  if (binder_free_in(binder, p.cons[0])) misuse("exists_left: binder free in consequent");
  Context outer = p.ctx.minus(binder);
  for (auto& v : binder)
    if (!p.ctx.contains(v)) misuse("exists_left: binder not in premise context");
  Derivation d;
  d.rule = Rule::exists_left;
  d.binder = binder;
  d.conclusion = seq1(outer, Formula::exists(binder, p.ante), p.cons[0]);
  d.premises = {std::move(premise)};
  return d;
}

Derivation d_exists_right(Derivation premise, const Context& binder) {
  const Sequent& p = premise.conclusion;
  if (p.cons.size() != 1) misuse("exists_right: premise not single-consequent");
  if (p.ante.kind() != Formula::Kind::exists) misuse("exists_right: antecedent not an exists");
  const Context& full = p.ante.bound();
  if (binder.size() > full.size()) misuse("exists_right: binder too long");
  for (size_t i = 0; i < binder.size(); ++i)
    if (binder[i] != full[i]) misuse("exists_right: binder is not a prefix");
  for (auto& v : binder)
    if (p.ctx.contains(v)) misuse("exists_right: binder already in context");
  std::vector<std::string> rest(full.vars().begin() + binder.size(), full.vars().end());
  Derivation d;
  d.rule = Rule::exists_right;
  d.binder = binder;
  d.conclusion =
      seq1(p.ctx.extended(binder.vars()), Formula::exists(Context(rest), p.ante.body()), p.cons[0]);
  d.premises = {std::move(premise)};
  return d;
}

Derivation d_weaken(Derivation premise, const Context& to) {
  const Sequent& p = premise.conclusion;
  if (!p.ctx.subset_of(to)) misuse("weaken: not a supercontext");
  if (p.ctx.set_equals(to)) return premise;  // no-op
  Derivation d;
  d.rule = Rule::weaken;
  d.conclusion = p;
  d.conclusion.ctx = to;
  d.premises = {std::move(premise)};
  return d;
}

Derivation d_frobenius(const Context& ctx, const Formula& ante, size_t i) {
  Derivation d;
  d.rule = Rule::frobenius;
  d.index = i;
  d.conclusion = seq1(ctx, ante, frobenius_conclusion(ante, i));
  return d;
}

Derivation d_or_intro(const Context& ctx, const std::vector<Formula>& disjuncts, size_t i) {
  if (i >= disjuncts.size()) misuse("or_intro: index out of range");
  Derivation d;
  d.rule = Rule::or_intro;
  d.index = i;
  d.conclusion.ctx = ctx;
  d.conclusion.ante = disjuncts[i];
  d.conclusion.cons = disjuncts;
  return d;
}

// ---------------------------------------------------------------------------
// Derived combinators

Derivation d_refl_under(const Context& ctx, const Formula& ante, const Term& t) {
  return d_cut(d_top_intro(ctx, ante), d_eq_refl(ctx, t));
}

namespace {

std::string fresh_hole(const Context& ctx, const Formula& around) {
  FreshNames fresh;
  fresh.reserve_all(ctx);
  for (auto& v : free_vars_ordered(around)) fresh.reserve(v);
  return fresh.fresh("h");
}

}  // namespace

Derivation d_sym(Derivation eq) {
  const Sequent& s = eq.conclusion;
  if (s.cons.size() != 1 || s.cons[0].kind() != Formula::Kind::atom ||
      !s.cons[0].as_atom().is_eq())
    misuse("d_sym: premise is not an equality");
  Term a = s.cons[0].as_atom().lhs();
  Term b = s.cons[0].as_atom().rhs();
  Context ctx = s.ctx;
  Formula ante = s.ante;
  std::string hole = fresh_hole(ctx, s.cons[0]);
  Formula tmpl = Formula::atom(Atom::equality(Term::var(hole), a));
  Derivation node = d_eq_subst(ctx, a, b, tmpl, hole);  // (a=b) ∧ (a=a) ⊢ (b=a)
  return d_cut(d_and_intro({std::move(eq), d_refl_under(ctx, ante, a)}), std::move(node));
}

Derivation d_trans(Derivation ab, Derivation bc) {
  const Sequent& s1 = ab.conclusion;
  const Sequent& s2 = bc.conclusion;
  if (s1.cons.size() != 1 || s2.cons.size() != 1) misuse("d_trans: premises not single");
  const Atom& e1 = s1.cons[0].as_atom();
  const Atom& e2 = s2.cons[0].as_atom();
  if (!e1.is_eq() || !e2.is_eq() || !(e1.rhs() == e2.lhs())) misuse("d_trans: shapes do not chain");
  Term a = e1.lhs(), b = e1.rhs(), c = e2.rhs();
  Context ctx = s1.ctx;
  std::string hole = fresh_hole(ctx, Formula::conj({s1.cons[0], s2.cons[0]}));
  Formula tmpl = Formula::atom(Atom::equality(a, Term::var(hole)));
  Derivation node = d_eq_subst(ctx, b, c, tmpl, hole);  // (b=c) ∧ (a=b) ⊢ (a=c)
  return d_cut(d_and_intro({std::move(bc), std::move(ab)}), std::move(node));
}

Derivation d_rewrite(Derivation body, Derivation eq, const Formula& tmpl, const std::string& hole) {
  const Sequent& sb = body.conclusion;
  const Sequent& se = eq.conclusion;
  if (se.cons.size() != 1 || !se.cons[0].as_atom().is_eq()) misuse("d_rewrite: eq premise");
  Term t = se.cons[0].as_atom().lhs();
  Term s = se.cons[0].as_atom().rhs();
  Derivation node = d_eq_subst(sb.ctx, t, s, tmpl, hole);
  return d_cut(d_and_intro({std::move(eq), std::move(body)}), std::move(node));
}

Derivation d_project(const Context& ctx, const Formula& conj, const std::vector<size_t>& keep) {
  if (keep.empty()) return d_top_intro(ctx, conj);
  std::vector<Derivation> premises;
  for (size_t k : keep) premises.push_back(d_and_elim(ctx, conj, k));
  return d_and_intro(std::move(premises));
}

Derivation d_conj_align(const Context& ctx, const Formula& gamma, const Formula& target) {
  auto have = gamma.conjuncts();
  auto want = target.conjuncts();
  if (target.is_top()) return d_top_intro(ctx, gamma);
  std::vector<Derivation> premises;
  for (auto& w : want) {
    bool found = false;
    for (size_t j = 0; j < have.size(); ++j) {
      if (alpha_equal(have[j], w)) {
        premises.push_back(d_and_elim(ctx, gamma, j));
        found = true;
        break;
      }
    }
    if (found) continue;
    if (w.kind() == Formula::Kind::atom && w.as_atom().is_eq() &&
        w.as_atom().lhs() == w.as_atom().rhs()) {
      premises.push_back(d_refl_under(ctx, gamma, w.as_atom().lhs()));
      continue;
    }
    misuse("d_conj_align: conjunct not available: " + std::to_string(premises.size()));
  }
  Derivation d = d_and_intro(std::move(premises));
  if (!alpha_equal(d.conclusion.cons[0], target)) misuse("d_conj_align: shape mismatch");
  d.conclusion.cons[0] = target;
  return d;
}

Derivation d_exists_intro(const Context& ctx, const Formula& ex, const VarMap& w) {
  if (ex.kind() != Formula::Kind::exists) {
    // degenerate: no quantifier to introduce
    return d_identity(ctx, ex);
  }
  const Context& binder = ex.bound();
  bool identity_witness = true, fresh_binder = true;
  for (auto& v : binder) {
    auto it = w.find(v);
    if (it == w.end()) misuse("d_exists_intro: witness missing for " + v);
    if (!(it->second == Term::var(v)) || !ctx.contains(v)) identity_witness = false;
    if (ctx.contains(v)) fresh_binder = false;
  }
  if (identity_witness) {
    Context base = ctx.minus(binder);
    return d_exists_right(d_identity(base, ex), binder);
  }
  if (!fresh_binder) misuse("d_exists_intro: mixed witness (neither identity nor fresh binder)");
  Derivation inner = d_exists_right(d_identity(ctx, ex), binder);
  VarMap m = w;
  for (auto& v : ctx) m[v] = Term::var(v);
  return d_substitution(std::move(inner), m, ctx);
}

Derivation d_exists_mono(Derivation premise, const Context& binder) {
  const Sequent& p = premise.conclusion;
  if (p.cons.size() != 1) misuse("d_exists_mono: premise not single");
  Context inner_ctx = p.ctx;
  Formula target = Formula::exists(binder, p.cons[0]);
  VarMap idw;
  for (auto& v : binder) idw[v] = Term::var(v);
  Derivation intro = d_exists_intro(inner_ctx, target, idw);
  return d_exists_left(d_cut(std::move(premise), std::move(intro)), binder);
}

Derivation d_conj_pull(const Context& ctx, const std::vector<Formula>& parts) {
  Formula gamma = Formula::conj(parts);
  auto cs = gamma.conjuncts();
  size_t i = 0;
  for (; i < cs.size(); ++i)
    if (cs[i].kind() == Formula::Kind::exists) break;
  if (gamma.kind() == Formula::Kind::exists) {
    // single conjunct which is an exists: nothing to pull
    return d_identity(ctx, gamma);
  }
  if (i == cs.size()) return d_identity(ctx, gamma);
  const Formula& e = cs[i];
  Derivation frob = d_frobenius(ctx, gamma, i);
  std::vector<Formula> spliced;
  for (size_t j = 0; j < cs.size(); ++j) spliced.push_back(j == i ? e.body() : cs[j]);
  Derivation rec = d_conj_pull(ctx.extended(e.bound().vars()), spliced);
  Derivation mono = d_exists_mono(std::move(rec), e.bound());
  return d_cut(std::move(frob), std::move(mono));
}

}  // namespace chasekit
