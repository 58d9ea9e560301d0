#include "chasekit/syntax.hpp"

#include <algorithm>

namespace chasekit {

// ---------------------------------------------------------------------------
// Signature

int Signature::fun_arity(const std::string& s) const {
  auto it = funs.find(s);
  if (it == funs.end()) throw Error("unknown function symbol: " + s);
  return it->second;
}

int Signature::rel_arity(const std::string& s) const {
  auto it = rels.find(s);
  if (it == rels.end()) throw Error("unknown relation symbol: " + s);
  return it->second;
}

SigPtr make_signature(std::map<std::string, int> funs, std::map<std::string, int> rels) {
  for (auto& [name, ar] : funs)
    if (ar < 0) throw Error("negative arity for " + name);
  for (auto& [name, ar] : rels)
    if (ar < 0) throw Error("negative arity for " + name);
  auto sig = std::make_shared<Signature>();
  sig->funs = std::move(funs);
  sig->rels = std::move(rels);
  return sig;
}

// ---------------------------------------------------------------------------
// Context

Context::Context(std::vector<std::string> vars) : vars_(std::move(vars)) {
  std::set<std::string> seen;
  for (auto& v : vars_)
    if (!seen.insert(v).second) throw Error("duplicate variable in context: " + v);
}

bool Context::contains(const std::string& v) const {
  return std::find(vars_.begin(), vars_.end(), v) != vars_.end();
}

std::optional<size_t> Context::index_of(const std::string& v) const {
  for (size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == v) return i;
  return std::nullopt;
}

bool Context::subset_of(const Context& other) const {
  for (auto& v : vars_)
    if (!other.contains(v)) return false;
  return true;
}

bool Context::set_equals(const Context& other) const {
  return subset_of(other) && other.subset_of(*this);
}

Context Context::extended(const std::vector<std::string>& more) const {
  std::vector<std::string> vs = vars_;
  for (auto& v : more) vs.push_back(v);
  return Context(vs);
}

Context Context::unioned(const Context& other) const {
  std::vector<std::string> vs = vars_;
  for (auto& v : other.vars_)
    if (!contains(v)) vs.push_back(v);
  return Context(vs);
}

Context Context::minus(const Context& other) const {
  std::vector<std::string> vs;
  for (auto& v : vars_)
    if (!other.contains(v)) vs.push_back(v);
  return Context(vs);
}

void FreshNames::reserve_all(const Context& ctx) {
  for (auto& v : ctx) used_.insert(v);
}

std::string FreshNames::fresh(const std::string& hint) {
  if (!hint.empty() && used_.insert(hint).second) return hint;
  for (;;) {
    std::string cand = "v" + std::to_string(counter_++);
    if (used_.insert(cand).second) return cand;
  }
}

// ---------------------------------------------------------------------------
// Terms

struct Term::Rep {
  bool is_var;
  std::string head;
  std::vector<Term> args;
};

Term::Term() {
  auto rep = std::make_shared<Rep>();
  rep->is_var = true;
  rep->head = "_";
  rep_ = rep;
}

Term Term::var(const std::string& name) {
  Term t;
  auto rep = std::make_shared<Rep>();
  rep->is_var = true;
  rep->head = name;
  t.rep_ = rep;
  return t;
}

Term Term::app(const std::string& fn, std::vector<Term> args) {
  Term t;
  auto rep = std::make_shared<Rep>();
  rep->is_var = false;
  rep->head = fn;
  rep->args = std::move(args);
  t.rep_ = rep;
  return t;
}

bool Term::is_var() const { return rep_->is_var; }
const std::string& Term::head() const { return rep_->head; }
const std::vector<Term>& Term::args() const { return rep_->args; }

int Term::compare(const Term& other) const {
  if (rep_ == other.rep_) return 0;
  if (rep_->is_var != other.rep_->is_var) return rep_->is_var ? -1 : 1;
  if (int c = rep_->head.compare(other.rep_->head)) return c < 0 ? -1 : 1;
  const auto& a = rep_->args;
  const auto& b = other.rep_->args;
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (size_t i = 0; i < a.size(); ++i)
    if (int c = a[i].compare(b[i])) return c;
  return 0;
}

bool operator==(const Term& a, const Term& b) { return a.compare(b) == 0; }

void term_vars(const Term& t, std::vector<std::string>& out) {
  if (t.is_var()) {
    if (std::find(out.begin(), out.end(), t.head()) == out.end()) out.push_back(t.head());
    return;
  }
  for (auto& a : t.args()) term_vars(a, out);
}

void check_term(const Term& t, const Context& ctx, const Signature& sig) {
  if (t.is_var()) {
    if (!ctx.contains(t.head())) throw UnboundVariable("variable not in context: " + t.head());
    return;
  }
  int ar = sig.fun_arity(t.head());
  if ((int)t.args().size() != ar)
    throw ArityMismatch("function " + t.head() + " expects " + std::to_string(ar) + " arguments");
  for (auto& a : t.args()) check_term(a, ctx, sig);
}

// ---------------------------------------------------------------------------
// Atoms

Atom Atom::equality(Term lhs, Term rhs) {
  Atom a;
  a.kind = Kind::eq;
  a.args = {std::move(lhs), std::move(rhs)};
  return a;
}

Atom Atom::relation(std::string rel, std::vector<Term> args) {
  Atom a;
  a.kind = Kind::rel;
  a.rel = std::move(rel);
  a.args = std::move(args);
  return a;
}

int Atom::compare(const Atom& other) const {
  if (kind != other.kind) return kind == Kind::eq ? -1 : 1;
  if (int c = rel.compare(other.rel)) return c < 0 ? -1 : 1;
  if (args.size() != other.args.size()) return args.size() < other.args.size() ? -1 : 1;
  for (size_t i = 0; i < args.size(); ++i)
    if (int c = args[i].compare(other.args[i])) return c;
  return 0;
}

bool operator==(const Atom& a, const Atom& b) { return a.compare(b) == 0; }

// ---------------------------------------------------------------------------
// Formulas

struct Formula::Rep {
  Kind kind;
  Atom atom;                   // kind == atom
  std::vector<Formula> parts;  // kind == conj, or {body} for exists
  Context bound;               // kind == exists
};

Formula::Formula() {
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::conj;
  rep_ = rep;
}

Formula Formula::atom(Atom a) {
  Formula f;
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::atom;
  rep->atom = std::move(a);
  f.rep_ = rep;
  return f;
}

Formula Formula::conj(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& p : parts) {
    if (p.kind() == Kind::conj) {
      for (auto& q : p.parts()) flat.push_back(q);
    } else {
      flat.push_back(p);
    }
  }
  if (flat.size() == 1) return flat[0];
  Formula f;
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::conj;
  rep->parts = std::move(flat);
  f.rep_ = rep;
  return f;
}

Formula Formula::exists(const Context& bound, Formula body) {
  if (bound.empty()) return body;
  Context b = bound;
  Formula inner = body;
  if (inner.kind() == Kind::exists) {
    b = b.extended(inner.bound().vars());
    inner = inner.body();
  }
  Formula f;
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::exists;
  rep->bound = b;
  rep->parts = {inner};
  f.rep_ = rep;
  return f;
}

Formula::Kind Formula::kind() const { return rep_->kind; }
bool Formula::is_top() const { return rep_->kind == Kind::conj && rep_->parts.empty(); }
const Atom& Formula::as_atom() const { return rep_->atom; }
const std::vector<Formula>& Formula::parts() const { return rep_->parts; }
const Context& Formula::bound() const { return rep_->bound; }
const Formula& Formula::body() const { return rep_->parts[0]; }

std::vector<Formula> Formula::conjuncts() const {
  if (kind() == Kind::conj) return parts();
  return {*this};
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.rep_ == b.rep_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Formula::Kind::atom:
      return a.as_atom() == b.as_atom();
    case Formula::Kind::conj:
      return a.parts() == b.parts();
    case Formula::Kind::exists:
      return a.bound().vars() == b.bound().vars() && a.body() == b.body();
  }
  return false;
}

Formula HornFormula::to_formula() const {
  std::vector<Formula> parts;
  parts.reserve(atoms.size());
  for (auto& a : atoms) parts.push_back(Formula::atom(a));
  return Formula::conj(std::move(parts));
}

std::optional<HornFormula> as_horn(const Formula& f) {
  HornFormula h;
  switch (f.kind()) {
    case Formula::Kind::atom:
      h.atoms.push_back(f.as_atom());
      return h;
    case Formula::Kind::conj:
      for (auto& p : f.parts()) {
        if (p.kind() != Formula::Kind::atom) return std::nullopt;
        h.atoms.push_back(p.as_atom());
      }
      return h;
    case Formula::Kind::exists:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Theory

const Sequent* Theory::find(const std::string& name) const {
  for (auto& [n, s] : axioms)
    if (n == name) return &s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Free variables, scoping

namespace {

void fv_walk(const Formula& f, std::vector<std::string>& bound, std::vector<std::string>& out) {
  auto add = [&](const std::string& v) {
    if (std::find(bound.begin(), bound.end(), v) != bound.end()) return;
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  switch (f.kind()) {
    case Formula::Kind::atom: {
      std::vector<std::string> vs;
      for (auto& t : f.as_atom().args) term_vars(t, vs);
      for (auto& v : vs) add(v);
      break;
    }
    case Formula::Kind::conj:
      for (auto& p : f.parts()) fv_walk(p, bound, out);
      break;
    case Formula::Kind::exists: {
      size_t n = bound.size();
      for (auto& v : f.bound()) bound.push_back(v);
      fv_walk(f.body(), bound, out);
      bound.resize(n);
      break;
    }
  }
}

}  // namespace

std::vector<std::string> free_vars_ordered(const Formula& f) {
  std::vector<std::string> bound, out;
  fv_walk(f, bound, out);
  return out;
}

std::set<std::string> free_vars(const Formula& f) {
  auto v = free_vars_ordered(f);
  return std::set<std::string>(v.begin(), v.end());
}

bool well_scoped(const Formula& f, const Context& ctx) {
  for (auto& v : free_vars_ordered(f))
    if (!ctx.contains(v)) return false;
  return true;
}

void check_formula(const Formula& f, const Context& ctx, const Signature& sig) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      const Atom& a = f.as_atom();
      if (a.is_eq()) {
        check_term(a.lhs(), ctx, sig);
        check_term(a.rhs(), ctx, sig);
      } else {
        int ar = sig.rel_arity(a.rel);
        if ((int)a.args.size() != ar)
          throw ArityMismatch("relation " + a.rel + " expects " + std::to_string(ar) + " arguments");
        for (auto& t : a.args) check_term(t, ctx, sig);
      }
      break;
    }
    case Formula::Kind::conj:
      for (auto& p : f.parts()) check_formula(p, ctx, sig);
      break;
    case Formula::Kind::exists: {
      // shadowing an ambient variable is allowed (arises in ∃-introductions);
      // evaluation and substitution treat the inner binding as the closer one
      check_formula(f.body(), ctx.unioned(f.bound()), sig);
      break;
    }
  }
}

void check_sequent(const Sequent& s, const Signature& sig) {
  check_formula(s.ante, s.ctx, sig);
  if (s.cons.empty()) throw Error("sequent with empty consequent");
  for (auto& d : s.cons) check_formula(d, s.ctx, sig);
}

void check_theory(const Theory& t) {
  std::set<std::string> names;
  for (auto& [name, ax] : t.axioms) {
    if (!names.insert(name).second) throw Error("duplicate axiom name: " + name);
    check_sequent(ax, *t.sig);
  }
}

// ---------------------------------------------------------------------------
// Substitution

Term substitute(const Term& t, const VarMap& m) {
  if (t.is_var()) {
    auto it = m.find(t.head());
    if (it == m.end()) throw UnboundVariable("no image for variable: " + t.head());
    return it->second;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (auto& a : t.args()) args.push_back(substitute(a, m));
  return Term::app(t.head(), std::move(args));
}

Atom substitute(const Atom& a, const VarMap& m) {
  Atom r = a;
  for (auto& t : r.args) t = substitute(t, m);
  return r;
}

namespace {

Formula subst_walk(const Formula& f, const VarMap& m, FreshNames& fresh) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return Formula::atom(substitute(f.as_atom(), m));
    case Formula::Kind::conj: {
      std::vector<Formula> parts;
      parts.reserve(f.parts().size());
      for (auto& p : f.parts()) parts.push_back(subst_walk(p, m, fresh));
      return Formula::conj(std::move(parts));
    }
    case Formula::Kind::exists: {
      // Rename the binder away from anything the images might mention.
      VarMap inner = m;
      std::vector<std::string> new_bound;
      for (auto& v : f.bound()) {
        std::string nv = fresh.fresh(v);
        new_bound.push_back(nv);
        inner[v] = Term::var(nv);
      }
      Formula body = subst_walk(f.body(), inner, fresh);
      return Formula::exists(Context(new_bound), body);
    }
  }
  throw Error("unreachable");
}

}  // namespace

Formula substitute(const Formula& f, const VarMap& assignment, const Context& target) {
  for (auto& v : free_vars_ordered(f))
    if (!assignment.count(v)) throw UnboundVariable("assignment not total on: " + v);
  FreshNames fresh;
  fresh.reserve_all(target);
  for (auto& [v, t] : assignment) {
    std::vector<std::string> vs;
    term_vars(t, vs);
    for (auto& x : vs) fresh.reserve(x);
  }
  return subst_walk(f, assignment, fresh);
}

Sequent substitute(const Sequent& s, const VarMap& assignment, const Context& target) {
  Sequent r;
  r.ctx = target;
  r.ante = substitute(s.ante, assignment, target);
  for (auto& d : s.cons) r.cons.push_back(substitute(d, assignment, target));
  return r;
}

Formula weaken(const Formula& f, const Context& from, const Context& to) {
  if (!from.subset_of(to)) throw NotASubcontext("context is not a subcontext of the target");
  if (!well_scoped(f, from)) throw UnboundVariable("formula not scoped in source context");
  return f;
}

// ---------------------------------------------------------------------------
// Fragments

Fragment classify_fragment(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return Fragment::horn;
    case Formula::Kind::conj: {
      Fragment frag = Fragment::horn;
      for (auto& p : f.parts())
        if (classify_fragment(p) == Fragment::regular) frag = Fragment::regular;
      return frag;
    }
    case Formula::Kind::exists:
      return Fragment::regular;
  }
  return Fragment::unsupported;
}

Fragment classify_fragment(const Sequent& s) {
  if (s.cons.size() > 1) return Fragment::geometric;
  Fragment a = classify_fragment(s.ante);
  Fragment c = classify_fragment(s.cons_formula());
  return (a == Fragment::regular || c == Fragment::regular) ? Fragment::regular : Fragment::horn;
}

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

bool alpha_term(const Term& a, const Term& b, const std::map<std::string, std::string>& ab) {
  if (a.is_var() != b.is_var()) return false;
  if (a.is_var()) {
    auto it = ab.find(a.head());
    const std::string& want = (it != ab.end()) ? it->second : a.head();
    return want == b.head();
  }
  if (a.head() != b.head() || a.args().size() != b.args().size()) return false;
  for (size_t i = 0; i < a.args().size(); ++i)
    if (!alpha_term(a.args()[i], b.args()[i], ab)) return false;
  return true;
}

bool alpha_walk(const Formula& a, const Formula& b, std::map<std::string, std::string> ab) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Formula::Kind::atom: {
      const Atom& x = a.as_atom();
      const Atom& y = b.as_atom();
      if (x.kind != y.kind || x.rel != y.rel || x.args.size() != y.args.size()) return false;
      for (size_t i = 0; i < x.args.size(); ++i)
        if (!alpha_term(x.args[i], y.args[i], ab)) return false;
      return true;
    }
    case Formula::Kind::conj: {
      if (a.parts().size() != b.parts().size()) return false;
      for (size_t i = 0; i < a.parts().size(); ++i)
        if (!alpha_walk(a.parts()[i], b.parts()[i], ab)) return false;
      return true;
    }
    case Formula::Kind::exists: {
      if (a.bound().size() != b.bound().size()) return false;
      for (size_t i = 0; i < a.bound().size(); ++i) ab[a.bound()[i]] = b.bound()[i];
      return alpha_walk(a.body(), b.body(), std::move(ab));
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const Formula& a, const Formula& b) {
  return alpha_walk(a, b, {});
}

bool alpha_equal(const Sequent& a, const Sequent& b) {
  if (!a.ctx.set_equals(b.ctx)) return false;
  if (a.cons.size() != b.cons.size()) return false;
  if (!alpha_equal(a.ante, b.ante)) return false;
  for (size_t i = 0; i < a.cons.size(); ++i)
    if (!alpha_equal(a.cons[i], b.cons[i])) return false;
  return true;
}

std::vector<std::string> relation_multiset(const Formula& f) {
  std::vector<std::string> out;
  switch (f.kind()) {
    case Formula::Kind::atom:
      if (!f.as_atom().is_eq()) out.push_back(f.as_atom().rel);
      break;
    case Formula::Kind::conj:
      for (auto& p : f.parts()) {
        auto sub = relation_multiset(p);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      break;
    case Formula::Kind::exists:
      out = relation_multiset(f.body());
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace chasekit
