#include <algorithm>
#include <functional>

#include "chasekit/proofs.hpp"

// Constants-to-variables abstraction. Occurrences of the designated constants
// are replaced by fresh variables, distinct as far as possible and identified
// only when two occurrences correspond through a shared cut/and_intro formula.
// Constants of two distinct occurrences are never compared; the merge is
// positional and the assignment is read off the representative's occurrence.

namespace chasekit {

namespace {

using StrMap = std::map<std::string, std::string>;

struct Alloc {
  const std::set<std::string>& consts;
  bool forced = false;
  const std::vector<int>* class_of = nullptr;
  int occ = 0;
  std::vector<std::string> order;  // creation order of fresh variables
  StrMap constant_of;

  std::string take(const std::string& constant, const std::string& node_path, int& local) {
    if (forced) {
      int cls = (class_of && occ < (int)class_of->size()) ? (*class_of)[occ] : occ;
      ++occ;
      std::string v = "y@p" + std::to_string(cls);
      if (!constant_of.count(v)) {
        constant_of[v] = constant;
        order.push_back(v);
      }
      return v;
    }
    ++occ;
    std::string v = "y@" + node_path + ":" + std::to_string(local++);
    constant_of[v] = constant;
    order.push_back(v);
    return v;
  }
};

Term replace_term(const Term& t, Alloc& al, const std::string& path, int& local) {
  if (t.is_var()) return t;
  if (t.args().empty() && al.consts.count(t.head()))
    return Term::var(al.take(t.head(), path, local));
  std::vector<Term> args;
  for (auto& a : t.args()) args.push_back(replace_term(a, al, path, local));
  return Term::app(t.head(), std::move(args));
}

Formula replace_formula(const Formula& f, Alloc& al, const std::string& path, int& local) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      Atom a = f.as_atom();
      for (auto& t : a.args) t = replace_term(t, al, path, local);
      return Formula::atom(a);
    }
    case Formula::Kind::conj: {
      std::vector<Formula> parts;
      for (auto& p : f.parts()) parts.push_back(replace_formula(p, al, path, local));
      return Formula::conj(std::move(parts));
    }
    case Formula::Kind::exists:
      return Formula::exists(f.bound(), replace_formula(f.body(), al, path, local));
  }
  throw Error("unreachable");
}

// ---------------------------------------------------------------------------
// Variable renaming over whole derivations (free occurrences only)

Term rename_term(const Term& t, const StrMap& m, const std::set<std::string>& bound) {
  if (t.is_var()) {
    if (bound.count(t.head())) return t;
    auto it = m.find(t.head());
    return it == m.end() ? t : Term::var(it->second);
  }
  std::vector<Term> args;
  for (auto& a : t.args()) args.push_back(rename_term(a, m, bound));
  return Term::app(t.head(), std::move(args));
}

Formula rename_formula(const Formula& f, const StrMap& m, std::set<std::string> bound) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      Atom a = f.as_atom();
      for (auto& t : a.args) t = rename_term(t, m, bound);
      return Formula::atom(a);
    }
    case Formula::Kind::conj: {
      std::vector<Formula> parts;
      for (auto& p : f.parts()) parts.push_back(rename_formula(p, m, bound));
      return Formula::conj(std::move(parts));
    }
    case Formula::Kind::exists: {
      for (auto& v : f.bound()) bound.insert(v);
      return Formula::exists(f.bound(), rename_formula(f.body(), m, std::move(bound)));
    }
  }
  throw Error("unreachable");
}

Context rename_context(const Context& ctx, const StrMap& m) {
  std::vector<std::string> out;
  for (auto& v : ctx) {
    auto it = m.find(v);
    const std::string& nv = it == m.end() ? v : it->second;
    if (std::find(out.begin(), out.end(), nv) == out.end()) out.push_back(nv);
  }
  return Context(out);
}

Derivation rename_tree(const Derivation& d, const StrMap& m) {
  Derivation out = d;
  out.conclusion.ctx = rename_context(d.conclusion.ctx, m);
  out.conclusion.ante = rename_formula(d.conclusion.ante, m, {});
  for (auto& f : out.conclusion.cons) f = rename_formula(f, m, {});
  if (d.rule == Rule::substitution) {
    VarMap ns;
    for (auto& [k, t] : d.subst) {
      auto it = m.find(k);
      std::string nk = it == m.end() ? k : it->second;
      Term nt = rename_term(t, m, {});
      auto jt = ns.find(nk);
      if (jt != ns.end() && !(jt->second == nt))
        throw Error("internal: inconsistent substitution merge");
      ns[nk] = nt;
    }
    out.subst = std::move(ns);
    out.subst_ctx = rename_context(d.subst_ctx, m);
  }
  out.term_a = rename_term(d.term_a, m, {});
  out.term_b = rename_term(d.term_b, m, {});
  out.tmpl = rename_formula(d.tmpl, m, {});
  out.premises.clear();
  for (auto& p : d.premises) out.premises.push_back(rename_tree(p, m));
  return out;
}

// Uniform context extension; keeps every rule locally valid.
Derivation extend_ctx_tree(const Derivation& d, const std::vector<std::string>& extra) {
  Derivation out = d;
  std::vector<std::string> add;
  for (auto& v : extra)
    if (!out.conclusion.ctx.contains(v)) add.push_back(v);
  out.conclusion.ctx = out.conclusion.ctx.extended(add);
  if (d.rule == Rule::substitution) {
    std::vector<std::string> tadd;
    for (auto& v : extra)
      if (!out.subst_ctx.contains(v)) tadd.push_back(v);
    out.subst_ctx = out.subst_ctx.extended(tadd);
    for (auto& v : extra)
      if (!out.subst.count(v)) out.subst[v] = Term::var(v);
  }
  out.premises.clear();
  for (auto& p : d.premises) out.premises.push_back(extend_ctx_tree(p, extra));
  return out;
}

// ---------------------------------------------------------------------------
// Correspondence of fresh-variable occurrences in two copies of one formula

struct UnionFind {
  std::map<std::string, std::string> parent;
  std::vector<std::string> order;

  void add(const std::string& v) {
    if (!parent.count(v)) {
      parent[v] = v;
      order.push_back(v);
    }
  }
  std::string find(const std::string& v) {
    std::string r = v;
    while (parent.at(r) != r) r = parent.at(r);
    parent[v] = r;
    return r;
  }
  // keep the earlier-created representative
  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    auto pos = [&](const std::string& v) {
      return std::find(order.begin(), order.end(), v) - order.begin();
    };
    if (pos(ra) <= pos(rb))
      parent[rb] = ra;
    else
      parent[ra] = rb;
  }
};

void correspond_term(const Term& a, const Term& b, const std::set<std::string>& fa,
                     const std::set<std::string>& fb, const StrMap& bmap, UnionFind& uf) {
  bool va = a.is_var(), vb = b.is_var();
  if (va && vb) {
    bool ia = fa.count(a.head()), ib = fb.count(b.head());
    if (ia && ib) {
      uf.unite(a.head(), b.head());
      return;
    }
    if (ia != ib) throw Error("internal: abstraction copies diverge (var classes)");
    auto it = bmap.find(a.head());
    const std::string& want = it == bmap.end() ? a.head() : it->second;
    if (want != b.head()) throw Error("internal: abstraction copies diverge (vars)");
    return;
  }
  if (va != vb) throw Error("internal: abstraction copies diverge (shape)");
  if (a.head() != b.head() || a.args().size() != b.args().size())
    throw Error("internal: abstraction copies diverge (apps)");
  for (size_t i = 0; i < a.args().size(); ++i)
    correspond_term(a.args()[i], b.args()[i], fa, fb, bmap, uf);
}

void correspond(const Formula& a, const Formula& b, const std::set<std::string>& fa,
                const std::set<std::string>& fb, StrMap bmap, UnionFind& uf) {
  if (a.kind() != b.kind()) throw Error("internal: abstraction copies diverge (kind)");
  switch (a.kind()) {
    case Formula::Kind::atom: {
      const Atom& x = a.as_atom();
      const Atom& y = b.as_atom();
      if (x.kind != y.kind || x.rel != y.rel || x.args.size() != y.args.size())
        throw Error("internal: abstraction copies diverge (atom)");
      for (size_t i = 0; i < x.args.size(); ++i)
        correspond_term(x.args[i], y.args[i], fa, fb, bmap, uf);
      return;
    }
    case Formula::Kind::conj: {
      if (a.parts().size() != b.parts().size())
        throw Error("internal: abstraction copies diverge (conj)");
      for (size_t i = 0; i < a.parts().size(); ++i)
        correspond(a.parts()[i], b.parts()[i], fa, fb, bmap, uf);
      return;
    }
    case Formula::Kind::exists: {
      if (a.bound().size() != b.bound().size())
        throw Error("internal: abstraction copies diverge (binder)");
      for (size_t i = 0; i < a.bound().size(); ++i) bmap[a.bound()[i]] = b.bound()[i];
      correspond(a.body(), b.body(), fa, fb, std::move(bmap), uf);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Main recursion

struct AbsRes {
  Derivation d;
  std::vector<std::string> fresh;  // creation order, already representative-only
};

struct Abstractor {
  Alloc al;

  AbsRes join(const Derivation& orig, std::vector<AbsRes> kids,
              const std::vector<std::pair<size_t, size_t>>& links,
              const std::function<Derivation(const std::vector<Derivation>&, const Context&)>& mk) {
    // links: pairs of (child, child) whose shared formula forces identifications
    if (!al.forced) {
      UnionFind uf;
      for (auto& k : kids)
        for (auto& v : k.fresh) uf.add(v);
      for (auto& [i, j] : links) {
        std::set<std::string> fi(kids[i].fresh.begin(), kids[i].fresh.end());
        std::set<std::string> fj(kids[j].fresh.begin(), kids[j].fresh.end());
        const Formula* left = nullptr;
        const Formula* right = nullptr;
        if (orig.rule == Rule::cut) {
          left = &kids[i].d.conclusion.cons[0];
          right = &kids[j].d.conclusion.ante;
        } else {  // and_intro: shared antecedent
          left = &kids[i].d.conclusion.ante;
          right = &kids[j].d.conclusion.ante;
        }
        correspond(*left, *right, fi, fj, {}, uf);
      }
      StrMap q;
      for (auto& v : uf.order) {
        std::string r = uf.find(v);
        if (r != v) q[v] = r;
      }
      if (!q.empty())
        for (auto& k : kids) k.d = rename_tree(k.d, q);
      std::vector<std::string> merged;
      for (auto& k : kids)
        for (auto& v : k.fresh) {
          std::string r = uf.find(v);
          if (std::find(merged.begin(), merged.end(), r) == merged.end()) merged.push_back(r);
        }
      Context ctx = orig.conclusion.ctx.extended(merged);
      std::vector<Derivation> parts;
      for (auto& k : kids) parts.push_back(extend_ctx_tree(k.d, merged));
      return AbsRes{mk(parts, ctx), std::move(merged)};
    }
    // forced mode: classes are shared across subtrees; just union the names
    std::vector<std::string> merged;
    for (auto& k : kids)
      for (auto& v : k.fresh)
        if (std::find(merged.begin(), merged.end(), v) == merged.end()) merged.push_back(v);
    Context ctx = orig.conclusion.ctx.extended([&] {
      std::vector<std::string> add;
      for (auto& v : merged)
        if (!orig.conclusion.ctx.contains(v)) add.push_back(v);
      return add;
    }());
    std::vector<Derivation> parts;
    for (auto& k : kids) parts.push_back(extend_ctx_tree(k.d, merged));
    return AbsRes{mk(parts, ctx), std::move(merged)};
  }

  AbsRes go(const Derivation& d, const std::string& path) {
    int local = 0;
    auto rep_formula = [&](const Formula& f) { return replace_formula(f, al, path, local); };
    auto rep_term = [&](const Term& t) { return replace_term(t, al, path, local); };

    size_t mark = al.order.size();
    auto own_fresh = [&] {
      return std::vector<std::string>(al.order.begin() + mark, al.order.end());
    };
    auto extend = [&](const Context& base, const std::vector<std::string>& fr) {
      std::vector<std::string> add;
      for (auto& v : fr)
        if (!base.contains(v)) add.push_back(v);
      return base.extended(add);
    };

    switch (d.rule) {
      case Rule::theory_axiom:
        return AbsRes{d, {}};
      case Rule::identity: {
        Formula f = rep_formula(d.conclusion.ante);
        auto fr = own_fresh();
        Derivation nd;
        nd.rule = Rule::identity;
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = f;
        nd.conclusion.cons = {f};
        return AbsRes{std::move(nd), fr};
      }
      case Rule::and_elim: {
        Formula g = rep_formula(d.conclusion.ante);
        auto fr = own_fresh();
        Derivation nd;
        nd.rule = Rule::and_elim;
        nd.index = d.index;
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = g;
        nd.conclusion.cons = {g.conjuncts()[d.index]};
        return AbsRes{std::move(nd), fr};
      }
      case Rule::top_intro: {
        Formula g = rep_formula(d.conclusion.ante);
        auto fr = own_fresh();
        Derivation nd;
        nd.rule = Rule::top_intro;
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = g;
        nd.conclusion.cons = {Formula::top()};
        return AbsRes{std::move(nd), fr};
      }
      case Rule::or_intro: {
        std::vector<Formula> ds;
        for (auto& c : d.conclusion.cons) ds.push_back(rep_formula(c));
        auto fr = own_fresh();
        Derivation nd;
        nd.rule = Rule::or_intro;
        nd.index = d.index;
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = ds[d.index];
        nd.conclusion.cons = std::move(ds);
        return AbsRes{std::move(nd), fr};
      }
      case Rule::frobenius: {
        Formula g = rep_formula(d.conclusion.ante);
        auto fr = own_fresh();
        Derivation nd = d;
        nd.premises.clear();
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = g;
        nd.conclusion.cons = {d_frobenius(nd.conclusion.ctx, g, d.index).conclusion.cons[0]};
        return AbsRes{std::move(nd), fr};
      }
      case Rule::eq_refl: {
        Term t = rep_term(d.term_a);
        auto fr = own_fresh();
        Derivation nd;
        nd.rule = Rule::eq_refl;
        nd.term_a = t;
        nd.conclusion.ctx = extend(d.conclusion.ctx, fr);
        nd.conclusion.ante = Formula::top();
        nd.conclusion.cons = {Formula::atom(Atom::equality(t, t))};
        return AbsRes{std::move(nd), fr};
      }
      case Rule::eq_subst: {
        Term t = rep_term(d.term_a);
        Term s = rep_term(d.term_b);
        Formula tm = rep_formula(d.tmpl);
        auto fr = own_fresh();
        Context ctx = extend(d.conclusion.ctx, fr);
        Derivation nd = d_eq_subst(ctx, t, s, tm, d.hole);
        return AbsRes{std::move(nd), fr};
      }
      case Rule::cut: {
        AbsRes l = go(d.premises[0], path.empty() ? "0" : path + ".0");
        AbsRes r = go(d.premises[1], path.empty() ? "1" : path + ".1");
        std::vector<AbsRes> kids;
        kids.push_back(std::move(l));
        kids.push_back(std::move(r));
        return join(d, std::move(kids), {{0, 1}},
                    [&](const std::vector<Derivation>& ps, const Context& ctx) {
                      Derivation nd;
                      nd.rule = Rule::cut;
                      nd.conclusion.ctx = ctx;
                      nd.conclusion.ante = ps[0].conclusion.ante;
                      nd.conclusion.cons = ps[1].conclusion.cons;
                      nd.premises = ps;
                      return nd;
                    });
      }
      case Rule::and_intro: {
        std::vector<AbsRes> kids;
        for (size_t i = 0; i < d.premises.size(); ++i)
          kids.push_back(go(d.premises[i], path.empty() ? std::to_string(i)
                                                        : path + "." + std::to_string(i)));
        std::vector<std::pair<size_t, size_t>> links;
        for (size_t i = 0; i + 1 < kids.size(); ++i) links.emplace_back(i, i + 1);
        return join(d, std::move(kids), links,
                    [&](const std::vector<Derivation>& ps, const Context& ctx) {
                      Derivation nd;
                      nd.rule = Rule::and_intro;
                      nd.conclusion.ctx = ctx;
                      nd.conclusion.ante =
                          ps.empty() ? d.conclusion.ante : ps[0].conclusion.ante;
                      std::vector<Formula> parts;
                      for (auto& p : ps) parts.push_back(p.conclusion.cons[0]);
                      nd.conclusion.cons = {Formula::conj(std::move(parts))};
                      nd.premises = ps;
                      return nd;
                    });
      }
      case Rule::substitution: {
        AbsRes ch = go(d.premises[0], path.empty() ? "0" : path + ".0");
        mark = al.order.size();  // payload occurrences only, not the child's
        VarMap nm;
        const Sequent& orig_prem = d.premises[0].conclusion;
        for (auto& v : orig_prem.ctx) {
          auto it = d.subst.find(v);
          if (it == d.subst.end()) throw IllFormedDerivation("substitution not total");
          nm[v] = rep_term(it->second);
        }
        auto payload_fresh = own_fresh();
        for (auto& y : ch.fresh) nm[y] = Term::var(y);
        std::vector<std::string> fr = ch.fresh;
        fr.insert(fr.end(), payload_fresh.begin(), payload_fresh.end());
        Context target = extend(d.subst_ctx, fr);
        Derivation nd = d_substitution(ch.d, nm, target);
        return AbsRes{std::move(nd), std::move(fr)};
      }
      case Rule::exists_left: {
        AbsRes ch = go(d.premises[0], path.empty() ? "0" : path + ".0");
        Derivation nd = d_exists_left(ch.d, d.binder);
        return AbsRes{std::move(nd), std::move(ch.fresh)};
      }
      case Rule::exists_right: {
        AbsRes ch = go(d.premises[0], path.empty() ? "0" : path + ".0");
        Derivation nd = d_exists_right(ch.d, d.binder);
        return AbsRes{std::move(nd), std::move(ch.fresh)};
      }
      case Rule::weaken: {
        AbsRes ch = go(d.premises[0], path.empty() ? "0" : path + ".0");
        Context to = extend(d.conclusion.ctx, ch.fresh);
        Derivation nd = d_weaken(ch.d, to);
        if (nd.rule != Rule::weaken) {
          // context already equal: keep an explicit weaken node so the rule
          // multiset is preserved
          Derivation w;
          w.rule = Rule::weaken;
          w.conclusion = nd.conclusion;
          w.premises = {std::move(nd)};
          nd = std::move(w);
        }
        return AbsRes{std::move(nd), std::move(ch.fresh)};
      }
    }
    throw Error("unreachable");
  }
};

bool term_mentions(const Term& t, const std::set<std::string>& consts) {
  if (t.is_var()) return false;
  if (t.args().empty() && consts.count(t.head())) return true;
  for (auto& a : t.args())
    if (term_mentions(a, consts)) return true;
  return false;
}

void collect_var_names(const Formula& f, std::set<std::string>& out) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      std::vector<std::string> vs;
      for (auto& t : f.as_atom().args) term_vars(t, vs);
      for (auto& v : vs) out.insert(v);
      return;
    }
    case Formula::Kind::conj:
      for (auto& p : f.parts()) collect_var_names(p, out);
      return;
    case Formula::Kind::exists:
      for (auto& v : f.bound()) out.insert(v);
      collect_var_names(f.body(), out);
      return;
  }
}

void collect_var_names(const Derivation& d, std::set<std::string>& out) {
  for (auto& v : d.conclusion.ctx) out.insert(v);
  collect_var_names(d.conclusion.ante, out);
  for (auto& f : d.conclusion.cons) collect_var_names(f, out);
  for (auto& [k, t] : d.subst) {
    out.insert(k);
    std::vector<std::string> vs;
    term_vars(t, vs);
    for (auto& v : vs) out.insert(v);
  }
  for (auto& v : d.subst_ctx) out.insert(v);
  for (auto& v : d.binder) out.insert(v);
  collect_var_names(d.tmpl, out);
  out.insert(d.hole);
  for (auto& p : d.premises) collect_var_names(p, out);
}

}  // namespace

bool mentions_constants(const Formula& f, const std::set<std::string>& constants) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      for (auto& t : f.as_atom().args)
        if (term_mentions(t, constants)) return true;
      return false;
    case Formula::Kind::conj:
      for (auto& p : f.parts())
        if (mentions_constants(p, constants)) return true;
      return false;
    case Formula::Kind::exists:
      return mentions_constants(f.body(), constants);
  }
  return false;
}

Abstraction abstract_constants(const Derivation& d, const std::set<std::string>& constants,
                               const Theory& t) {
  for (auto& [name, ax] : t.axioms) {
    bool bad = mentions_constants(ax.ante, constants);
    for (auto& c : ax.cons) bad = bad || mentions_constants(c, constants);
    if (bad) throw ConstantInTheory("theory mentions abstracted constant in axiom " + name);
  }
  CheckResult chk = check_derivation(d, t);
  if (!chk.ok)
    throw IllFormedDerivation("input derivation does not check at " + chk.path + ": " +
                              chk.message);
  Abstractor ab{Alloc{constants, false, nullptr, 0, {}, {}}};
  AbsRes res = ab.go(d, "");
  // renumber fresh variables y1, y2, ... in creation order
  std::set<std::string> used;
  collect_var_names(res.d, used);
  StrMap renum;
  std::vector<std::string> final_names;
  int k = 1;
  for (auto& v : res.fresh) {
    std::string cand;
    do {
      cand = "y" + std::to_string(k++);
    } while (used.count(cand));
    used.insert(cand);
    renum[v] = cand;
    final_names.push_back(cand);
  }
  Abstraction out;
  out.derivation = renum.empty() ? std::move(res.d) : rename_tree(res.d, renum);
  out.fresh = Context(final_names);
  for (auto& v : res.fresh) out.assignment[renum.at(v)] = ab.al.constant_of.at(v);
  return out;
}

namespace detail {

int count_constant_occurrences(const Derivation& d, const std::set<std::string>& constants) {
  Abstractor ab{Alloc{constants, false, nullptr, 0, {}, {}}};
  ab.al.forced = true;
  ab.al.class_of = nullptr;
  ab.go(d, "");
  return ab.al.occ;
}

Derivation abstract_with_partition(const Derivation& d, const std::set<std::string>& constants,
                                   const std::vector<int>& class_of, Context* fresh_out,
                                   std::map<std::string, std::string>* assignment_out) {
  Abstractor ab{Alloc{constants, false, nullptr, 0, {}, {}}};
  ab.al.forced = true;
  ab.al.class_of = &class_of;
  AbsRes res = ab.go(d, "");
  if (fresh_out) *fresh_out = Context(res.fresh);
  if (assignment_out) {
    assignment_out->clear();
    for (auto& v : res.fresh) (*assignment_out)[v] = ab.al.constant_of.at(v);
  }
  return res.d;
}

}  // namespace detail

}  // namespace chasekit
