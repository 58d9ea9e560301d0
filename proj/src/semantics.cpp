#include "chasekit/semantics.hpp"

#include <algorithm>
#include <functional>

#include "chasekit/normalize.hpp"

namespace chasekit {

std::optional<int> Structure::index_of(const std::string& id) const {
  for (size_t i = 0; i < elems.size(); ++i)
    if (elems[i] == id) return (int)i;
  return std::nullopt;
}

bool Structure::has_tuple(const std::string& rel, const std::vector<int>& tup) const {
  auto it = rels.find(rel);
  return it != rels.end() && it->second.count(tup) != 0;
}

void check_structure(const Structure& a) {
  int n = (int)a.elems.size();
  std::set<std::string> ids(a.elems.begin(), a.elems.end());
  if ((int)ids.size() != n) throw Error("duplicate element ids in carrier");
  for (auto& [r, tuples] : a.rels) {
    int ar = a.sig->rel_arity(r);
    for (auto& t : tuples) {
      if ((int)t.size() != ar) throw ArityMismatch("tuple arity mismatch for " + r);
      for (int e : t)
        if (e < 0 || e >= n) throw Error("tuple element out of carrier for " + r);
    }
  }
  for (auto& [f, ar] : a.sig->funs) {
    auto it = a.funs.find(f);
    size_t expect = 1;
    for (int i = 0; i < ar; ++i) expect *= n;
    size_t have = (it == a.funs.end()) ? 0 : it->second.size();
    if (have != expect)
      throw NotFunctional("function table for " + f + " is not total on the carrier");
    if (it == a.funs.end()) continue;
    for (auto& [args, val] : it->second) {
      if ((int)args.size() != ar) throw ArityMismatch("argument arity mismatch for " + f);
      for (int e : args)
        if (e < 0 || e >= n) throw Error("argument out of carrier for " + f);
      if (val < 0 || val >= n) throw Error("value out of carrier for " + f);
    }
  }
  for (auto& [r, _] : a.rels)
    (void)a.sig->rel_arity(r);
}

bool is_homomorphism(const Structure& src, const Structure& tgt, const std::vector<int>& map) {
  if (map.size() != src.elems.size()) return false;
  for (int v : map)
    if (v < 0 || v >= (int)tgt.elems.size()) return false;
  for (auto& [r, tuples] : src.rels) {
    for (auto& t : tuples) {
      std::vector<int> img(t.size());
      for (size_t i = 0; i < t.size(); ++i) img[i] = map[t[i]];
      if (!tgt.has_tuple(r, img)) return false;
    }
  }
  for (auto& [f, table] : src.funs) {
    auto it = tgt.funs.find(f);
    if (it == tgt.funs.end() && !table.empty()) return false;
    for (auto& [args, val] : table) {
      std::vector<int> img(args.size());
      for (size_t i = 0; i < args.size(); ++i) img[i] = map[args[i]];
      auto jt = it->second.find(img);
      if (jt == it->second.end() || jt->second != map[val]) return false;
    }
  }
  return true;
}

Homomorphism make_homomorphism(std::shared_ptr<const Structure> src,
                               std::shared_ptr<const Structure> tgt, std::vector<int> map) {
  if (!is_homomorphism(*src, *tgt, map)) throw Error("not a homomorphism");
  return Homomorphism{std::move(src), std::move(tgt), std::move(map)};
}

// ---------------------------------------------------------------------------
// Evaluation

int eval_term(const Structure& a, const Term& t, const ElemAssignment& asg) {
  if (t.is_var()) {
    auto it = asg.find(t.head());
    if (it == asg.end()) throw UnboundVariable("unassigned variable: " + t.head());
    return it->second;
  }
  std::vector<int> args;
  args.reserve(t.args().size());
  for (auto& s : t.args()) args.push_back(eval_term(a, s, asg));
  auto ft = a.funs.find(t.head());
  if (ft == a.funs.end()) throw Error("no table for function " + t.head());
  auto it = ft->second.find(args);
  if (it == ft->second.end()) throw NotFunctional("function table not total: " + t.head());
  return it->second;
}

bool evaluate(const Structure& a, const Atom& at, const ElemAssignment& asg) {
  if (at.is_eq()) return eval_term(a, at.lhs(), asg) == eval_term(a, at.rhs(), asg);
  std::vector<int> tup;
  tup.reserve(at.args.size());
  for (auto& t : at.args) tup.push_back(eval_term(a, t, asg));
  return a.has_tuple(at.rel, tup);
}

bool evaluate(const Structure& a, const Formula& f, const ElemAssignment& asg) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return evaluate(a, f.as_atom(), asg);
    case Formula::Kind::conj:
      for (auto& p : f.parts())
        if (!evaluate(a, p, asg)) return false;
      return true;
    case Formula::Kind::exists: {
      const auto& bound = f.bound().vars();
      size_t n = a.size();
      if (n == 0) return false;
      std::vector<int> pick(bound.size(), 0);
      ElemAssignment inner = asg;
      for (;;) {
        for (size_t i = 0; i < bound.size(); ++i) inner[bound[i]] = pick[i];
        if (evaluate(a, f.body(), inner)) return true;
        size_t i = pick.size();
        while (i > 0 && pick[i - 1] == (int)n - 1) pick[--i] = 0;
        if (i == 0) return false;
        ++pick[i - 1];
      }
    }
  }
  return false;
}

std::optional<ElemAssignment> least_witness(const Structure& a, const Context& bound,
                                            const Formula& matrix, const ElemAssignment& asg) {
  size_t n = a.size();
  if (bound.empty()) {
    if (evaluate(a, matrix, asg)) return asg;
    return std::nullopt;
  }
  if (n == 0) return std::nullopt;
  std::vector<int> pick(bound.size(), 0);
  for (;;) {
    ElemAssignment inner = asg;
    for (size_t i = 0; i < bound.size(); ++i) inner[bound[i]] = pick[i];
    if (evaluate(a, matrix, inner)) return inner;
    size_t i = pick.size();
    while (i > 0 && pick[i - 1] == (int)n - 1) pick[--i] = 0;
    if (i == 0) return std::nullopt;
    ++pick[i - 1];
  }
}

QueryResult evaluate_query(const Structure& a, const GeometricQuery& q, const ElemAssignment& asg) {
  QueryResult r;
  for (size_t i = 0; i < q.disjuncts.size(); ++i) {
    const Formula& d = q.disjuncts[i];
    if (d.kind() == Formula::Kind::exists) {
      auto w = least_witness(a, d.bound(), d.body(), asg);
      if (w) {
        r.ok = true;
        r.disjunct = (int)i + 1;
        r.witnesses = *w;
        return r;
      }
    } else if (evaluate(a, d, asg)) {
      r.ok = true;
      r.disjunct = (int)i + 1;
      r.witnesses = asg;
      return r;
    }
  }
  return r;
}

bool validates(const Structure& a, const Sequent& s) {
  size_t n = a.size();
  size_t k = s.ctx.size();
  std::vector<int> pick(k, 0);
  if (n == 0 && k > 0) return true;  // no assignments
  for (;;) {
    ElemAssignment asg;
    for (size_t i = 0; i < k; ++i) asg[s.ctx[i]] = pick[i];
    if (evaluate(a, s.ante, asg)) {
      bool any = false;
      for (auto& d : s.cons)
        if (evaluate(a, d, asg)) {
          any = true;
          break;
        }
      if (!any) return false;
    }
    size_t i = k;
    while (i > 0 && pick[i - 1] == (int)n - 1) pick[--i] = 0;
    if (i == 0 || k == 0) return true;
    ++pick[i - 1];
  }
}

bool validates_theory(const Structure& a, const Theory& t) {
  for (auto& [name, ax] : t.axioms)
    if (!validates(a, ax)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Representing structures

RepresentedStructure representing_structure(const HornFormula& phi, const Context& ctx, SigPtr sig) {
  if (!sig->relational()) throw NotRelational("representing structures need a relational signature");
  // union-find over context variables, merged by φ's equalities
  std::vector<int> parent(ctx.size());
  for (size_t i = 0; i < parent.size(); ++i) parent[i] = (int)i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return;
    if (x > y) std::swap(x, y);
    parent[y] = x;  // least index becomes the representative
  };
  for (auto& at : phi.atoms) {
    if (!at.is_eq()) continue;
    if (!at.lhs().is_var() || !at.rhs().is_var())
      throw NotRelational("terms over a relational signature must be variables");
    auto i = ctx.index_of(at.lhs().head());
    auto j = ctx.index_of(at.rhs().head());
    if (!i || !j) throw UnboundVariable("equality variable not in context");
    unite((int)*i, (int)*j);
  }
  // carrier: class representatives in index order, named by their variable
  std::map<int, int> rep_to_elem;
  RepresentedStructure out;
  out.structure.sig = sig;
  for (size_t i = 0; i < ctx.size(); ++i) {
    int r = find((int)i);
    if (!rep_to_elem.count(r)) {
      rep_to_elem[r] = (int)out.structure.elems.size();
      out.structure.elems.push_back(ctx[r]);
    }
  }
  for (size_t i = 0; i < ctx.size(); ++i) out.canonical[ctx[i]] = rep_to_elem[find((int)i)];
  for (auto& [r, ar] : sig->rels) out.structure.rels[r];  // declare empty tables
  // tables: exactly the derivable atoms (congruence closure over φ)
  for (auto& at : phi.atoms) {
    if (at.is_eq()) continue;
    std::vector<int> tup;
    for (auto& t : at.args) {
      if (!t.is_var()) throw NotRelational("terms over a relational signature must be variables");
      auto i = ctx.index_of(t.head());
      if (!i) throw UnboundVariable("atom variable not in context");
      tup.push_back(rep_to_elem[find((int)*i)]);
    }
    out.structure.rels[at.rel].insert(tup);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagram

DiagramResult diagram(const Structure& a) {
  DiagramResult out;
  auto sig = std::make_shared<Signature>(*a.sig);
  std::set<std::string> taken;
  for (auto& [f, _] : sig->funs) taken.insert(f);
  for (size_t i = 0; i < a.elems.size(); ++i) {
    std::string c = "c_" + a.elems[i];
    while (taken.count(c)) c += "_";
    taken.insert(c);
    sig->funs[c] = 0;
    out.constant_of.push_back(c);
  }
  out.sig = sig;
  out.theory.sig = sig;
  auto cterm = [&](int e) { return Term::app(out.constant_of[e], {}); };
  int k = 0;
  Context empty_ctx;
  for (auto& [r, tuples] : a.rels) {
    for (auto& t : tuples) {
      std::vector<Term> args;
      for (int e : t) args.push_back(cterm(e));
      Sequent s;
      s.ctx = empty_ctx;
      s.ante = Formula::top();
      s.cons = {Formula::atom(Atom::relation(r, std::move(args)))};
      out.theory.axioms.emplace_back("d" + std::to_string(k++), std::move(s));
    }
  }
  for (auto& [f, table] : a.funs) {
    for (auto& [args, val] : table) {
      std::vector<Term> cargs;
      for (int e : args) cargs.push_back(cterm(e));
      Sequent s;
      s.ctx = empty_ctx;
      s.ante = Formula::top();
      s.cons = {Formula::atom(Atom::equality(Term::app(f, std::move(cargs)), cterm(val)))};
      out.theory.axioms.emplace_back("d" + std::to_string(k++), std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// e / q

Structure e_expand(const Structure& a, const std::string& e_name) {
  if (a.sig->has_rel(e_name) || a.sig->has_fun(e_name))
    throw Error("E symbol already in signature: " + e_name);
  Structure b = a;
  auto sig = std::make_shared<Signature>(*a.sig);
  sig->rels[e_name] = 2;
  b.sig = sig;
  auto& tab = b.rels[e_name];
  for (int i = 0; i < (int)a.elems.size(); ++i) tab.insert({i, i});
  return b;
}

std::vector<int> q_quotient_map(const Structure& b, const std::string& e_name) {
  if (!b.sig->has_rel(e_name) || b.sig->rel_arity(e_name) != 2)
    throw NotAnEStructure("no binary predicate " + e_name);
  // E must be an equivalence relation; tables are imaged along the quotient
  // whether or not they respect E.
  SigPtr base = [&] {
    auto s = std::make_shared<Signature>(*b.sig);
    s->rels.erase(e_name);
    return SigPtr(s);
  }();
  Theory esigma = eq_theory(EqSignature{base, e_name});
  for (auto& [name, ax] : esigma.axioms) {
    bool equivalence_part = name == e_name + "_refl" || name == e_name + "_sym" ||
                            name == e_name + "_trans";
    if (equivalence_part && !validates(b, ax))
      throw NotAnEStructure("structure does not validate " + name);
  }
  int n = (int)b.elems.size();
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto it = b.rels.find(e_name);
  if (it != b.rels.end()) {
    for (auto& t : it->second) {
      int x = find(t[0]), y = find(t[1]);
      if (x == y) continue;
      if (x > y) std::swap(x, y);
      parent[y] = x;
    }
  }
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) cls[i] = find(i);
  return cls;
}

Structure q_quotient(const Structure& b, const std::string& e_name) {
  auto cls = q_quotient_map(b, e_name);
  int n = (int)b.elems.size();
  std::map<int, int> rep_to_new;
  Structure out;
  auto sig = std::make_shared<Signature>(*b.sig);
  sig->rels.erase(e_name);
  out.sig = sig;
  std::vector<int> newidx(n, -1);
  for (int i = 0; i < n; ++i) {
    if (cls[i] == i) {
      rep_to_new[i] = (int)out.elems.size();
      out.elems.push_back(b.elems[i]);
    }
  }
  for (int i = 0; i < n; ++i) newidx[i] = rep_to_new[cls[i]];
  for (auto& [r, tuples] : b.rels) {
    if (r == e_name) continue;
    auto& tab = out.rels[r];
    for (auto& t : tuples) {
      std::vector<int> img(t.size());
      for (size_t i = 0; i < t.size(); ++i) img[i] = newidx[t[i]];
      tab.insert(img);
    }
  }
  for (auto& [f, table] : b.funs) {
    auto& tab = out.funs[f];
    for (auto& [args, val] : table) {
      std::vector<int> img(args.size());
      for (size_t i = 0; i < args.size(); ++i) img[i] = newidx[args[i]];
      tab[img] = newidx[val];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Homomorphism search

namespace {

// Backtracking over target indices in order; partial[i] == -1 means unset.
bool hom_search(const Structure& a, const Structure& b, std::vector<int>& partial, size_t next,
                bool injective) {
  size_t n = a.elems.size();
  // check constraints touching only set elements
  auto consistent = [&]() {
    for (auto& [r, tuples] : a.rels) {
      for (auto& t : tuples) {
        std::vector<int> img(t.size());
        bool all = true;
        for (size_t i = 0; i < t.size(); ++i) {
          if (partial[t[i]] < 0) {
            all = false;
            break;
          }
          img[i] = partial[t[i]];
        }
        if (all && !b.has_tuple(r, img)) return false;
      }
    }
    for (auto& [f, table] : a.funs) {
      auto bt = b.funs.find(f);
      for (auto& [args, val] : table) {
        std::vector<int> img(args.size());
        bool all = partial[val] >= 0;
        for (size_t i = 0; i < args.size() && all; ++i) {
          if (partial[args[i]] < 0) all = false;
          else img[i] = partial[args[i]];
        }
        if (!all) continue;
        if (bt == b.funs.end()) return false;
        auto jt = bt->second.find(img);
        if (jt == bt->second.end() || jt->second != partial[val]) return false;
      }
    }
    return true;
  };
  if (!consistent()) return false;
  if (next == n) return true;
  for (int v = 0; v < (int)b.elems.size(); ++v) {
    if (injective) {
      bool used = false;
      for (size_t i = 0; i < next; ++i)
        if (partial[i] == v) {
          used = true;
          break;
        }
      if (used) continue;
    }
    partial[next] = v;
    if (hom_search(a, b, partial, next + 1, injective)) return true;
    partial[next] = -1;
  }
  return false;
}

}  // namespace

std::optional<std::vector<int>> find_homomorphism(const Structure& a, const Structure& b,
                                                  bool injective) {
  std::vector<int> partial(a.elems.size(), -1);
  if (hom_search(a, b, partial, 0, injective)) return partial;
  return std::nullopt;
}

std::optional<Homomorphism> hom_extend_search(const Homomorphism& f, const Homomorphism& g,
                                              bool injective) {
  // seek h : B -> M with h∘g = f, where f : A -> M, g : A -> B
  const Structure& b = *g.target;
  const Structure& m = *f.target;
  std::vector<int> partial(b.elems.size(), -1);
  for (size_t i = 0; i < g.map.size(); ++i) {
    int bi = g.map[i], mi = f.map[i];
    if (partial[bi] >= 0 && partial[bi] != mi) return std::nullopt;
    partial[bi] = mi;
  }
  // forced part may already violate injectivity
  if (injective) {
    std::set<int> seen;
    for (int v : partial)
      if (v >= 0 && !seen.insert(v).second) return std::nullopt;
  }
  // re-run the search respecting pre-set entries
  std::function<bool(size_t)> go = [&](size_t next) -> bool {
    while (next < partial.size() && partial[next] >= 0) ++next;
    // validate fully-assigned constraints
    auto ok = [&]() {
      for (auto& [r, tuples] : b.rels)
        for (auto& t : tuples) {
          std::vector<int> img(t.size());
          bool all = true;
          for (size_t i = 0; i < t.size(); ++i) {
            if (partial[t[i]] < 0) {
              all = false;
              break;
            }
            img[i] = partial[t[i]];
          }
          if (all && !m.has_tuple(r, img)) return false;
        }
      for (auto& [fn, table] : b.funs) {
        auto mt = m.funs.find(fn);
        for (auto& [args, val] : table) {
          std::vector<int> img(args.size());
          bool all = partial[val] >= 0;
          for (size_t i = 0; i < args.size() && all; ++i) {
            if (partial[args[i]] < 0) all = false;
            else img[i] = partial[args[i]];
          }
          if (!all) continue;
          if (mt == m.funs.end()) return false;
          auto jt = mt->second.find(img);
          if (jt == mt->second.end() || jt->second != partial[val]) return false;
        }
      }
      return true;
    };
    if (!ok()) return false;
    if (next == partial.size()) return true;
    for (int v = 0; v < (int)m.elems.size(); ++v) {
      if (injective) {
        bool used = false;
        for (size_t i = 0; i < partial.size(); ++i)
          if (partial[i] == v) {
            used = true;
            break;
          }
        if (used) continue;
      }
      partial[next] = v;
      if (go(next + 1)) return true;
      partial[next] = -1;
    }
    return false;
  };
  if (!go(0)) return std::nullopt;
  return Homomorphism{g.target, f.target, partial};
}

std::optional<std::vector<int>> find_isomorphism(const Structure& a, const Structure& b) {
  if (a.elems.size() != b.elems.size()) return std::nullopt;
  // injective homomorphisms both ways, as extension problems from the empty
  // structure; mutual injections between finite structures force the forward
  // map to be an isomorphism, which is then verified explicitly
  Structure empty;
  empty.sig = a.sig;
  auto ep = std::make_shared<const Structure>(empty);
  auto ap = std::make_shared<const Structure>(a);
  auto bp = std::make_shared<const Structure>(b);
  auto fwd = hom_extend_search(Homomorphism{ep, bp, {}}, Homomorphism{ep, ap, {}},
                               /*injective=*/true);
  if (!fwd) return std::nullopt;
  auto bwd = hom_extend_search(Homomorphism{ep, ap, {}}, Homomorphism{ep, bp, {}},
                               /*injective=*/true);
  if (!bwd) return std::nullopt;
  std::vector<int> inv(b.elems.size(), -1);
  for (size_t i = 0; i < fwd->map.size(); ++i) {
    if (inv[fwd->map[i]] >= 0) return std::nullopt;
    inv[fwd->map[i]] = (int)i;
  }
  if (!is_homomorphism(b, a, inv)) return std::nullopt;
  return fwd->map;
}

}  // namespace chasekit
