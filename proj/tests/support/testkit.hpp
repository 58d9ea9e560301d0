#pragma once

// Shared test support: seeded random generators for signatures, structures,
// formulas and normal theories, plus the independent oracles the suites
// check against (naive fixpoint engine, depth-bounded Horn derivation search,
// small-structure semantic equivalence).

#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chasekit/chase.hpp"
#include "chasekit/normalize.hpp"
#include "chasekit/semantics.hpp"
#include "chasekit/syntax.hpp"

namespace testkit {

using namespace chasekit;

inline uint64_t seed_from_env() {
  if (const char* s = std::getenv("CHASEKIT_SEED")) return std::strtoull(s, nullptr, 10);
  return 0x5eedcafe;
}

struct Rng {
  std::mt19937_64 g;
  Rng() : g(seed_from_env()) {}
  explicit Rng(uint64_t seed) : g(seed) {}
  int pick(int lo, int hi) { return (int)(lo + g() % (uint64_t)(hi - lo + 1)); }
  bool coin(double p = 0.5) { return (g() % 1000) < (uint64_t)(p * 1000); }
};

// ---------------------------------------------------------------------------
// Random inputs

inline SigPtr random_rel_signature(Rng& r, int max_rels = 4, int max_arity = 3) {
  std::map<std::string, int> rels;
  int n = r.pick(1, max_rels);
  for (int i = 0; i < n; ++i) rels["R" + std::to_string(i)] = r.pick(1, max_arity);
  return make_signature({}, rels);
}

inline Structure random_structure(Rng& r, SigPtr sig, int max_elems = 4, double density = 0.3) {
  Structure a;
  a.sig = sig;
  int n = r.pick(1, max_elems);
  for (int i = 0; i < n; ++i) a.elems.push_back("e" + std::to_string(i));
  for (auto& [rel, ar] : sig->rels) {
    auto& tab = a.rels[rel];
    std::vector<int> tup(ar, 0);
    for (;;) {
      if (r.coin(density)) tab.insert(tup);
      int i = ar;
      while (i > 0 && tup[i - 1] == n - 1) tup[--i] = 0;
      if (i == 0) break;
      ++tup[i - 1];
    }
  }
  for (auto& [fn, ar] : sig->funs) {
    auto& tab = a.funs[fn];
    std::vector<int> tup(ar, 0);
    for (;;) {
      tab[tup] = r.pick(0, n - 1);
      int i = ar;
      while (i > 0 && tup[i - 1] == n - 1) tup[--i] = 0;
      if (i == 0) break;
      ++tup[i - 1];
    }
  }
  return a;
}

inline Atom random_atom(Rng& r, const Signature& sig, const std::vector<std::string>& vars,
                        bool allow_eq = true) {
  if (allow_eq && r.coin(0.2)) {
    return Atom::equality(Term::var(vars[r.pick(0, (int)vars.size() - 1)]),
                          Term::var(vars[r.pick(0, (int)vars.size() - 1)]));
  }
  std::vector<std::string> names;
  for (auto& [rel, ar] : sig.rels) names.push_back(rel);
  const std::string& rel = names[r.pick(0, (int)names.size() - 1)];
  int ar = sig.rels.at(rel);
  std::vector<Term> args;
  for (int i = 0; i < ar; ++i) args.push_back(Term::var(vars[r.pick(0, (int)vars.size() - 1)]));
  return Atom::relation(rel, std::move(args));
}

inline HornFormula random_horn(Rng& r, const Signature& sig, const std::vector<std::string>& vars,
                               int max_atoms = 3, bool allow_eq = true) {
  HornFormula h;
  int n = r.pick(1, max_atoms);
  for (int i = 0; i < n; ++i) h.atoms.push_back(random_atom(r, sig, vars, allow_eq));
  return h;
}

// regular formulas with bounded ∃-depth
inline Formula random_regular(Rng& r, const Signature& sig, std::vector<std::string> vars,
                              int depth = 2, int max_atoms = 3, bool allow_eq = true,
                              int* fresh_counter = nullptr) {
  int local = 0;
  if (!fresh_counter) fresh_counter = &local;
  if (depth > 0 && r.coin(0.4)) {
    std::vector<std::string> bound;
    int nb = r.pick(1, 2);
    for (int i = 0; i < nb; ++i) {
      std::string v = "q" + std::to_string((*fresh_counter)++);
      bound.push_back(v);
      vars.push_back(v);
    }
    Formula body = random_regular(r, sig, vars, depth - 1, max_atoms, allow_eq, fresh_counter);
    return Formula::exists(Context(bound), body);
  }
  int n = r.pick(1, max_atoms);
  std::vector<Formula> parts;
  for (int i = 0; i < n; ++i) {
    if (depth > 0 && r.coin(0.2)) {
      parts.push_back(random_regular(r, sig, vars, depth - 1, 2, allow_eq, fresh_counter));
    } else {
      parts.push_back(Formula::atom(random_atom(r, sig, vars, allow_eq)));
    }
  }
  return Formula::conj(std::move(parts));
}

// normal, equality-free theories whose side condition holds by construction
// (the matrix contains the antecedent)
inline NormalTheory random_normal_theory(Rng& r, SigPtr sig, int max_axioms = 4) {
  NormalTheory t;
  t.sig = sig;
  int n = r.pick(1, max_axioms);
  for (int i = 0; i < n; ++i) {
    NormalSequent ns;
    int nctx = r.pick(1, 2);
    std::vector<std::string> ctx_vars;
    for (int k = 0; k < nctx; ++k) ctx_vars.push_back("x" + std::to_string(k));
    ns.ctx = Context(ctx_vars);
    ns.ante = random_horn(r, *sig, ctx_vars, 2, /*allow_eq=*/false);
    int nb = r.pick(0, 2);
    std::vector<std::string> bound;
    for (int k = 0; k < nb; ++k) bound.push_back("y" + std::to_string(k));
    ns.bound = Context(bound);
    std::vector<std::string> all = ctx_vars;
    all.insert(all.end(), bound.begin(), bound.end());
    ns.matrix = ns.ante;
    int extra = r.pick(1, 2);
    for (int k = 0; k < extra; ++k)
      ns.matrix.atoms.push_back(random_atom(r, *sig, all, /*allow_eq=*/false));
    // every bound variable must occur in some atom
    for (auto& y : bound) {
      bool occurs = false;
      for (auto& at : ns.matrix.atoms) {
        std::vector<std::string> vs;
        for (auto& tm : at.args) term_vars(tm, vs);
        if (std::find(vs.begin(), vs.end(), y) != vs.end()) occurs = true;
      }
      if (!occurs) {
        // replace the last atom by one mentioning y
        std::vector<std::string> pool = {y};
        for (auto& v : all) pool.push_back(v);
        ns.matrix.atoms.push_back(random_atom(r, *sig, pool, false));
        // force y into the atom
        Atom& at = ns.matrix.atoms.back();
        at.args[r.pick(0, (int)at.args.size() - 1)] = Term::var(y);
      }
    }
    t.axioms.emplace_back("t" + std::to_string(i), std::move(ns));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Oracle 1: naive fixpoint engine (round-based, no justification bookkeeping)

inline std::optional<Structure> naive_chase(const NormalTheory& t, const Structure& a,
                                            int max_rounds) {
  Structure cur = a;
  int fresh = 0;
  for (int round = 0; round < max_rounds; ++round) {
    // collect this round's applicable instances against the round's start
    struct Todo {
      const NormalSequent* ns;
      std::vector<int> asg;
    };
    std::vector<Todo> todo;
    for (auto& [name, ns] : t.axioms) {
      size_t k = ns.ctx.size();
      size_t n = cur.elems.size();
      if (n == 0 && k > 0) continue;
      std::vector<int> asg(k, 0);
      for (;;) {
        ElemAssignment m;
        for (size_t i = 0; i < k; ++i) m[ns.ctx[i]] = asg[i];
        bool applicable = evaluate(cur, ns.ante.to_formula(), m) &&
                          !least_witness(cur, ns.bound, ns.matrix.to_formula(), m).has_value();
        if (applicable) todo.push_back({&ns, asg});
        size_t i = k;
        while (i > 0 && asg[i - 1] == (int)n - 1) asg[--i] = 0;
        if (i == 0 || k == 0) break;
        ++asg[i - 1];
      }
    }
    if (todo.empty()) return cur;
    for (auto& td : todo) {
      ElemAssignment m;
      for (size_t i = 0; i < td.ns->ctx.size(); ++i) m[td.ns->ctx[i]] = td.asg[i];
      for (auto& y : td.ns->bound) {
        m[y] = (int)cur.elems.size();
        cur.elems.push_back("o" + std::to_string(fresh++));
      }
      for (auto& at : td.ns->matrix.atoms) {
        if (at.is_eq()) continue;
        std::vector<int> tup;
        for (auto& tm : at.args) tup.push_back(m.at(tm.head()));
        cur.rels[at.rel].insert(tup);
      }
    }
  }
  return std::nullopt;  // did not stabilize
}

// ---------------------------------------------------------------------------
// Oracle 2: depth-bounded derivation search for Horn entailment over ∅

inline bool horn_search_oracle(const HornFormula& gamma, const Atom& alpha, int depth = 4) {
  // universe: all subterms occurring in gamma and alpha
  std::vector<Term> univ;
  std::function<void(const Term&)> add = [&](const Term& t) {
    if (std::find(univ.begin(), univ.end(), t) == univ.end()) univ.push_back(t);
    for (auto& s : t.args()) add(s);
  };
  for (auto& at : gamma.atoms)
    for (auto& t : at.args) add(t);
  for (auto& t : alpha.args) add(t);
  std::vector<Atom> known = gamma.atoms;
  auto have = [&](const Atom& a) {
    return std::find(known.begin(), known.end(), a) != known.end();
  };
  for (auto& t : univ) known.push_back(Atom::equality(t, t));  // reflexivity
  for (int d = 0; d < depth; ++d) {
    std::vector<Atom> next = known;
    auto put = [&](const Atom& a) {
      if (std::find(next.begin(), next.end(), a) == std::end(next)) next.push_back(a);
    };
    for (auto& a : known) {
      if (a.is_eq()) {
        put(Atom::equality(a.rhs(), a.lhs()));  // symmetry
        for (auto& b : known)
          if (b.is_eq() && a.rhs() == b.lhs()) put(Atom::equality(a.lhs(), b.rhs()));
      }
    }
    // congruence: rewrite one argument of a known atom by a known equality
    for (auto& a : known) {
      for (auto& e : known) {
        if (!e.is_eq()) continue;
        for (size_t i = 0; i < a.args.size(); ++i) {
          if (a.args[i] == e.lhs()) {
            Atom b = a;
            b.args[i] = e.rhs();
            put(b);
          }
        }
      }
    }
    // congruence on function applications within the universe
    for (auto& t : univ) {
      if (t.is_var() || t.args().empty()) continue;
      for (auto& s : univ) {
        if (s.is_var() || s.head() != t.head() || s.args().size() != t.args().size()) continue;
        bool all = true;
        for (size_t i = 0; i < t.args().size() && all; ++i) {
          Atom want = Atom::equality(t.args()[i], s.args()[i]);
          Atom want2 = Atom::equality(s.args()[i], t.args()[i]);
          if (!(t.args()[i] == s.args()[i]) &&
              std::find(known.begin(), known.end(), want) == known.end() &&
              std::find(known.begin(), known.end(), want2) == known.end())
            all = false;
        }
        if (all) put(Atom::equality(t, s));
      }
    }
    if (next.size() == known.size()) break;
    known = std::move(next);
  }
  if (have(alpha)) return true;
  if (alpha.is_eq() && alpha.lhs() == alpha.rhs()) return true;
  return std::find(known.begin(), known.end(), alpha) != known.end();
}

// ---------------------------------------------------------------------------
// Oracle 3: semantic equivalence over all structures with <= max_n elements

inline void for_all_structures(SigPtr sig, int max_n, const std::function<void(const Structure&)>& f) {
  for (int n = 0; n <= max_n; ++n) {
    Structure base;
    base.sig = sig;
    for (int i = 0; i < n; ++i) base.elems.push_back("u" + std::to_string(i));
    // enumerate all relation tables
    std::vector<std::pair<std::string, std::vector<std::vector<int>>>> slots;
    for (auto& [rel, ar] : sig->rels) {
      std::vector<std::vector<int>> tuples;
      if (n > 0 || ar == 0) {
        std::vector<int> tup(ar, 0);
        if (ar == 0) {
          tuples.push_back({});
        } else if (n > 0) {
          for (;;) {
            tuples.push_back(tup);
            int i = ar;
            while (i > 0 && tup[i - 1] == n - 1) tup[--i] = 0;
            if (i == 0) break;
            ++tup[i - 1];
          }
        }
      }
      slots.emplace_back(rel, std::move(tuples));
    }
    size_t total_bits = 0;
    for (auto& [rel, tuples] : slots) total_bits += tuples.size();
    if (total_bits > 20) throw Error("for_all_structures: signature too large");
    for (uint64_t mask = 0; mask < (1ull << total_bits); ++mask) {
      Structure s = base;
      size_t bit = 0;
      for (auto& [rel, tuples] : slots) {
        auto& tab = s.rels[rel];
        for (auto& tup : tuples) {
          if (mask & (1ull << bit)) tab.insert(tup);
          ++bit;
        }
      }
      f(s);
    }
  }
}

// every assignment of ctx into a
inline void for_all_assignments(const Structure& a, const Context& ctx,
                                const std::function<void(const ElemAssignment&)>& f) {
  size_t n = a.elems.size();
  size_t k = ctx.size();
  if (n == 0 && k > 0) return;
  std::vector<int> pick(k, 0);
  for (;;) {
    ElemAssignment m;
    for (size_t i = 0; i < k; ++i) m[ctx[i]] = pick[i];
    f(m);
    size_t i = k;
    while (i > 0 && pick[i - 1] == (int)n - 1) pick[--i] = 0;
    if (i == 0 || k == 0) return;
    ++pick[i - 1];
  }
}

inline bool semantically_equivalent(const Formula& f, const Formula& g, const Context& ctx,
                                    SigPtr sig, int max_n = 3) {
  bool ok = true;
  for_all_structures(sig, max_n, [&](const Structure& s) {
    if (!ok) return;
    for_all_assignments(s, ctx, [&](const ElemAssignment& m) {
      if (!ok) return;
      if (evaluate(s, f, m) != evaluate(s, g, m)) ok = false;
    });
  });
  return ok;
}

inline bool sequents_equivalent(const Sequent& s1, const Sequent& s2, SigPtr sig, int max_n = 3) {
  bool ok = true;
  for_all_structures(sig, max_n, [&](const Structure& s) {
    if (!ok) return;
    if (validates(s, s1) != validates(s, s2)) ok = false;
  });
  return ok;
}

}  // namespace testkit
