#include "chasekit/chase.hpp"

#include <algorithm>
#include <functional>
#include <thread>

namespace chasekit {

namespace {

struct Instance {
  int axiom;              // index into the name-sorted axiom list
  std::vector<int> args;  // context assignment
  bool operator<(const Instance& o) const {
    if (axiom != o.axiom) return axiom < o.axiom;
    return args < o.args;
  }
  bool operator==(const Instance& o) const { return axiom == o.axiom && args == o.args; }
};

struct Engine {
  const NormalTheory& theory;
  std::vector<int> order;  // axiom indices sorted by name

  explicit Engine(const NormalTheory& t) : theory(t) {
    for (size_t i = 0; i < t.axioms.size(); ++i) order.push_back((int)i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return t.axioms[a].first < t.axioms[b].first;
    });
  }

  const NormalSequent& axiom(int sorted_idx) const {
    return theory.axioms[order[sorted_idx]].second;
  }
  const std::string& axiom_name(int sorted_idx) const {
    return theory.axioms[order[sorted_idx]].first;
  }

  static bool holds(const Structure& a, const HornFormula& h,
                    const std::vector<int>& asg, const Context& ctx) {
    for (auto& at : h.atoms) {
      if (at.is_eq()) {
        // equality-free theories: only possible via padding; compare values
        int l = asg[*ctx.index_of(at.lhs().head())];
        int r = asg[*ctx.index_of(at.rhs().head())];
        if (l != r) return false;
        continue;
      }
      std::vector<int> tup;
      tup.reserve(at.args.size());
      for (auto& t : at.args) tup.push_back(asg[*ctx.index_of(t.head())]);
      if (!a.has_tuple(at.rel, tup)) return false;
    }
    return true;
  }

  // is ∃ȳ matrix already satisfied at this assignment?
  bool consequent_satisfied(const Structure& a, const NormalSequent& ns,
                            const std::vector<int>& asg) const {
    ElemAssignment m;
    for (size_t i = 0; i < ns.ctx.size(); ++i) m[ns.ctx[i]] = asg[i];
    return least_witness(a, ns.bound, ns.matrix.to_formula(), m).has_value();
  }

  // applicable instances of one axiom, in lexicographic order of assignments;
  // `lean` additionally drops instances whose consequent already holds
  void instances_of(const Structure& a, int sorted_idx, bool lean,
                    const std::set<std::pair<std::string, std::vector<int>>>* fired,
                    std::vector<Instance>& out, size_t chunk_begin, size_t chunk_end) const {
    const NormalSequent& ns = axiom(sorted_idx);
    size_t k = ns.ctx.size();
    size_t n = a.size();
    size_t total = 1;
    for (size_t i = 0; i < k; ++i) {
      total *= n;
      if (total > (size_t)1e9) throw Error("instance space too large");
    }
    if (n == 0 && k > 0) return;
    for (size_t idx = chunk_begin; idx < std::min(total, chunk_end); ++idx) {
      std::vector<int> asg(k);
      size_t rest = idx;
      for (size_t i = k; i-- > 0;) {
        asg[i] = (int)(rest % n);
        rest /= n;
      }
      if (k == 0 && idx > 0) break;
      if (!holds(a, ns.ante, asg, ns.ctx)) continue;
      if (fired && fired->count({axiom_name(sorted_idx), asg})) continue;
      if (lean && consequent_satisfied(a, ns, asg)) continue;
      out.push_back(Instance{sorted_idx, asg});
    }
  }

  std::vector<Instance> collect(const Structure& a, bool lean,
                                const std::set<std::pair<std::string, std::vector<int>>>* fired,
                                int threads) const {
    std::vector<Instance> all;
    for (size_t s = 0; s < order.size(); ++s) {
      const NormalSequent& ns = axiom((int)s);
      size_t k = ns.ctx.size();
      size_t n = a.size();
      size_t total = 1;
      for (size_t i = 0; i < k; ++i) total *= n;
      if (n == 0 && k > 0) continue;
      if (k == 0) total = 1;
      if (threads <= 1 || total < 64) {
        instances_of(a, (int)s, lean, fired, all, 0, total);
        continue;
      }
      size_t nt = std::min<size_t>(threads, total);
      std::vector<std::vector<Instance>> parts(nt);
      std::vector<std::thread> pool;
      size_t per = (total + nt - 1) / nt;
      for (size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
          instances_of(a, (int)s, lean, fired, parts[t], t * per,
                       std::min(total, (t + 1) * per));
        });
      }
      for (auto& th : pool) th.join();
      for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    }
    std::sort(all.begin(), all.end());
    return all;
  }

  // Applies the instances: fresh elements per (axiom, args, index), tuples per
  // matrix conjunct. Returns the extended structure plus birth records.
  Structure apply(const Structure& a, const std::vector<Instance>& instances, int level,
                  std::vector<std::optional<Birth>>* births,
                  std::vector<ChaseTrace::Firing>* firing_log) const {
    Structure s = a;
    std::set<std::string> taken(a.elems.begin(), a.elems.end());
    int counter = (int)a.elems.size();
    for (auto& inst : instances) {
      const NormalSequent& ns = axiom(inst.axiom);
      const std::string& name = axiom_name(inst.axiom);
      if (firing_log) firing_log->push_back({name, inst.args});
      std::map<std::string, int> local;  // variable -> element index
      for (size_t i = 0; i < ns.ctx.size(); ++i) local[ns.ctx[i]] = inst.args[i];
      for (size_t j = 0; j < ns.bound.size(); ++j) {
        std::string id;
        do {
          id = "n" + std::to_string(++counter);
        } while (taken.count(id));
        taken.insert(id);
        local[ns.bound[j]] = (int)s.elems.size();
        s.elems.push_back(id);
        if (births) births->push_back(Birth{level, name, inst.args, (int)j});
      }
      for (auto& at : ns.matrix.atoms) {
        if (at.is_eq()) continue;  // padding only; adds no tuple
        std::vector<int> tup;
        for (auto& t : at.args) tup.push_back(local.at(t.head()));
        s.rels[at.rel].insert(tup);
      }
    }
    return s;
  }
};

void check_chase_preconditions(const NormalTheory& t) {
  if (!t.sig->relational())
    throw PreconditionViolation("chase requires a relational signature");
  if (!t.equality_free())
    throw PreconditionViolation("chase requires an equality-free theory");
  for (auto& [name, ns] : t.axioms) {
    HornFormula all = ns.ante;
    for (auto& a : ns.matrix.atoms) all.atoms.push_back(a);
    for (auto& at : all.atoms) {
      if (at.is_eq()) continue;
      for (auto& tm : at.args)
        if (!tm.is_var())
          throw PreconditionViolation("relational axioms must use variables only: " + name);
    }
  }
}

}  // namespace

std::pair<Structure, Homomorphism> one_step(const NormalTheory& t, const Structure& a,
                                            int threads) {
  check_chase_preconditions(t);
  Engine eng(t);
  auto instances = eng.collect(a, /*lean=*/false, nullptr, threads);
  Structure s = eng.apply(a, instances, 1, nullptr, nullptr);
  auto src = std::make_shared<Structure>(a);
  auto tgt = std::make_shared<Structure>(s);
  std::vector<int> inc(a.elems.size());
  for (size_t i = 0; i < inc.size(); ++i) inc[i] = (int)i;
  return {s, make_homomorphism(src, tgt, std::move(inc))};
}

ChaseTrace chase(const NormalTheory& t, const Structure& a, int fuel, ChaseOptions opts) {
  check_chase_preconditions(t);
  if (fuel < 0) throw PreconditionViolation("fuel must be nonnegative");
  Engine eng(t);
  ChaseTrace trace;
  trace.theory = t;
  trace.levels.push_back(a);
  trace.births.assign(a.elems.size(), std::nullopt);
  std::set<std::pair<std::string, std::vector<int>>> fired;
  int level = 0;
  for (;;) {
    const Structure& cur = trace.levels.back();
    auto instances = eng.collect(cur, /*lean=*/!opts.faithful,
                                 opts.faithful ? nullptr : &fired, opts.threads);
    std::vector<ChaseTrace::Firing> log;
    std::vector<std::optional<Birth>> births = trace.births;
    Structure next = eng.apply(cur, instances, level + 1, &births, &log);
    bool unchanged = next.elems.size() == cur.elems.size() && next.rels == cur.rels;
    if (unchanged) {
      trace.status = ChaseStatus::saturated;
      trace.saturation_level = level;
      return trace;
    }
    if (level == fuel || next.elems.size() > opts.max_elements) {
      trace.status = ChaseStatus::fuel_exhausted;
      return trace;
    }
    for (auto& inst : instances)
      fired.insert({eng.axiom_name(inst.axiom), inst.args});
    trace.births = std::move(births);
    trace.firings.push_back(std::move(log));
    trace.levels.push_back(std::move(next));
    ++level;
  }
}

// ---------------------------------------------------------------------------
// General pipeline

namespace {

NormalTheory as_normal_theory(const Theory& t) {
  NormalTheory nt;
  nt.sig = t.sig;
  for (auto& [name, ax] : t.axioms) {
    NormalSequent ns;
    ns.ctx = ax.ctx;
    auto ante = as_horn(ax.ante);
    if (!ante) throw PreconditionViolation("axiom not in normal form: " + name);
    ns.ante = *ante;
    const Formula& c = ax.cons_formula();
    if (c.kind() == Formula::Kind::exists) {
      auto m = as_horn(c.body());
      if (!m) throw PreconditionViolation("axiom not in normal form: " + name);
      ns.bound = c.bound();
      ns.matrix = *m;
    } else {
      auto m = as_horn(c);
      if (!m) throw PreconditionViolation("axiom not in normal form: " + name);
      ns.matrix = *m;
    }
    nt.axioms.emplace_back(name, std::move(ns));
  }
  return nt;
}

// quotient by the equivalence generated by E without requiring E_Σ (used for
// partial traces only)
Structure lenient_quotient(const Structure& b, const std::string& e_name,
                           std::vector<int>* newidx_out) {
  std::vector<int> parent(b.elems.size());
  for (size_t i = 0; i < parent.size(); ++i) parent[i] = (int)i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto it = b.rels.find(e_name);
  if (it != b.rels.end()) {
    for (auto& p : it->second) {
      int x = find(p[0]), y = find(p[1]);
      if (x == y) continue;
      if (x > y) std::swap(x, y);
      parent[y] = x;
    }
  }
  Structure out;
  auto sig = std::make_shared<Signature>(*b.sig);
  sig->rels.erase(e_name);
  out.sig = sig;
  std::map<int, int> rep_to_new;
  std::vector<int> newidx(b.elems.size());
  for (size_t i = 0; i < b.elems.size(); ++i) {
    int r = find((int)i);
    if (!rep_to_new.count(r)) {
      rep_to_new[r] = (int)out.elems.size();
      out.elems.push_back(b.elems[r]);
    }
  }
  for (size_t i = 0; i < b.elems.size(); ++i) newidx[i] = rep_to_new[find((int)i)];
  for (auto& [r, tuples] : b.rels) {
    if (r == e_name) continue;
    auto& nt = out.rels[r];
    for (auto& tup : tuples) {
      std::vector<int> img(tup.size());
      for (size_t i = 0; i < tup.size(); ++i) img[i] = newidx[tup[i]];
      nt.insert(img);
    }
  }
  if (newidx_out) *newidx_out = std::move(newidx);
  return out;
}

}  // namespace

GeneralChase chase_general(const Theory& t, const Structure& a, int fuel, ChaseOptions opts) {
  for (auto& [name, ax] : t.axioms)
    if (classify_fragment(ax) == Fragment::geometric)
      throw PreconditionViolation("chase_general requires a regular theory; axiom " + name +
                                  " is geometric");
  GeneralChase out;
  // fast path: already relational, normal, equality-free
  if (t.sig->relational() && theory_equality_free(t) && theory_is_normal(t)) {
    NormalTheory nt = as_normal_theory(t);
    out.chased_theory = nt;
    out.trace = chase(nt, a, fuel, opts);
    out.status = out.trace.status;
    out.levels = (int)out.trace.levels.size() - 1;
    out.model = out.trace.final_level();
    out.eta.resize(a.elems.size());
    for (size_t i = 0; i < a.elems.size(); ++i) out.eta[i] = (int)i;
    return out;
  }
  // eliminate functions
  Theory cur = t;
  Structure acur = a;
  if (!t.sig->relational()) {
    out.functions_eliminated = true;
    out.fn = eliminate_functions(t);
    cur = out.fn.theory;
    acur = structure_of_graphs(a, out.fn);
  }
  // normalize, then eliminate equality if needed, then normalize again
  NormalTheory core;
  if (theory_equality_free(cur)) {
    core = theory_is_normal(cur) ? as_normal_theory(cur) : normalize_theory(cur);
  } else {
    NormalTheory pre = theory_is_normal(cur) ? as_normal_theory(cur) : normalize_theory(cur);
    EqElimResult ee = eliminate_equality(pre.to_theory());
    out.equality_eliminated = true;
    out.e_name = ee.esig.e;
    core = normalize_theory(ee.theory);
    acur = e_expand(acur, out.e_name);
  }
  out.chased_theory = core;
  out.trace = chase(core, acur, fuel, opts);
  out.status = out.trace.status;
  out.levels = (int)out.trace.levels.size() - 1;
  // reconstruct a Σ-structure
  Structure m = out.trace.final_level();
  std::vector<int> eta(a.elems.size());
  for (size_t i = 0; i < a.elems.size(); ++i) eta[i] = (int)i;
  if (out.equality_eliminated) {
    if (out.status == ChaseStatus::saturated) {
      auto cls = q_quotient_map(m, out.e_name);
      Structure q = q_quotient(m, out.e_name);
      std::map<int, int> rep_to_new;
      for (size_t i = 0, k = 0; i < m.elems.size(); ++i)
        if (cls[i] == (int)i) rep_to_new[(int)i] = (int)k++;
      for (size_t i = 0; i < eta.size(); ++i) eta[i] = rep_to_new.at(cls[eta[i]]);
      m = std::move(q);
    } else {
      std::vector<int> newidx;
      Structure q = lenient_quotient(m, out.e_name, &newidx);
      for (size_t i = 0; i < eta.size(); ++i) eta[i] = newidx[eta[i]];
      m = std::move(q);
    }
  }
  if (out.functions_eliminated) {
    try {
      m = structure_from_graphs(m, t.sig, out.fn);
    } catch (const NotFunctional& e) {
      if (out.status == ChaseStatus::saturated) throw;
      throw TraceExhausted(std::string("fuel exhausted before a total model emerged: ") +
                           e.what());
    }
  }
  out.model = std::move(m);
  out.eta = std::move(eta);
  return out;
}

GeneralWitness general_witness(const GeneralChase& gc, const Formula& phi,
                               const std::vector<int>& abar) {
  Formula core = phi;
  if (gc.functions_eliminated)
    core = flatten_formula(core, Context(free_vars_ordered(core)), *gc.fn.sig, gc.fn.graph_of);
  if (gc.equality_eliminated) core = replace_equality(core, gc.e_name);
  WitnessResult w = conservativity_witness(gc.trace, core, abar);
  GeneralWitness out;
  out.psi_core = w.psi;
  out.proof = std::move(w.proof);
  Formula back = out.psi_core;
  if (gc.equality_eliminated) back = restore_equality(back, gc.e_name);
  if (gc.functions_eliminated) back = unflatten_formula(back, gc.fn.graph_of);
  out.psi = back;
  return out;
}

// ---------------------------------------------------------------------------
// Entailment

EntailsResult entails(const Theory& t, const Sequent& sigma, int fuel, ChaseOptions opts) {
  if (classify_fragment(sigma.ante) == Fragment::unsupported)
    throw NotRegular("antecedent must be regular");
  // translate the theory and the sequent through the same pipeline
  bool elim_fn = !t.sig->relational();
  FnElimResult fe;
  Theory cur = t;
  Formula ante = sigma.ante;
  std::vector<Formula> cons = sigma.cons;
  if (elim_fn) {
    fe = eliminate_functions(t);
    cur = fe.theory;
    ante = flatten_formula(ante, sigma.ctx, *t.sig, fe.graph_of);
    for (auto& c : cons) c = flatten_formula(c, sigma.ctx, *t.sig, fe.graph_of);
  }
  bool elim_eq = !theory_equality_free(cur);
  std::string e_name;
  NormalTheory core;
  if (elim_eq) {
    NormalTheory pre = theory_is_normal(cur) ? as_normal_theory(cur) : normalize_theory(cur);
    EqElimResult ee = eliminate_equality(pre.to_theory());
    e_name = ee.esig.e;
    core = normalize_theory(ee.theory);
    ante = replace_equality(ante, e_name);
    for (auto& c : cons) c = replace_equality(c, e_name);
  } else {
    core = theory_is_normal(cur) ? as_normal_theory(cur) : normalize_theory(cur);
  }
  // antecedent equalities that survive (padding or plain = over relational
  // equality-free input) are absorbed by the representing structure
  PrenexResult pa = prenex(ante, sigma.ctx);
  Context full_ctx = sigma.ctx.extended(pa.bound.vars());
  RepresentedStructure rs = representing_structure(pa.matrix, full_ctx, core.sig);
  ChaseTrace trace = chase(core, rs.structure, fuel, opts);

  EntailsResult out;
  out.theory_used = core.to_theory();
  // least level, then least disjunct
  for (size_t lvl = 0; lvl < trace.levels.size(); ++lvl) {
    for (size_t i = 0; i < cons.size(); ++i) {
      ElemAssignment asg;
      for (auto& v : free_vars_ordered(cons[i])) asg[v] = rs.canonical.at(v);
      if (!evaluate(trace.levels[lvl], cons[i], asg)) continue;
      out.verdict = Verdict::provable;
      out.disjunct = (int)i + 1;
      out.level = (int)lvl;
      std::vector<int> abar;
      for (auto& v : free_vars_ordered(cons[i])) abar.push_back(rs.canonical.at(v));
      WitnessResult w = conservativity_witness(trace, cons[i], abar);
      out.witness = w.psi;
      out.proof = std::move(w.proof);
      return out;
    }
  }
  if (trace.status == ChaseStatus::saturated) {
    out.verdict = Verdict::refuted;
    Structure m = trace.final_level();
    if (elim_eq) m = q_quotient(m, e_name);
    if (elim_fn) m = structure_from_graphs(m, t.sig, fe);
    out.countermodel = std::move(m);
    return out;
  }
  out.verdict = Verdict::unknown;
  return out;
}

SplitResult disjunction_split(const Theory& t, const Sequent& sigma, int fuel,
                              ChaseOptions opts) {
  EntailsResult r = entails(t, sigma, fuel, opts);
  SplitResult out;
  out.verdict = r.verdict;
  if (r.verdict != Verdict::provable) return out;
  out.disjunct = r.disjunct;
  Sequent single;
  single.ctx = sigma.ctx;
  single.ante = sigma.ante;
  single.cons = {sigma.cons[r.disjunct - 1]};
  EntailsResult re = entails(t, single, fuel, opts);
  if (re.verdict != Verdict::provable)
    throw Error("internal: split disjunct did not re-verify as provable");
  return out;
}

}  // namespace chasekit
