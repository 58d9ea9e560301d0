// chasekit: batch CLI over the text formats.
//
// Subcommands: normalize, elim-fn, elim-eq, eval, diagram, chase, entails,
// witness, check, abstract, elim-diagram.
//
// Exit codes: 0 success/provable, 1 refuted/check-failed/false,
// 2 unknown/fuel-exhausted, 64 usage error, 65 parse or input error,
// 70 internal invariant violation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "chasekit/chase.hpp"
#include "chasekit/normalize.hpp"
#include "chasekit/proofs.hpp"
#include "chasekit/semantics.hpp"
#include "chasekit/text.hpp"

using namespace chasekit;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kRefuted = 1, kUnknown = 2, kUsage = 64, kParse = 65, kInternal = 70;

struct Output {
  bool as_json = false;
  std::string path;  // empty = stdout
  std::ostringstream text;
  json j;

  void emit() {
    std::string payload = as_json ? j.dump(2) + "\n" : text.str();
    if (path.empty()) {
      std::cout << payload;
    } else {
      std::ofstream f(path, std::ios::binary);
      f << payload;
    }
  }
};

int default_threads() {
  if (const char* s = std::getenv("CHASEKIT_PARALLEL")) {
    int n = std::atoi(s);
    if (n > 0) return n;
  }
  return 1;
}

ElemAssignment parse_assignment(const std::string& text, const Structure& a) {
  ElemAssignment out;
  if (text.empty()) return out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("bad assignment entry: " + item);
    std::string var = item.substr(0, eq);
    std::string elem = item.substr(eq + 1);
    auto idx = a.index_of(elem);
    if (!idx) throw Error("unknown element: " + elem);
    out[var] = *idx;
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

std::string status_line(ChaseStatus s, int level, int levels) {
  if (s == ChaseStatus::saturated) return "SATURATED level=" + std::to_string(level);
  return "FUEL-EXHAUSTED levels=" + std::to_string(levels);
}

void print_trace(Output& out, const GeneralChase& gc) {
  out.text << "# trace\n";
  for (size_t lvl = 0; lvl < gc.trace.levels.size(); ++lvl) {
    out.text << "# level " << lvl << "\n";
    std::istringstream lines(print_structure(gc.trace.levels[lvl]));
    std::string line;
    while (std::getline(lines, line)) out.text << "# " << line << "\n";
  }
  for (size_t e = 0; e < gc.trace.births.size(); ++e) {
    const auto& b = gc.trace.births[e];
    if (!b) continue;
    out.text << "# " << gc.trace.levels.back().elems[e] << " = (" << b->axiom << ", (";
    for (size_t i = 0; i < b->args.size(); ++i) {
      if (i) out.text << ",";
      out.text << gc.trace.levels[b->level - 1].elems[b->args[i]];
    }
    out.text << "), " << b->index << ") at level " << b->level << "\n";
  }
}

json trace_json(const GeneralChase& gc) {
  json t = json::array();
  for (auto& lvl : gc.trace.levels) t.push_back(print_structure(lvl));
  return t;
}

}  // namespace

static int run(int argc, char** argv) {
  CLI::App app{"chasekit: a chase engine for regular theories"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  bool as_json = false;
  app.add_flag("--json", as_json, "emit a machine-readable report");
  std::string out_path;
  app.add_option("--output", out_path, "write the report to a file");
  int threads = default_threads();
  app.add_option("--threads", threads, "instance-evaluation parallelism");

  std::string theory_path, struct_path, deriv_path, sequent_text, formula_text;
  std::string assign_text, at_text, constants_text, pattern_text, vars_text, emit_theory;
  int fuel = 10;
  bool faithful = false, trace = false, simplify = false;

  auto* c_norm = app.add_subcommand("normalize", "normalize a regular theory");
  c_norm->add_option("theory", theory_path)->required();

  auto* c_fn = app.add_subcommand("elim-fn", "eliminate function symbols");
  c_fn->add_option("theory", theory_path)->required();

  auto* c_eq = app.add_subcommand("elim-eq", "eliminate equality");
  c_eq->add_option("theory", theory_path)->required();

  auto* c_eval = app.add_subcommand("eval", "evaluate a formula in a structure");
  c_eval->add_option("struct", struct_path)->required();
  c_eval->add_option("formula", formula_text)->required();
  c_eval->add_option("--assign", assign_text, "x=a,y=b");

  auto* c_diag = app.add_subcommand("diagram", "emit the diagram of a structure");
  c_diag->add_option("struct", struct_path)->required();

  auto* c_chase = app.add_subcommand("chase", "chase a structure to a model");
  c_chase->add_option("theory", theory_path)->required();
  c_chase->add_option("struct", struct_path)->required();
  c_chase->add_option("--fuel", fuel);
  c_chase->add_flag("--faithful", faithful);
  c_chase->add_flag("--trace", trace);

  auto* c_ent = app.add_subcommand("entails", "decide or semi-decide an entailment");
  c_ent->add_option("theory", theory_path)->required();
  c_ent->add_option("sequent", sequent_text)->required();
  c_ent->add_option("--fuel", fuel);
  c_ent->add_option("--emit-theory", emit_theory, "write the chased theory to a file");

  auto* c_wit = app.add_subcommand("witness", "conservativity witness for a fact");
  c_wit->add_option("theory", theory_path)->required();
  c_wit->add_option("struct", struct_path)->required();
  c_wit->add_option("formula", formula_text)->required();
  c_wit->add_option("--at", at_text, "elements for the free variables, in order");
  c_wit->add_option("--fuel", fuel);
  c_wit->add_flag("--simplify", simplify);
  c_wit->add_option("--emit-theory", emit_theory);

  auto* c_check = app.add_subcommand("check", "check a derivation against a theory");
  c_check->add_option("theory", theory_path)->required();
  c_check->add_option("derivation", deriv_path)->required();

  auto* c_abs = app.add_subcommand("abstract", "abstract constants to variables");
  c_abs->add_option("theory", theory_path)->required();
  c_abs->add_option("derivation", deriv_path)->required();
  c_abs->add_option("--constants", constants_text)->required();

  auto* c_ed = app.add_subcommand("elim-diagram", "eliminate diagram constants");
  c_ed->add_option("theory", theory_path)->required();
  c_ed->add_option("struct", struct_path)->required();
  c_ed->add_option("derivation", deriv_path)->required();
  c_ed->add_option("--pattern", pattern_text, "root sequent with pattern variables");
  c_ed->add_option("--vars", vars_text, "pattern variables, comma separated");
  c_ed->add_option("--at", at_text, "elements for the pattern variables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  Output out;
  out.as_json = as_json;
  out.path = out_path;
  ChaseOptions opts;
  opts.faithful = faithful;
  opts.threads = threads;

  if (c_norm->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    std::string printed = print_theory(normalize_theory(t).to_theory());
    out.text << printed;
    out.j = {{"command", "normalize"}, {"theory", printed}};
    out.emit();
    return kOk;
  }
  if (c_fn->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    FnElimResult fe = eliminate_functions(t);
    std::string printed = print_theory(fe.theory);
    out.text << printed;
    out.j = {{"command", "elim-fn"}, {"changed", fe.changed}, {"theory", printed}};
    out.emit();
    return kOk;
  }
  if (c_eq->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    EqElimResult ee = eliminate_equality(t);
    std::string printed = print_theory(ee.theory);
    out.text << printed;
    out.j = {{"command", "elim-eq"}, {"e", ee.esig.e}, {"theory", printed}};
    out.emit();
    return kOk;
  }
  if (c_eval->parsed()) {
    Structure a = parse_structure(read_file(struct_path), struct_path);
    Formula f = parse_formula(formula_text, *a.sig);
    ElemAssignment asg = parse_assignment(assign_text, a);
    for (auto& v : free_vars_ordered(f))
      if (!asg.count(v)) throw Error("no assignment for free variable " + v);
    bool value = evaluate(a, f, asg);
    json wit = json::object();
    out.text << (value ? "TRUE" : "FALSE") << "\n";
    if (value && f.kind() == Formula::Kind::exists) {
      auto w = least_witness(a, f.bound(), f.body(), asg);
      if (w) {
        out.text << "witness:";
        for (auto& v : f.bound()) {
          out.text << " " << v << "=" << a.elems[w->at(v)];
          wit[v] = a.elems[w->at(v)];
        }
        out.text << "\n";
      }
    }
    out.j = {{"command", "eval"}, {"value", value}, {"witness", wit}};
    out.emit();
    return value ? kOk : kRefuted;
  }
  if (c_diag->parsed()) {
    Structure a = parse_structure(read_file(struct_path), struct_path);
    DiagramResult d = diagram(a);
    std::string printed = print_theory(d.theory);
    out.text << printed;
    out.j = {{"command", "diagram"}, {"theory", printed}};
    out.emit();
    return kOk;
  }
  if (c_chase->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Structure a = parse_structure(read_file(struct_path), struct_path);
    GeneralChase gc = chase_general(t, a, fuel, opts);
    std::string printed = print_structure(gc.model);
    out.text << printed;
    if (trace) print_trace(out, gc);
    out.text << status_line(gc.status,
                            gc.status == ChaseStatus::saturated ? gc.trace.saturation_level : 0,
                            gc.levels)
             << "\n";
    out.j = {{"command", "chase"},
             {"status", gc.status == ChaseStatus::saturated ? "saturated" : "fuel-exhausted"},
             {"level",
              gc.status == ChaseStatus::saturated ? gc.trace.saturation_level : gc.levels},
             {"model", printed}};
    if (trace) out.j["trace"] = trace_json(gc);
    out.emit();
    return gc.status == ChaseStatus::saturated ? kOk : kUnknown;
  }
  if (c_ent->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Sequent s = parse_sequent(sequent_text, *t.sig);
    EntailsResult r = entails(t, s, fuel, opts);
    if (!emit_theory.empty() && r.theory_used) {
      std::ofstream f(emit_theory, std::ios::binary);
      f << print_theory(*r.theory_used);
    }
    if (r.verdict == Verdict::provable) {
      out.text << "PROVABLE disjunct=" << r.disjunct << "\n";
      out.text << "witness: " << print_formula(*r.witness) << "\n";
      out.text << "derivation:\n" << print_derivation(*r.proof);
      out.j = {{"command", "entails"},
               {"verdict", "provable"},
               {"disjunct", r.disjunct},
               {"witness", print_formula(*r.witness)},
               {"derivation", print_derivation(*r.proof)}};
      out.emit();
      return kOk;
    }
    if (r.verdict == Verdict::refuted) {
      out.text << "REFUTED\ncountermodel:\n" << print_structure(*r.countermodel);
      out.j = {{"command", "entails"},
               {"verdict", "refuted"},
               {"countermodel", print_structure(*r.countermodel)}};
      out.emit();
      return kRefuted;
    }
    out.text << "UNKNOWN fuel=" << fuel << "\n";
    out.j = {{"command", "entails"}, {"verdict", "unknown"}, {"fuel", fuel}};
    out.emit();
    return kUnknown;
  }
  if (c_wit->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Structure a = parse_structure(read_file(struct_path), struct_path);
    Formula phi = parse_formula(formula_text, *t.sig);
    auto fv = free_vars_ordered(phi);
    auto elems = at_text.empty() ? std::vector<std::string>{} : split_commas(at_text);
    if (elems.size() != fv.size())
      throw Error("--at must list one element per free variable (" + std::to_string(fv.size()) +
                  " expected)");
    std::vector<int> abar;
    for (auto& e : elems) {
      auto idx = a.index_of(e);
      if (!idx) throw Error("unknown element: " + e);
      abar.push_back(*idx);
    }
    GeneralChase gc = chase_general(t, a, fuel, opts);
    GeneralWitness w = general_witness(gc, phi, abar);
    Theory used = gc.chased_theory.to_theory();
    if (simplify) {
      WitnessResult base{w.psi_core, w.proof};
      WitnessResult simp = simplify_witness(base, Context(fv), used);
      w.psi_core = simp.psi;
      w.proof = simp.proof;
      Formula back = w.psi_core;
      if (gc.equality_eliminated) back = restore_equality(back, gc.e_name);
      if (gc.functions_eliminated) back = unflatten_formula(back, gc.fn.graph_of);
      w.psi = back;
    }
    if (!emit_theory.empty()) {
      std::ofstream f(emit_theory, std::ios::binary);
      f << print_theory(used);
    }
    out.text << "witness: " << print_formula(w.psi) << "\n";
    if (!(w.psi == w.psi_core)) out.text << "core: " << print_formula(w.psi_core) << "\n";
    out.text << "derivation:\n" << print_derivation(w.proof);
    out.j = {{"command", "witness"},
             {"witness", print_formula(w.psi)},
             {"core", print_formula(w.psi_core)},
             {"derivation", print_derivation(w.proof)}};
    out.emit();
    return kOk;
  }
  if (c_check->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Derivation d = parse_derivation(read_file(deriv_path), *t.sig, deriv_path);
    CheckResult chk = check_derivation(d, t);
    if (chk.ok) {
      out.text << "OK\n";
      out.j = {{"command", "check"}, {"ok", true}};
      out.emit();
      return kOk;
    }
    out.text << "FAIL node=" << chk.path << ": " << chk.message << "\n";
    out.j = {{"command", "check"}, {"ok", false}, {"node", chk.path}, {"message", chk.message}};
    out.emit();
    return kRefuted;
  }
  if (c_abs->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Derivation d = parse_derivation(read_file(deriv_path), *t.sig, deriv_path);
    std::set<std::string> consts;
    for (auto& c : split_commas(constants_text)) consts.insert(c);
    Abstraction abs = abstract_constants(d, consts, t);
    out.text << print_derivation(abs.derivation);
    out.text << "fresh:";
    for (auto& y : abs.fresh) out.text << " " << y;
    out.text << "\nassign:";
    for (auto& y : abs.fresh) out.text << " " << y << ":=" << abs.assignment.at(y);
    out.text << "\n";
    json assign = json::object();
    for (auto& y : abs.fresh) assign[y] = abs.assignment.at(y);
    out.j = {{"command", "abstract"},
             {"derivation", print_derivation(abs.derivation)},
             {"fresh", abs.fresh.vars()},
             {"assign", assign}};
    out.emit();
    return kOk;
  }
  if (c_ed->parsed()) {
    Theory t = parse_theory(read_file(theory_path), theory_path);
    Structure a = parse_structure(read_file(struct_path), struct_path);
    DiagramResult diag = diagram(a);
    Theory combined = combine_with_diagram(t, diag);
    Derivation d = parse_derivation(read_file(deriv_path), *combined.sig, deriv_path);
    Sequent pattern;
    Context ybar;
    ElemAssignment abar;
    if (!pattern_text.empty()) {
      pattern = parse_sequent(pattern_text, *t.sig);
      std::vector<std::string> yv = split_commas(vars_text);
      ybar = Context(yv);
      auto av = split_commas(at_text);
      if (av.size() != yv.size()) throw Error("--at must match --vars");
      for (size_t i = 0; i < yv.size(); ++i) {
        auto idx = a.index_of(av[i]);
        if (!idx) throw Error("unknown element: " + av[i]);
        abar[yv[i]] = *idx;
      }
    } else {
      // default pattern: one fresh variable per distinct diagram constant
      // appearing in the root sequent
      std::map<std::string, std::string> const_to_var;
      FreshNames fresh;
      fresh.reserve_all(d.conclusion.ctx);
      std::vector<std::string> yv;
      std::function<void(const Term&)> scan = [&](const Term& tm) {
        if (tm.is_var()) return;
        if (tm.args().empty()) {
          for (size_t e = 0; e < diag.constant_of.size(); ++e) {
            if (diag.constant_of[e] == tm.head() && !const_to_var.count(tm.head())) {
              std::string y = fresh.fresh("y_" + a.elems[e]);
              const_to_var[tm.head()] = y;
              yv.push_back(y);
              abar[y] = (int)e;
            }
          }
        }
        for (auto& s : tm.args()) scan(s);
      };
      std::function<void(const Formula&)> scanf2 = [&](const Formula& f) {
        switch (f.kind()) {
          case Formula::Kind::atom:
            for (auto& tm : f.as_atom().args) scan(tm);
            return;
          case Formula::Kind::conj:
            for (auto& p : f.parts()) scanf2(p);
            return;
          case Formula::Kind::exists:
            scanf2(f.body());
            return;
        }
      };
      scanf2(d.conclusion.ante);
      for (auto& c : d.conclusion.cons) scanf2(c);
      ybar = Context(yv);
      std::function<Term(const Term&)> sub_t = [&](const Term& tm) -> Term {
        if (tm.is_var()) return tm;
        if (tm.args().empty() && const_to_var.count(tm.head()))
          return Term::var(const_to_var.at(tm.head()));
        std::vector<Term> args;
        for (auto& s : tm.args()) args.push_back(sub_t(s));
        return Term::app(tm.head(), args);
      };
      std::function<Formula(const Formula&)> sub_f = [&](const Formula& f) -> Formula {
        switch (f.kind()) {
          case Formula::Kind::atom: {
            Atom at2 = f.as_atom();
            for (auto& tm : at2.args) tm = sub_t(tm);
            return Formula::atom(at2);
          }
          case Formula::Kind::conj: {
            std::vector<Formula> ps;
            for (auto& p : f.parts()) ps.push_back(sub_f(p));
            return Formula::conj(ps);
          }
          case Formula::Kind::exists:
            return Formula::exists(f.bound(), sub_f(f.body()));
        }
        throw Error("unreachable");
      };
      pattern.ctx = d.conclusion.ctx.extended(yv);
      pattern.ante = sub_f(d.conclusion.ante);
      for (auto& c : d.conclusion.cons) pattern.cons.push_back(sub_f(c));
    }
    DiagramElimination de = eliminate_diagram_constants(d, a, t, diag, pattern, ybar, abar);
    out.text << "chi: " << print_formula(de.chi) << "\n";
    out.text << "derivation:\n" << print_derivation(de.proof);
    out.j = {{"command", "elim-diagram"},
             {"chi", print_formula(de.chi)},
             {"derivation", print_derivation(de.proof)}};
    out.emit();
    return kOk;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const PreconditionViolation& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kParse;
  } catch (const NotRelational& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kParse;
  } catch (const NotSatisfiedAtAnyLevel& e) {
    std::cerr << "not satisfied: " << e.what() << "\n";
    return kRefuted;
  } catch (const NotSatisfied& e) {
    std::cerr << "not satisfied: " << e.what() << "\n";
    return kRefuted;
  } catch (const TraceExhausted& e) {
    std::cerr << "trace exhausted: " << e.what() << "\n";
    return kUnknown;
  } catch (const CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kRefuted;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
