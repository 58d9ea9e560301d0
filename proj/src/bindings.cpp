// Python bindings: thin, text-first wrappers over the library, mirroring the
// CLI. Inputs and outputs are the same grammars the CLI speaks.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chasekit/chase.hpp"
#include "chasekit/normalize.hpp"
#include "chasekit/proofs.hpp"
#include "chasekit/semantics.hpp"
#include "chasekit/text.hpp"

namespace py = pybind11;
using namespace chasekit;

namespace {

ElemAssignment to_assignment(const Structure& a, const std::map<std::string, std::string>& asg) {
  ElemAssignment out;
  for (auto& [v, e] : asg) {
    auto idx = a.index_of(e);
    if (!idx) throw Error("unknown element: " + e);
    out[v] = *idx;
  }
  return out;
}

py::dict chase_py(const std::string& theory_text, const std::string& struct_text, int fuel,
                  bool faithful, int threads) {
  Theory t = parse_theory(theory_text);
  Structure a = parse_structure(struct_text);
  ChaseOptions opts;
  opts.faithful = faithful;
  opts.threads = threads;
  GeneralChase gc = chase_general(t, a, fuel, opts);
  py::dict out;
  out["status"] = gc.status == ChaseStatus::saturated ? "saturated" : "fuel-exhausted";
  out["level"] = gc.status == ChaseStatus::saturated ? gc.trace.saturation_level : gc.levels;
  out["model"] = print_structure(gc.model);
  py::list trace;
  for (auto& lvl : gc.trace.levels) trace.append(print_structure(lvl));
  out["trace"] = trace;
  return out;
}

py::dict entails_py(const std::string& theory_text, const std::string& sequent_text, int fuel,
                    int threads) {
  Theory t = parse_theory(theory_text);
  Sequent s = parse_sequent(sequent_text, *t.sig);
  ChaseOptions opts;
  opts.threads = threads;
  EntailsResult r = entails(t, s, fuel, opts);
  py::dict out;
  if (r.verdict == Verdict::provable) {
    out["verdict"] = "provable";
    out["disjunct"] = r.disjunct;
    out["witness"] = print_formula(*r.witness);
    out["derivation"] = print_derivation(*r.proof);
    out["theory_used"] = print_theory(*r.theory_used);
  } else if (r.verdict == Verdict::refuted) {
    out["verdict"] = "refuted";
    out["countermodel"] = print_structure(*r.countermodel);
  } else {
    out["verdict"] = "unknown";
  }
  return out;
}

py::dict witness_py(const std::string& theory_text, const std::string& struct_text,
                    const std::string& formula_text, const std::vector<std::string>& at,
                    int fuel) {
  Theory t = parse_theory(theory_text);
  Structure a = parse_structure(struct_text);
  Formula phi = parse_formula(formula_text, *t.sig);
  auto fv = free_vars_ordered(phi);
  if (at.size() != fv.size()) throw Error("`at` must list one element per free variable");
  std::vector<int> abar;
  for (auto& e : at) {
    auto idx = a.index_of(e);
    if (!idx) throw Error("unknown element: " + e);
    abar.push_back(*idx);
  }
  GeneralChase gc = chase_general(t, a, fuel);
  GeneralWitness w = general_witness(gc, phi, abar);
  py::dict out;
  out["witness"] = print_formula(w.psi);
  out["core"] = print_formula(w.psi_core);
  out["derivation"] = print_derivation(w.proof);
  out["theory_used"] = print_theory(gc.chased_theory.to_theory());
  return out;
}

py::dict eval_py(const std::string& struct_text, const std::string& formula_text,
               const std::map<std::string, std::string>& assign) {
  Structure a = parse_structure(struct_text);
  Formula f = parse_formula(formula_text, *a.sig);
  ElemAssignment asg = to_assignment(a, assign);
  for (auto& v : free_vars_ordered(f))
    if (!asg.count(v)) throw Error("no assignment for free variable " + v);
  py::dict out;
  bool value = evaluate(a, f, asg);
  out["value"] = value;
  py::dict wit;
  if (value && f.kind() == Formula::Kind::exists) {
    auto w = least_witness(a, f.bound(), f.body(), asg);
    if (w)
      for (auto& v : f.bound()) wit[py::str(v)] = a.elems[w->at(v)];
  }
  out["witness"] = wit;
  return out;
}

py::dict check_py(const std::string& theory_text, const std::string& derivation_text) {
  Theory t = parse_theory(theory_text);
  Derivation d = parse_derivation(derivation_text, *t.sig);
  CheckResult chk = check_derivation(d, t);
  py::dict out;
  out["ok"] = chk.ok;
  if (!chk.ok) {
    out["node"] = chk.path;
    out["message"] = chk.message;
  }
  return out;
}

py::dict abstract_py(const std::string& theory_text, const std::string& derivation_text,
                     const std::vector<std::string>& constants) {
  Theory t = parse_theory(theory_text);
  Derivation d = parse_derivation(derivation_text, *t.sig);
  std::set<std::string> consts(constants.begin(), constants.end());
  Abstraction abs = abstract_constants(d, consts, t);
  py::dict out;
  out["derivation"] = print_derivation(abs.derivation);
  out["fresh"] = abs.fresh.vars();
  py::dict assign;
  for (auto& y : abs.fresh) assign[py::str(y)] = abs.assignment.at(y);
  out["assign"] = assign;
  return out;
}

}  // namespace

PYBIND11_MODULE(_chasekit, m) {
  m.doc() = "chase engine for regular theories: chase, entailment, witnesses, proofs";

  // translators run newest-first: register the base before the derived
  py::register_exception<Error>(m, "ChasekitError");
  py::register_exception<ParseError>(m, "ChasekitParseError");

  m.def("normalize_theory",
        [](const std::string& text) {
          return print_theory(normalize_theory(parse_theory(text)).to_theory());
        },
        py::arg("theory"), "Normalize a regular theory; returns theory text.");
  m.def("eliminate_functions",
        [](const std::string& text) {
          FnElimResult fe = eliminate_functions(parse_theory(text));
          py::dict out;
          out["changed"] = fe.changed;
          out["theory"] = print_theory(fe.theory);
          return out;
        },
        py::arg("theory"));
  m.def("eliminate_equality",
        [](const std::string& text) {
          EqElimResult ee = eliminate_equality(parse_theory(text));
          py::dict out;
          out["e"] = ee.esig.e;
          out["theory"] = print_theory(ee.theory);
          return out;
        },
        py::arg("theory"));
  m.def("diagram",
        [](const std::string& struct_text) {
          return print_theory(diagram(parse_structure(struct_text)).theory);
        },
        py::arg("structure"));
  m.def("evaluate", &eval_py, py::arg("structure"), py::arg("formula"),
        py::arg("assign") = std::map<std::string, std::string>{});
  m.def("chase", &chase_py, py::arg("theory"), py::arg("structure"), py::arg("fuel") = 10,
        py::arg("faithful") = false, py::arg("threads") = 1);
  m.def("entails", &entails_py, py::arg("theory"), py::arg("sequent"), py::arg("fuel") = 10,
        py::arg("threads") = 1);
  m.def("witness", &witness_py, py::arg("theory"), py::arg("structure"), py::arg("formula"),
        py::arg("at") = std::vector<std::string>{}, py::arg("fuel") = 10);
  m.def("check", &check_py, py::arg("theory"), py::arg("derivation"));
  m.def("abstract_constants", &abstract_py, py::arg("theory"), py::arg("derivation"),
        py::arg("constants"));

  m.attr("__version__") = "0.1.0";
}
