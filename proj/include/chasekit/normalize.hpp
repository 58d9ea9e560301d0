#pragma once

// Canonical forms and theory-level translations: normal regular sequents,
// prenexing to ∃+Horn, elimination of equality, elimination of function
// symbols, and Horn derivability over the empty theory (congruence closure).

#include <map>
#include <string>
#include <vector>

#include "chasekit/syntax.hpp"

namespace chasekit {

struct Structure;  // semantics.hpp

// φ(x̄) ⊢_x̄ ∃ȳ ψ(x̄,ȳ) with φ, ψ Horn and ψ ⊢^∅ φ.
struct NormalSequent {
  Context ctx;
  HornFormula ante;
  Context bound;
  HornFormula matrix;

  Sequent to_sequent() const;
};

struct NormalTheory {
  SigPtr sig;
  std::vector<std::pair<std::string, NormalSequent>> axioms;

  Theory to_theory() const;
  bool equality_free() const;  // no equality atoms anywhere
};

// ---------------------------------------------------------------------------
// Prenexing

struct PrenexResult {
  Context bound;
  HornFormula matrix;
};

// ∃bound.matrix is equivalent to φ over the empty theory; every bound
// variable occurs in some atom of matrix (padded with y=y if needed). Bound
// variables are renamed fresh with respect to `ctx`.
PrenexResult prenex(const Formula& phi, const Context& ctx);

// ---------------------------------------------------------------------------
// Normalization

// Requires a regular (non-disjunctive) consequent. Antecedent existentials
// are hoisted into the context; the matrix is the consequent matrix conjoined
// with the weakened antecedent (deduplicated), guaranteeing ψ ⊢ φ.
NormalSequent normalize_sequent(const Sequent& s);
NormalTheory normalize_theory(const Theory& t);

bool is_normal(const Sequent& s);      // already in normal shape incl. side condition
bool theory_is_normal(const Theory& t);
bool theory_equality_free(const Theory& t);

// ---------------------------------------------------------------------------
// Horn derivability over the empty theory (congruence closure)

bool horn_entails(const HornFormula& gamma, const Atom& alpha, const Context& ctx);
// Γ ⊢ every atom of Δ.
bool horn_entails_all(const HornFormula& gamma, const HornFormula& delta, const Context& ctx);

// ---------------------------------------------------------------------------
// Elimination of equality

struct EqSignature {
  SigPtr base;
  std::string e;  // fresh binary predicate
};

// Picks a deterministic fresh name (E, E0, E1, ...).
EqSignature make_eq_signature(SigPtr base);

// Equivalence + per-position congruence axioms for every relation of base.
Theory eq_theory(const EqSignature& es);

struct EqElimResult {
  EqSignature esig;
  Theory theory;  // T^E ∪ E_Σ over Σ_E (equality-free)
};

// Requires a relational signature.
EqElimResult eliminate_equality(const Theory& t);

Formula replace_equality(const Formula& f, const std::string& e);   // φ ↦ φ^E
Formula restore_equality(const Formula& f, const std::string& e);   // ψ ↦ ψ^{-E}
Theory restore_equality(const Theory& t, const std::string& e);

// ---------------------------------------------------------------------------
// Elimination of function symbols

struct FnElimResult {
  SigPtr sig;                                  // Σ̄ (relational)
  Theory theory;                               // normalization of F_Σ ∪ T̄
  std::map<std::string, std::string> graph_of; // f -> F_f
  bool changed = false;                        // false when Σ was relational
};

FnElimResult eliminate_functions(const Theory& t);

// φ̄: every term f(t̄) replaced by a fresh bound variable constrained by an
// F_f atom, innermost-leftmost, fresh scheme z_<f>_<k>.
Formula flatten_formula(const Formula& f, const Context& ctx, const Signature& sig,
                        const std::map<std::string, std::string>& graph_of);

// F_f(t̄,u) atoms back to f(t̄)=u equalities.
Formula unflatten_formula(const Formula& f, const std::map<std::string, std::string>& graph_of);

// Functions become graph relations and back. The inverse requires each F_f
// table to be total and single-valued (NotFunctional otherwise).
Structure structure_of_graphs(const Structure& a, const FnElimResult& fe);
Structure structure_from_graphs(const Structure& b, SigPtr original_sig, const FnElimResult& fe);

}  // namespace chasekit
