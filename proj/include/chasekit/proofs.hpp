#pragma once

// Derivation trees for the regular fragment (single-antecedent sequent
// rules), a proof checker, the constants-to-variables abstraction, diagram
// derivations, and diagram-constant elimination.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chasekit/semantics.hpp"
#include "chasekit/syntax.hpp"

namespace chasekit {

// Rules, as used in the paper's case analysis: theory axioms, structural and
// logical axioms (∧-projections, ⊤, =-rules, Frobenius, ∨-introduction for
// geometric consequents), substitution, cut, the ∃ double rule, and context
// weakening. Formula matching throughout the checker is up to α-equivalence;
// contexts compare as sets.
enum class Rule {
  theory_axiom,  // leaf; matches an axiom up to α-equivalence and weakening
  identity,      // φ ⊢ φ
  cut,           // φ ⊢ χ and χ ⊢ Ψ give φ ⊢ Ψ
  substitution,  // φ ⊢ ψ over x̄ gives φ[s̄] ⊢ ψ[s̄] over the target context
  and_intro,     // Γ ⊢ φ_i (all i) gives Γ ⊢ ⋀φ_i
  and_elim,      // ⋀φ_j ⊢ φ_i
  top_intro,     // φ ⊢ ⊤
  eq_refl,       // ⊤ ⊢ t = t
  eq_subst,      // (t = s) ∧ θ[t/v] ⊢ θ[s/v]
  exists_left,   // φ ⊢_{x̄,ȳ} ψ gives ∃ȳφ ⊢_x̄ ψ   (ȳ not free in ψ)
  exists_right,  // ∃ȳφ ⊢_x̄ ψ gives φ ⊢_{x̄,ȳ} ψ
  weaken,        // same sequent in a larger context
  frobenius,     // Γ ∧ ∃ȳζ ⊢ ∃ȳ(Γ ∧ ζ)
  or_intro,      // ψ_i ⊢ ψ_1 | ... | ψ_n
};

const char* rule_name(Rule r);

struct Derivation {
  Rule rule = Rule::identity;
  Sequent conclusion;
  std::vector<Derivation> premises;

  // payloads (meaningful per rule)
  std::string axiom;      // theory_axiom
  VarMap subst;           // substitution
  Context subst_ctx;      // substitution target context
  size_t index = 0;       // and_elim / frobenius / or_intro
  Term term_a, term_b;    // eq_refl (term_a), eq_subst (t, s)
  Formula tmpl;           // eq_subst template
  std::string hole;       // eq_subst template variable
  Context binder;         // exists_left / exists_right
};

struct CheckResult {
  bool ok = true;
  std::string path;     // node path of the first failure, e.g. "0.1"
  std::string message;
  explicit operator bool() const { return ok; }
};

CheckResult check_derivation(const Derivation& d, const Theory& t);
std::map<Rule, int> rule_multiset(const Derivation& d);

// ---------------------------------------------------------------------------
// Builders. Each returns a derivation that checks by construction; misuse
// throws IllFormedDerivation.

Derivation d_identity(const Context& ctx, const Formula& f);
Derivation d_theory_axiom(const Theory& t, const std::string& name, const Context& ctx);
Derivation d_cut(Derivation lhs, Derivation rhs);
Derivation d_substitution(Derivation premise, const VarMap& map, const Context& target);
Derivation d_and_intro(std::vector<Derivation> premises);
Derivation d_and_elim(const Context& ctx, const Formula& conj, size_t i);
Derivation d_top_intro(const Context& ctx, const Formula& ante);
Derivation d_eq_refl(const Context& ctx, const Term& t);
Derivation d_eq_subst(const Context& ctx, const Term& t, const Term& s, const Formula& tmpl,
                      const std::string& hole);
Derivation d_exists_left(Derivation premise, const Context& binder);
Derivation d_exists_right(Derivation premise, const Context& binder);
Derivation d_weaken(Derivation premise, const Context& to);
Derivation d_frobenius(const Context& ctx, const Formula& ante, size_t i);
Derivation d_or_intro(const Context& ctx, const std::vector<Formula>& disjuncts, size_t i);

// Derived combinators.
Derivation d_refl_under(const Context& ctx, const Formula& ante, const Term& t);  // Γ ⊢ t=t
Derivation d_sym(Derivation eq);                          // Γ ⊢ a=b  gives  Γ ⊢ b=a
Derivation d_trans(Derivation ab, Derivation bc);         // Γ ⊢ a=b, Γ ⊢ b=c give Γ ⊢ a=c
// Γ ⊢ θ[t/v] and Γ ⊢ t=s give Γ ⊢ θ[s/v].
Derivation d_rewrite(Derivation body, Derivation eq, const Formula& tmpl, const std::string& hole);
// Γ ⊢ each selected conjunct of Γ (projection to a sub-conjunction).
Derivation d_project(const Context& ctx, const Formula& conj, const std::vector<size_t>& keep);
// Γ ⊢ target, when each conjunct of target is (α-equal to) a conjunct of Γ or t=t.
Derivation d_conj_align(const Context& ctx, const Formula& gamma, const Formula& target);
// body[w] ⊢ ∃binder.body; w maps every binder variable (identity or fresh-binder instantiation).
Derivation d_exists_intro(const Context& ctx, const Formula& ex, const VarMap& w);
// φ ⊢_{ctx∪b̄} ψ gives ∃b̄φ ⊢_ctx ∃b̄ψ.
Derivation d_exists_mono(Derivation premise, const Context& binder);
// ⋀parts ⊢ ∃(all binders)(⋀ stripped parts): iterated Frobenius.
Derivation d_conj_pull(const Context& ctx, const std::vector<Formula>& parts);
// Rewrites cur's consequent into `want` one differing variable position at a
// time; var_eq(from, to) must produce a derivation of Γ ⊢ from = to.
Derivation d_rewrite_to(const Context& ctx, Derivation cur, const Formula& want,
                        const std::function<Derivation(const std::string&, const std::string&)>& var_eq);

// Prenexing with a checkable backward derivation over the empty theory:
// backward concludes  ∃bound.(⋀matrix) ⊢_ctx φ. Matrix variables are padded
// with reflexivity so every bound variable occurs in some atom.
struct PrenexDeriv {
  Context bound;
  HornFormula matrix;
  Derivation backward;
};
PrenexDeriv prenex_deriv(const Formula& phi, const Context& ctx);

// ---------------------------------------------------------------------------
// Abstraction of constants (occurrence-based)

struct Abstraction {
  Context fresh;                                  // ȳ
  std::map<std::string, std::string> assignment;  // y -> constant
  Derivation derivation;
};

// T must not mention any constant of C; d must check against T.
Abstraction abstract_constants(const Derivation& d, const std::set<std::string>& constants,
                               const Theory& t);

bool mentions_constants(const Formula& f, const std::set<std::string>& constants);

namespace detail {
// Test hook: rebuilds d with each constant occurrence (pre-order id) replaced
// by the variable of its class; no ∼ merging. Candidates from partitions
// other than the abstraction's own need not check.
int count_constant_occurrences(const Derivation& d, const std::set<std::string>& constants);
Derivation abstract_with_partition(const Derivation& d, const std::set<std::string>& constants,
                                   const std::vector<int>& class_of, Context* fresh_out,
                                   std::map<std::string, std::string>* assignment_out);
}  // namespace detail

// ---------------------------------------------------------------------------
// Diagram derivations

// Requires A ⊨ φ(ā) (NotSatisfied otherwise); emits ⊤ ⊢ φ(c_ā) over Diag(A).
Derivation derive_from_diagram(const Structure& a, const Formula& phi, const ElemAssignment& abar,
                               const DiagramResult& diag);

// T ∪ Diag(A), with diagram axioms renamed when they clash with T's.
Theory combine_with_diagram(const Theory& t, const DiagramResult& diag);

struct DiagramElimination {
  Formula chi;                                 // χ(ȳ) over Σ
  Derivation proof;                            // χ(ȳ) ∧ φ(x̄,ȳ) ⊢_T ψ(x̄,ȳ)
  std::map<std::string, int> chi_witness;      // w -> element of A  (A ⊨ χ(ā) evidence)
};

// `pattern` is the root sequent with ȳ in place of the diagram constants of ā;
// substituting c_ā for ȳ in pattern must give d's root.
DiagramElimination eliminate_diagram_constants(const Derivation& d, const Structure& a,
                                               const Theory& t, const DiagramResult& diag,
                                               const Sequent& pattern, const Context& ybar,
                                               const ElemAssignment& abar);

// ---------------------------------------------------------------------------
// Text format (line oriented, explicit child indices; see README for the BNF)

std::string print_derivation(const Derivation& d);
Derivation parse_derivation(const std::string& text, const Signature& sig,
                            const std::string& file = "<derivation>");

}  // namespace chasekit
