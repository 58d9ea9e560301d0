#pragma once

// One-step T-extension, iterated chase with saturation detection and fuel,
// conservativity-witness extraction, the general-signature pipeline, and
// entailment via chased representing structures.

#include <optional>
#include <string>
#include <vector>

#include "chasekit/normalize.hpp"
#include "chasekit/proofs.hpp"
#include "chasekit/semantics.hpp"

namespace chasekit {

// Element provenance for chase-adjoined elements.
struct Birth {
  int level = 0;              // level at which the element appeared (>= 1)
  std::string axiom;          // justification τ
  std::vector<int> args;      // arguments ā (indices at level-1)
  int index = 0;              // j < |ȳ|
};

enum class ChaseStatus { saturated, fuel_exhausted };

struct ChaseTrace {
  NormalTheory theory;
  std::vector<Structure> levels;            // levels[k].elems is a prefix of levels[k+1].elems
  std::vector<std::optional<Birth>> births; // per element index; nullopt for base elements
  struct Firing {
    std::string axiom;
    std::vector<int> args;
  };
  std::vector<std::vector<Firing>> firings;  // per level >= 1, canonical order
  ChaseStatus status = ChaseStatus::saturated;
  int saturation_level = 0;  // meaningful when saturated

  const Structure& final_level() const { return levels.back(); }
};

struct ChaseOptions {
  bool faithful = false;  // re-fire every instance every level (the textbook construction)
  int threads = 1;        // instance evaluation parallelism; output is identical
  // carrier budget: a level that would exceed this reports fuel_exhausted
  // with the trace so far (non-terminating chases grow exponentially)
  size_t max_elements = 256;
};

// Def-faithful single step: adjoins a witness block for every applicable
// instance, regardless of satisfaction. Requires T normal, relational,
// equality-free (PreconditionViolation otherwise).
std::pair<Structure, Homomorphism> one_step(const NormalTheory& t, const Structure& a,
                                            int threads = 1);

// Lean chase: an instance fires only if its consequent is not yet satisfied,
// and at most once overall; levels are simultaneous rounds. Saturated at n
// when level n+1 would add no elements and no tuples.
ChaseTrace chase(const NormalTheory& t, const Structure& a, int fuel, ChaseOptions opts = {});

// ---------------------------------------------------------------------------
// Conservativity witness (per-level descent)

struct WitnessResult {
  Formula psi;          // A ⊨ ψ(ā)
  Derivation proof;     // ψ ⊢_T φ over trace.theory (as a theory)
};

// Requires some trace level to satisfy φ at (the image of) ā;
// NotSatisfiedAtAnyLevel / TraceExhausted otherwise.
WitnessResult conservativity_witness(const ChaseTrace& trace, const Formula& phi,
                                     const std::vector<int>& abar);

// Optional cleanup: drops reflexivity conjuncts, with a bridging derivation
// composed in so the contract still holds.
WitnessResult simplify_witness(const WitnessResult& w, const Context& ctx, const Theory& t);

// ---------------------------------------------------------------------------
// General-signature chase (Thm-style pipeline)

struct GeneralChase {
  Structure model;                 // over the original Σ
  std::vector<int> eta;            // carrier map A -> model
  ChaseStatus status = ChaseStatus::saturated;
  int levels = 0;

  // translation data for witness queries
  bool functions_eliminated = false;
  bool equality_eliminated = false;
  FnElimResult fn;
  std::string e_name;              // when equality was eliminated
  NormalTheory chased_theory;      // the theory the core chase ran on
  ChaseTrace trace;                // relational equality-free trace
};

GeneralChase chase_general(const Theory& t, const Structure& a, int fuel, ChaseOptions opts = {});

struct GeneralWitness {
  Formula psi;         // over the original Σ
  Formula psi_core;    // over the chased signature
  Derivation proof;    // ψ_core ⊢ φ_core over chased_theory
};

// Witness queries against a general chase: φ over Σ true at η(ā).
GeneralWitness general_witness(const GeneralChase& gc, const Formula& phi,
                               const std::vector<int>& abar);

// ---------------------------------------------------------------------------
// Entailment

enum class Verdict { provable, refuted, unknown };

struct EntailsResult {
  Verdict verdict = Verdict::unknown;
  int disjunct = 0;                     // 1-based, when provable
  std::optional<Formula> witness;       // ψ over the chased signature
  std::optional<Derivation> proof;      // ψ ⊢ consequent-core over `theory_used`
  std::optional<Theory> theory_used;    // the normalized theory the proof refers to
  std::optional<Structure> countermodel;  // over the original Σ, when refuted
  int level = -1;                       // level at which the consequent held
};

EntailsResult entails(const Theory& t, const Sequent& sigma, int fuel, ChaseOptions opts = {});

struct SplitResult {
  Verdict verdict = Verdict::unknown;
  int disjunct = 0;  // 1-based
};

// Thin wrapper over entails; on provable re-verifies entails on the chosen
// disjunct alone.
SplitResult disjunction_split(const Theory& t, const Sequent& sigma, int fuel,
                              ChaseOptions opts = {});

}  // namespace chasekit
