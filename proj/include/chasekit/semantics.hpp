#pragma once

// Finite structures, Tarski evaluation, homomorphisms, representing
// structures, diagrams, and the e/q translation between Σ-structures and
// E-structures.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chasekit/syntax.hpp"

namespace chasekit {

// Finite structure: carrier elements are opaque ids, indexed 0..n-1.
// Function tables must be total on carrier^arity.
struct Structure {
  SigPtr sig;
  std::vector<std::string> elems;  // index -> id
  std::map<std::string, std::set<std::vector<int>>> rels;
  std::map<std::string, std::map<std::vector<int>, int>> funs;

  size_t size() const { return elems.size(); }
  std::optional<int> index_of(const std::string& id) const;
  bool has_tuple(const std::string& rel, const std::vector<int>& tup) const;

  bool operator==(const Structure& o) const {
    return elems == o.elems && rels == o.rels && funs == o.funs;
  }
};

// Validates arities, carrier membership and totality of function tables.
void check_structure(const Structure& a);

struct Homomorphism {
  std::shared_ptr<const Structure> source, target;
  std::vector<int> map;  // source index -> target index
};

// Verifies preservation of relation tuples and commutation with functions.
Homomorphism make_homomorphism(std::shared_ptr<const Structure> src,
                               std::shared_ptr<const Structure> tgt, std::vector<int> map);
bool is_homomorphism(const Structure& src, const Structure& tgt, const std::vector<int>& map);

// ---------------------------------------------------------------------------
// Evaluation

using ElemAssignment = std::map<std::string, int>;

int eval_term(const Structure& a, const Term& t, const ElemAssignment& asg);
bool evaluate(const Structure& a, const Formula& f, const ElemAssignment& asg);
bool evaluate(const Structure& a, const Atom& at, const ElemAssignment& asg);

// Least (lexicographic, element index order) assignment of `bound` under which
// `matrix` holds, extending `asg`; nullopt if none.
std::optional<ElemAssignment> least_witness(const Structure& a, const Context& bound,
                                            const Formula& matrix, const ElemAssignment& asg);

struct QueryResult {
  bool ok = false;
  int disjunct = -1;          // least satisfied disjunct, 1-based
  ElemAssignment witnesses;   // witnesses for that disjunct's existential prefix
};
QueryResult evaluate_query(const Structure& a, const GeometricQuery& q, const ElemAssignment& asg);

// True iff every assignment satisfying the antecedent satisfies the
// consequent. Enumerates carrier^|ctx|: fine at desk scale (carrier <= ~8).
bool validates(const Structure& a, const Sequent& s);
bool validates_theory(const Structure& a, const Theory& t);

// ---------------------------------------------------------------------------
// Representing structures  ⟨x̄|φ⟩

struct RepresentedStructure {
  Structure structure;
  std::map<std::string, int> canonical;  // context variable -> element index
};

// Requires a relational signature and Horn φ. Carrier = ctx / ~ where ~ is
// generated by φ's equalities; tables contain exactly the Horn-derivable atoms.
RepresentedStructure representing_structure(const HornFormula& phi, const Context& ctx, SigPtr sig);

// ---------------------------------------------------------------------------
// Diagrams

struct DiagramResult {
  SigPtr sig;                                // Σ + one constant per element
  Theory theory;                             // ⊤ ⊢ α(ā) per atomic fact
  std::vector<std::string> constant_of;      // element index -> constant name
};
DiagramResult diagram(const Structure& a);

// ---------------------------------------------------------------------------
// e / q translation (equality elimination, semantic side)

// Extends A by interpreting the fresh binary predicate `e_name` as equality.
Structure e_expand(const Structure& a, const std::string& e_name);

// Quotients B by the congruence E; requires B |= E_Σ (NotAnEStructure
// otherwise). The result keeps the least representative's id per class.
Structure q_quotient(const Structure& b, const std::string& e_name);

// The carrier map underlying q (element -> class representative index).
std::vector<int> q_quotient_map(const Structure& b, const std::string& e_name);

// ---------------------------------------------------------------------------
// Homomorphism search

// Deterministic lexicographic backtracking; returns h with h∘g = f if any.
std::optional<Homomorphism> hom_extend_search(const Homomorphism& f, const Homomorphism& g,
                                              bool injective = false);

// Any homomorphism A -> B (search from the empty partial map).
std::optional<std::vector<int>> find_homomorphism(const Structure& a, const Structure& b,
                                                  bool injective = false);

// Isomorphism via injective hom search both ways; verified bijective with
// homomorphic inverse before returning.
std::optional<std::vector<int>> find_isomorphism(const Structure& a, const Structure& b);

}  // namespace chasekit
