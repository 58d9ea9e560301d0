#pragma once

// Abstract syntax for signatures, terms, formulas-in-context, sequents and
// theories, plus substitution and fragment classification.
//
// All values are immutable after construction and cheap to copy (shared
// subtrees); they can be shared freely across threads.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chasekit/errors.hpp"

namespace chasekit {

// ---------------------------------------------------------------------------
// Signature

struct Signature {
  std::map<std::string, int> funs;  // name -> arity; 0-ary = constants
  std::map<std::string, int> rels;

  bool relational() const { return funs.empty(); }
  bool has_fun(const std::string& s) const { return funs.count(s) != 0; }
  bool has_rel(const std::string& s) const { return rels.count(s) != 0; }
  int fun_arity(const std::string& s) const;
  int rel_arity(const std::string& s) const;
};

using SigPtr = std::shared_ptr<const Signature>;

SigPtr make_signature(std::map<std::string, int> funs, std::map<std::string, int> rels);

// ---------------------------------------------------------------------------
// Context: ordered sequence of distinct variable names. Order matters for
// tuple indexing and display only; comparison is set-based.

class Context {
 public:
  Context() = default;
  explicit Context(std::vector<std::string> vars);

  const std::vector<std::string>& vars() const { return vars_; }
  size_t size() const { return vars_.size(); }
  bool empty() const { return vars_.empty(); }
  const std::string& operator[](size_t i) const { return vars_[i]; }
  bool contains(const std::string& v) const;
  std::optional<size_t> index_of(const std::string& v) const;

  bool subset_of(const Context& other) const;
  bool set_equals(const Context& other) const;

  // Returns this context extended with the given variables (must be new).
  Context extended(const std::vector<std::string>& more) const;
  // Set union keeping this context's order first.
  Context unioned(const Context& other) const;
  // Set difference, keeping order.
  Context minus(const Context& other) const;

  auto begin() const { return vars_.begin(); }
  auto end() const { return vars_.end(); }

 private:
  std::vector<std::string> vars_;
};

// Deterministic fresh-name supply: prefers the hint, falls back to v0, v1, ...
class FreshNames {
 public:
  FreshNames() = default;
  explicit FreshNames(std::set<std::string> used) : used_(std::move(used)) {}
  void reserve(const std::string& name) { used_.insert(name); }
  void reserve_all(const Context& ctx);
  std::string fresh(const std::string& hint);

 private:
  std::set<std::string> used_;
  int counter_ = 0;
};

// ---------------------------------------------------------------------------
// Terms

class Term {
 public:
  Term();  // the variable "_" (placeholder; not produced by the parser)
  static Term var(const std::string& name);
  static Term app(const std::string& fn, std::vector<Term> args);

  bool is_var() const;
  const std::string& head() const;  // variable name or function symbol
  const std::vector<Term>& args() const;

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) { return a.compare(b) < 0; }
  int compare(const Term& other) const;

 private:
  struct Rep;
  std::shared_ptr<const Rep> rep_;
};

void term_vars(const Term& t, std::vector<std::string>& out);  // first-occurrence order
void check_term(const Term& t, const Context& ctx, const Signature& sig);

// ---------------------------------------------------------------------------
// Atoms: equality or relation instance. ("true" is the empty conjunction at
// the formula level.)

struct Atom {
  enum class Kind { eq, rel };
  Kind kind = Kind::eq;
  std::string rel;          // kind == rel
  std::vector<Term> args;   // rel args, or {lhs, rhs} for eq

  static Atom equality(Term lhs, Term rhs);
  static Atom relation(std::string rel, std::vector<Term> args);

  bool is_eq() const { return kind == Kind::eq; }
  const Term& lhs() const { return args[0]; }
  const Term& rhs() const { return args[1]; }

  friend bool operator==(const Atom& a, const Atom& b);
  friend bool operator!=(const Atom& a, const Atom& b) { return !(a == b); }
  friend bool operator<(const Atom& a, const Atom& b) { return a.compare(b) < 0; }
  int compare(const Atom& other) const;
};

// ---------------------------------------------------------------------------
// Regular formulas: Atom | And(parts) | Exists(bound, body).
//
// Canonical form invariants maintained by the constructors:
//  * And parts are never And themselves (flattened), and never a lone part
//    (a singleton conjunction is identified with its conjunct). Top is the
//    empty And.
//  * Exists never wraps Exists directly (adjacent binders merge) and never
//    binds an empty context.

class Formula {
 public:
  enum class Kind { atom, conj, exists };

  Formula();  // top
  static Formula atom(Atom a);
  static Formula conj(std::vector<Formula> parts);
  static Formula exists(const Context& bound, Formula body);
  static Formula top() { return Formula(); }

  Kind kind() const;
  bool is_top() const;
  const Atom& as_atom() const;
  const std::vector<Formula>& parts() const;  // kind == conj
  const Context& bound() const;               // kind == exists
  const Formula& body() const;                // kind == exists

  // The conjuncts of a conjunction, or {this} for other kinds.
  std::vector<Formula> conjuncts() const;

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  struct Rep;
  std::shared_ptr<const Rep> rep_;
};

// Horn formulas are flat conjunctions of atoms; empty list denotes top.
struct HornFormula {
  std::vector<Atom> atoms;

  Formula to_formula() const;
  bool operator==(const HornFormula& o) const { return atoms == o.atoms; }
};

std::optional<HornFormula> as_horn(const Formula& f);

// ---------------------------------------------------------------------------
// Geometric queries and sequents

struct GeometricQuery {
  std::vector<Formula> disjuncts;  // nonempty
};

struct Sequent {
  Context ctx;
  Formula ante;
  std::vector<Formula> cons;  // >= 1 disjunct; size 1 = regular consequent

  bool regular_consequent() const { return cons.size() == 1; }
  const Formula& cons_formula() const { return cons[0]; }
};

enum class Fragment { horn, regular, geometric, unsupported };

struct Theory {
  SigPtr sig;
  std::vector<std::pair<std::string, Sequent>> axioms;  // declaration order

  const Sequent* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

// ---------------------------------------------------------------------------
// Operations

using VarMap = std::map<std::string, Term>;

std::vector<std::string> free_vars_ordered(const Formula& f);  // first occurrence
std::set<std::string> free_vars(const Formula& f);
bool well_scoped(const Formula& f, const Context& ctx);
void check_formula(const Formula& f, const Context& ctx, const Signature& sig);
void check_sequent(const Sequent& s, const Signature& sig);
void check_theory(const Theory& t);

// Capture-free simultaneous substitution. `assignment` must be total on the
// free variables of `f` (UnboundVariable otherwise); every image term must be
// well-scoped in `target`.
Formula substitute(const Formula& f, const VarMap& assignment, const Context& target);
Term substitute(const Term& t, const VarMap& assignment);
Atom substitute(const Atom& a, const VarMap& assignment);
Sequent substitute(const Sequent& s, const VarMap& assignment, const Context& target);

// The same formula viewed in a larger context (NotASubcontext if from ⊄ to).
Formula weaken(const Formula& f, const Context& from, const Context& to);

Fragment classify_fragment(const Formula& f);
Fragment classify_fragment(const Sequent& s);

bool alpha_equal(const Formula& a, const Formula& b);
bool alpha_equal(const Sequent& a, const Sequent& b);

// Relation symbols with multiplicity, sorted; substitution invariant.
std::vector<std::string> relation_multiset(const Formula& f);

}  // namespace chasekit
