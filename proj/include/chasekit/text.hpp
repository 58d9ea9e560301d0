#pragma once

// Text grammar shared by all CLI commands.
//
//   formula:    exists y1 y2. P(x) & R(x,y1) & y1 = y2      ('true' is top)
//   sequent:    P(x) |-[x] exists y. R(x,y)                  (disjuncts with '|')
//   theory:     rel R/2 / fun f/1 declarations, then 'axiom <name>: <sequent>'
//   structure:  carrier: a b c / rel R: (a,b) (b,c) / fun f: a->b b->c
//
// '#' starts a comment. Output is deterministic and re-parses under the same
// grammar.

#include <string>
#include <vector>

#include "chasekit/semantics.hpp"
#include "chasekit/syntax.hpp"

namespace chasekit {

std::string print_term(const Term& t);
std::string print_atom(const Atom& a);
std::string print_formula(const Formula& f);
std::string print_sequent(const Sequent& s);
std::string print_theory(const Theory& t);      // declarations + axioms, sorted
std::string print_structure(const Structure& a);

// Standalone formulas: identifiers that are not declared symbols are
// variables.
Formula parse_formula(const std::string& text, const Signature& sig,
                      const std::string& file = "<formula>");
Term parse_term(const std::string& text, const Signature& sig,
                const std::string& file = "<term>");
Sequent parse_sequent(const std::string& text, const Signature& sig,
                      const std::string& file = "<sequent>");
Theory parse_theory(const std::string& text, const std::string& file = "<theory>");
Structure parse_structure(const std::string& text, const std::string& file = "<structure>");

std::string read_file(const std::string& path);

}  // namespace chasekit
