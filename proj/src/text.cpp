#include "chasekit/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chasekit {

// ---------------------------------------------------------------------------
// Printing

std::string print_term(const Term& t) {
  if (t.is_var()) return t.head();
  std::string s = t.head();
  if (t.args().empty()) return s;  // constants print bare
  s += "(";
  for (size_t i = 0; i < t.args().size(); ++i) {
    if (i) s += ",";
    s += print_term(t.args()[i]);
  }
  s += ")";
  return s;
}

std::string print_atom(const Atom& a) {
  if (a.is_eq()) return print_term(a.lhs()) + " = " + print_term(a.rhs());
  std::string s = a.rel;
  if (a.args.empty()) return s;
  s += "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += print_term(a.args[i]);
  }
  s += ")";
  return s;
}

namespace {

std::string print_conjunct(const Formula& f) {
  // parenthesize an exists inside a conjunction
  if (f.kind() == Formula::Kind::exists) return "(" + print_formula(f) + ")";
  return print_formula(f);
}

}  // namespace

std::string print_formula(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return print_atom(f.as_atom());
    case Formula::Kind::conj: {
      if (f.parts().empty()) return "true";
      std::string s;
      for (size_t i = 0; i < f.parts().size(); ++i) {
        if (i) s += " & ";
        s += print_conjunct(f.parts()[i]);
      }
      return s;
    }
    case Formula::Kind::exists: {
      std::string s = "exists";
      for (auto& v : f.bound()) s += " " + v;
      s += ". " + print_formula(f.body());
      return s;
    }
  }
  return "";
}

std::string print_sequent(const Sequent& s) {
  std::string out = print_formula(s.ante) + " |-[";
  for (size_t i = 0; i < s.ctx.size(); ++i) {
    if (i) out += ",";
    out += s.ctx[i];
  }
  out += "] ";
  for (size_t i = 0; i < s.cons.size(); ++i) {
    if (i) out += " | ";
    out += print_formula(s.cons[i]);
  }
  return out;
}

std::string print_theory(const Theory& t) {
  std::ostringstream os;
  for (auto& [r, ar] : t.sig->rels) os << "rel " << r << "/" << ar << "\n";
  for (auto& [f, ar] : t.sig->funs) os << "fun " << f << "/" << ar << "\n";
  std::vector<std::pair<std::string, const Sequent*>> axs;
  for (auto& [name, s] : t.axioms) axs.emplace_back(name, &s);
  std::sort(axs.begin(), axs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [name, s] : axs) os << "axiom " << name << ": " << print_sequent(*s) << "\n";
  return os.str();
}

std::string print_structure(const Structure& a) {
  std::ostringstream os;
  os << "carrier:";
  for (auto& e : a.elems) os << " " << e;
  os << "\n";
  for (auto& [r, ar] : a.sig->rels) {
    auto it = a.rels.find(r);
    bool empty = it == a.rels.end() || it->second.empty();
    os << "rel " << r;
    if (empty) os << "/" << ar;  // arity survives the round trip
    os << ":";
    if (!empty) {
      for (auto& t : it->second) {
        os << " (";
        for (size_t i = 0; i < t.size(); ++i) {
          if (i) os << ",";
          os << a.elems[t[i]];
        }
        os << ")";
      }
    }
    os << "\n";
  }
  for (auto& [f, ar] : a.sig->funs) {
    auto it = a.funs.find(f);
    bool empty = it == a.funs.end() || it->second.empty();
    os << "fun " << f;
    if (empty) os << "/" << ar;
    os << ":";
    if (!empty) {
      for (auto& [args, val] : it->second) {
        os << " ";
        if (args.size() == 1) {
          os << a.elems[args[0]];
        } else {
          os << "(";
          for (size_t i = 0; i < args.size(); ++i) {
            if (i) os << ",";
            os << a.elems[args[i]];
          }
          os << ")";
        }
        os << "->" << a.elems[val];
      }
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind { ident, punct, end };
  Kind kind;
  std::string text;
  int line, col;
};

struct Lexer {
  std::string src, file;
  size_t pos = 0;
  int line = 1, col = 1;
  Token cur;

  Lexer(std::string s, std::string f) : src(std::move(s)), file(std::move(f)) { advance(); }

  [[noreturn]] void fail(const std::string& msg, const Token& at) {
    throw ParseError(file, at.line, at.col, msg);
  }

  void bump(char c) {
    ++pos;
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }

  void skip_space_and_comments(bool stop_at_newline) {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') bump(src[pos]);
      } else if (c == '\n' && stop_at_newline) {
        return;
      } else if (isspace((unsigned char)c)) {
        bump(c);
      } else {
        return;
      }
    }
  }

  static bool ident_start(char c) { return isalnum((unsigned char)c) || c == '_'; }
  static bool ident_char(char c) { return isalnum((unsigned char)c) || c == '_' || c == '\''; }

  void advance(bool stop_at_newline = false) {
    skip_space_and_comments(stop_at_newline);
    cur.line = line;
    cur.col = col;
    if (pos >= src.size() || (stop_at_newline && src[pos] == '\n')) {
      cur.kind = Token::Kind::end;
      cur.text.clear();
      return;
    }
    char c = src[pos];
    if (ident_start(c)) {
      std::string s;
      while (pos < src.size() && ident_char(src[pos])) {
        s += src[pos];
        bump(src[pos]);
      }
      cur.kind = Token::Kind::ident;
      cur.text = s;
      return;
    }
    // multi-char puncts first
    static const char* puncts[] = {"|-[", "->", ":=", "::"};
    for (auto* p : puncts) {
      size_t n = strlen(p);
      if (src.compare(pos, n, p) == 0) {
        for (size_t i = 0; i < n; ++i) bump(src[pos]);
        cur.kind = Token::Kind::punct;
        cur.text = p;
        return;
      }
    }
    bump(c);
    cur.kind = Token::Kind::punct;
    cur.text = std::string(1, c);
  }

  bool is_punct(const std::string& p) const {
    return cur.kind == Token::Kind::punct && cur.text == p;
  }
  bool is_ident(const std::string& s) const {
    return cur.kind == Token::Kind::ident && cur.text == s;
  }
  void expect_punct(const std::string& p, bool stop_at_newline = false) {
    if (!is_punct(p)) fail("expected '" + p + "'", cur);
    advance(stop_at_newline);
  }
  std::string expect_ident(const char* what, bool stop_at_newline = false) {
    if (cur.kind != Token::Kind::ident) fail(std::string("expected ") + what, cur);
    std::string s = cur.text;
    advance(stop_at_newline);
    return s;
  }
};

// ---------------------------------------------------------------------------
// Formula / sequent parsing

struct FormulaParser {
  Lexer& lx;
  const Signature& sig;

  Term parse_term() {
    Token at = lx.cur;
    std::string name = lx.expect_ident("term");
    if (lx.is_punct("(") && sig.has_fun(name)) {
      lx.advance();
      std::vector<Term> args;
      if (!lx.is_punct(")")) {
        for (;;) {
          args.push_back(parse_term());
          if (lx.is_punct(",")) {
            lx.advance();
            continue;
          }
          break;
        }
      }
      lx.expect_punct(")");
      if ((int)args.size() != sig.fun_arity(name))
        lx.fail("arity mismatch for function " + name, at);
      return Term::app(name, std::move(args));
    }
    if (sig.has_fun(name)) {
      if (sig.fun_arity(name) != 0) lx.fail("function " + name + " needs arguments", at);
      return Term::app(name, {});
    }
    if (sig.has_rel(name)) lx.fail("relation symbol used as a term: " + name, at);
    return Term::var(name);
  }

  Formula parse_atom_or_group() {
    if (lx.is_punct("(")) {
      lx.advance();
      Formula f = parse_regular();
      lx.expect_punct(")");
      return f;
    }
    Token at = lx.cur;
    if (lx.is_ident("true")) {
      lx.advance();
      return Formula::top();
    }
    if (lx.is_ident("exists")) return parse_exists();
    if (lx.cur.kind == Token::Kind::ident && sig.has_rel(lx.cur.text)) {
      std::string r = lx.cur.text;
      lx.advance();
      std::vector<Term> args;
      if (lx.is_punct("(")) {
        lx.advance();
        if (!lx.is_punct(")")) {
          for (;;) {
            args.push_back(parse_term());
            if (lx.is_punct(",")) {
              lx.advance();
              continue;
            }
            break;
          }
        }
        lx.expect_punct(")");
      }
      if ((int)args.size() != sig.rel_arity(r)) lx.fail("arity mismatch for relation " + r, at);
      return Formula::atom(Atom::relation(r, std::move(args)));
    }
    Term lhs = parse_term();
    if (!lx.is_punct("=")) lx.fail("expected '=' after term", lx.cur);
    lx.advance();
    Term rhs = parse_term();
    return Formula::atom(Atom::equality(std::move(lhs), std::move(rhs)));
  }

  Formula parse_exists() {
    lx.advance();  // 'exists'
    std::vector<std::string> vars;
    while (lx.cur.kind == Token::Kind::ident && !lx.is_punct(".")) {
      vars.push_back(lx.cur.text);
      lx.advance();
      if (lx.is_punct(".")) break;
    }
    lx.expect_punct(".");
    Formula body = parse_conj();
    Token at = lx.cur;
    try {
      return Formula::exists(Context(vars), body);
    } catch (const Error& e) {
      lx.fail(e.what(), at);
    }
  }

  Formula parse_conj() {
    std::vector<Formula> parts;
    parts.push_back(parse_atom_or_group());
    while (lx.is_punct("&")) {
      lx.advance();
      parts.push_back(parse_atom_or_group());
    }
    return Formula::conj(std::move(parts));
  }

  // one regular formula: optional exists-prefix over a conjunction
  Formula parse_regular() {
    if (lx.is_ident("exists")) return parse_exists();
    return parse_conj();
  }

  Sequent parse_sequent() {
    Formula ante = parse_regular();
    if (!lx.is_punct("|-[")) lx.fail("expected '|-['", lx.cur);
    lx.advance();
    std::vector<std::string> ctx_vars;
    if (!lx.is_punct("]")) {
      for (;;) {
        ctx_vars.push_back(lx.expect_ident("context variable"));
        if (lx.is_punct(",")) {
          lx.advance();
          continue;
        }
        break;
      }
    }
    lx.expect_punct("]");
    std::vector<Formula> cons;
    cons.push_back(parse_regular());
    while (lx.is_punct("|")) {
      lx.advance();
      cons.push_back(parse_regular());
    }
    Sequent s;
    Token at = lx.cur;
    try {
      s.ctx = Context(ctx_vars);
    } catch (const Error& e) {
      lx.fail(e.what(), at);
    }
    s.ante = std::move(ante);
    s.cons = std::move(cons);
    return s;
  }
};

void check_scoped_or_fail(Lexer& lx, const Formula& f, const Context& ctx, const Signature& sig,
                          const Token& at) {
  try {
    check_formula(f, ctx, sig);
  } catch (const Error& e) {
    lx.fail(e.what(), at);
  }
}

}  // namespace

Formula parse_formula(const std::string& text, const Signature& sig, const std::string& file) {
  Lexer lx(text, file);
  FormulaParser p{lx, sig};
  Token at = lx.cur;
  Formula f = p.parse_regular();
  if (lx.cur.kind != Token::Kind::end) lx.fail("trailing input after formula", lx.cur);
  check_scoped_or_fail(lx, f, Context(free_vars_ordered(f)), sig, at);
  return f;
}

Term parse_term(const std::string& text, const Signature& sig, const std::string& file) {
  Lexer lx(text, file);
  FormulaParser p{lx, sig};
  Term t = p.parse_term();
  if (lx.cur.kind != Token::Kind::end) lx.fail("trailing input after term", lx.cur);
  return t;
}

Sequent parse_sequent(const std::string& text, const Signature& sig, const std::string& file) {
  Lexer lx(text, file);
  FormulaParser p{lx, sig};
  Token at = lx.cur;
  Sequent s = p.parse_sequent();
  if (lx.cur.kind != Token::Kind::end) lx.fail("trailing input after sequent", lx.cur);
  try {
    check_sequent(s, sig);
  } catch (const Error& e) {
    lx.fail(e.what(), at);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Theory files

Theory parse_theory(const std::string& text, const std::string& file) {
  Lexer lx(text, file);
  std::map<std::string, int> funs, rels;
  Theory t;
  bool in_axioms = false;
  std::vector<std::pair<std::string, Sequent>> axioms;
  // first pass collects declarations, then axioms are parsed against the
  // complete signature (declarations must precede axioms)
  while (lx.cur.kind != Token::Kind::end) {
    Token at = lx.cur;
    std::string kw = lx.expect_ident("declaration or axiom");
    if (kw == "rel" || kw == "fun") {
      if (in_axioms) lx.fail("declarations must precede axioms", at);
      std::string name = lx.expect_ident("symbol name");
      lx.expect_punct("/");
      std::string ar = lx.expect_ident("arity");
      int arity = 0;
      try {
        arity = std::stoi(ar);
      } catch (...) {
        lx.fail("invalid arity: " + ar, at);
      }
      auto& m = (kw == "rel") ? rels : funs;
      if (m.count(name) || (kw == "rel" ? funs.count(name) : rels.count(name)))
        lx.fail("duplicate symbol: " + name, at);
      m[name] = arity;
    } else if (kw == "axiom") {
      if (!in_axioms) {
        in_axioms = true;
        t.sig = make_signature(funs, rels);
      }
      std::string name = lx.expect_ident("axiom name");
      lx.expect_punct(":");
      FormulaParser p{lx, *t.sig};
      Sequent s = p.parse_sequent();
      try {
        check_sequent(s, *t.sig);
      } catch (const Error& e) {
        lx.fail(e.what(), at);
      }
      for (auto& [n, _] : axioms)
        if (n == name) lx.fail("duplicate axiom name: " + name, at);
      axioms.emplace_back(name, std::move(s));
    } else {
      lx.fail("expected 'rel', 'fun' or 'axiom', got '" + kw + "'", at);
    }
  }
  if (!in_axioms) t.sig = make_signature(funs, rels);
  t.axioms = std::move(axioms);
  return t;
}

// ---------------------------------------------------------------------------
// Structure files

namespace {

// "SATURATED"/"FUEL-EXHAUSTED" trailer lines from `chase` output are ignored
// so that printed results re-parse.
bool is_status_line(const std::string& line) {
  return line.rfind("SATURATED", 0) == 0 || line.rfind("FUEL-EXHAUSTED", 0) == 0;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

Structure parse_structure(const std::string& text, const std::string& file) {
  Structure a;
  std::map<std::string, int> rels, funs;
  std::map<std::string, std::set<std::vector<int>>> rel_tabs;
  std::map<std::string, std::map<std::vector<int>, int>> fun_tabs;
  std::vector<std::string> elems;
  std::map<std::string, int> index;
  bool saw_carrier = false;

  auto lines = split_lines(text);
  for (int ln = 0; ln < (int)lines.size(); ++ln) {
    std::string line = lines[ln];
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line)
      if (!isspace((unsigned char)c)) blank = false;
    if (blank || is_status_line(line)) continue;

    Lexer lx(line, file);
    lx.line = ln + 1;  // per-line lexing; keep real line numbers in diagnostics
    lx.cur.line = ln + 1;
    Token at = lx.cur;
    std::string kw = lx.expect_ident("carrier/rel/fun");
    auto elem_index = [&](const std::string& id, const Token& where) {
      auto it = index.find(id);
      if (it == index.end()) lx.fail("unknown element: " + id, where);
      return it->second;
    };
    if (kw == "carrier") {
      lx.expect_punct(":");
      if (saw_carrier) lx.fail("duplicate carrier line", at);
      saw_carrier = true;
      while (lx.cur.kind == Token::Kind::ident) {
        if (index.count(lx.cur.text)) lx.fail("duplicate element: " + lx.cur.text, lx.cur);
        index[lx.cur.text] = (int)elems.size();
        elems.push_back(lx.cur.text);
        lx.advance();
      }
      if (lx.cur.kind != Token::Kind::end) lx.fail("unexpected input after carrier", lx.cur);
    } else if (kw == "rel" || kw == "fun") {
      if (!saw_carrier) lx.fail("carrier line must come first", at);
      std::string name = lx.expect_ident("symbol name");
      int declared_arity = -1;
      if (lx.is_punct("/")) {
        lx.advance();
        Token at2 = lx.cur;
        try {
          declared_arity = std::stoi(lx.expect_ident("arity"));
        } catch (const ParseError&) {
          throw;
        } catch (...) {
          lx.fail("invalid arity", at2);
        }
      }
      lx.expect_punct(":");
      if (kw == "rel") {
        auto& tab = rel_tabs[name];
        int arity = declared_arity;
        while (lx.cur.kind != Token::Kind::end) {
          Token tup_at = lx.cur;
          std::vector<int> tup;
          if (lx.is_punct("(")) {
            lx.advance();
            if (!lx.is_punct(")")) {
              for (;;) {
                tup.push_back(elem_index(lx.expect_ident("element"), lx.cur));
                if (lx.is_punct(",")) {
                  lx.advance();
                  continue;
                }
                break;
              }
            }
            lx.expect_punct(")");
          } else {
            tup.push_back(elem_index(lx.expect_ident("element"), lx.cur));
          }
          if (arity < 0) arity = (int)tup.size();
          if ((int)tup.size() != arity) lx.fail("inconsistent tuple arity for " + name, tup_at);
          tab.insert(tup);
        }
        if (arity < 0) lx.fail("empty relation table needs an arity: rel " + name + "/N:", at);
        if (rels.count(name) && rels[name] != arity) lx.fail("redeclared arity for " + name, at);
        rels[name] = arity;
      } else {
        auto& tab = fun_tabs[name];
        int arity = declared_arity;
        while (lx.cur.kind != Token::Kind::end) {
          Token ent_at = lx.cur;
          std::vector<int> args;
          if (lx.is_punct("(")) {
            lx.advance();
            if (!lx.is_punct(")")) {
              for (;;) {
                args.push_back(elem_index(lx.expect_ident("element"), lx.cur));
                if (lx.is_punct(",")) {
                  lx.advance();
                  continue;
                }
                break;
              }
            }
            lx.expect_punct(")");
          } else {
            args.push_back(elem_index(lx.expect_ident("element"), lx.cur));
          }
          if (!lx.is_punct("->")) lx.fail("expected '->' in function entry", lx.cur);
          lx.advance();
          int val = elem_index(lx.expect_ident("element"), lx.cur);
          if (arity < 0) arity = (int)args.size();
          if ((int)args.size() != arity) lx.fail("inconsistent entry arity for " + name, ent_at);
          if (tab.count(args)) lx.fail("duplicate function entry for " + name, ent_at);
          tab[args] = val;
        }
        if (arity < 0) lx.fail("empty function table needs an arity: fun " + name + "/N:", at);
        if (funs.count(name) && funs[name] != arity) lx.fail("redeclared arity for " + name, at);
        funs[name] = arity;
      }
    } else {
      lx.fail("expected 'carrier', 'rel' or 'fun'", at);
    }
  }
  if (!saw_carrier) throw ParseError(file, 1, 1, "missing carrier line");
  a.sig = make_signature(funs, rels);
  a.elems = std::move(elems);
  a.rels = std::move(rel_tabs);
  a.funs = std::move(fun_tabs);
  try {
    check_structure(a);
  } catch (const Error& e) {
    throw ParseError(file, 1, 1, e.what());
  }
  return a;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace chasekit
