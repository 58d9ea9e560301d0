#include <functional>
#include <sstream>

#include "chasekit/proofs.hpp"
#include "chasekit/text.hpp"

// Line-oriented derivation files with explicit child indices, so proofs are
// diffable and goldens stay stable. See the README for the grammar.

namespace chasekit {

namespace {

std::string print_ctx_list(const Context& ctx) {
  std::string s = "[";
  for (size_t i = 0; i < ctx.size(); ++i) {
    if (i) s += ",";
    s += ctx[i];
  }
  return s + "]";
}

void print_node(const Derivation& d, std::ostringstream& os, int& next_id,
                std::function<int(const Derivation&)> rec) {
  std::vector<int> kids;
  for (auto& p : d.premises) kids.push_back(rec(p));
  int id = next_id++;
  os << "node " << id << " " << rule_name(d.rule);
  switch (d.rule) {
    case Rule::theory_axiom:
      os << " axiom=" << d.axiom;
      break;
    case Rule::and_elim:
    case Rule::frobenius:
    case Rule::or_intro:
      os << " i=" << d.index;
      break;
    case Rule::eq_refl:
      os << " t=" << print_term(d.term_a);
      break;
    case Rule::eq_subst:
      os << " v=" << d.hole << " t=" << print_term(d.term_a) << " s=" << print_term(d.term_b);
      break;
    case Rule::substitution: {
      os << " ctx=" << print_ctx_list(d.subst_ctx) << " map=";
      bool first = true;
      for (auto& [v, t] : d.subst) {
        if (!first) os << ";";
        first = false;
        os << v << ":=" << print_term(t);
      }
      break;
    }
    case Rule::exists_left:
    case Rule::exists_right:
      os << " vars=" << print_ctx_list(d.binder);
      break;
    default:
      break;
  }
  if (!kids.empty()) {
    os << " children=";
    for (size_t i = 0; i < kids.size(); ++i) {
      if (i) os << ",";
      os << kids[i];
    }
  }
  os << " :: " << print_sequent(d.conclusion);
  if (d.rule == Rule::eq_subst) os << " :: tpl " << print_formula(d.tmpl);
  os << "\n";
}

}  // namespace

std::string print_derivation(const Derivation& d) {
  std::ostringstream os;
  os << "deriv v1\n";
  int next_id = 0;
  std::function<int(const Derivation&)> rec = [&](const Derivation& n) -> int {
    print_node(n, os, next_id, rec);
    return next_id - 1;
  };
  int root = rec(d);
  os << "root " << root << "\n";
  return os.str();
}

namespace {

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  for (;;) {
    size_t at = s.find(sep, pos);
    if (at == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, at - pos));
    pos = at + sep.size();
  }
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && isspace((unsigned char)s[b])) ++b;
  while (e > b && isspace((unsigned char)s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> parse_bracket_list(const std::string& s, const std::string& file,
                                            int line) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw ParseError(file, line, 1, "expected [a,b,...]: " + s);
  std::string inner = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  if (trim(inner).empty()) return out;
  for (auto& part : split(inner, ",")) out.push_back(trim(part));
  return out;
}

}  // namespace

Derivation parse_derivation(const std::string& text, const Signature& sig,
                            const std::string& file) {
  std::vector<Derivation> nodes;
  std::vector<bool> used;
  int root = -1;
  bool saw_header = false;
  int lineno = 0;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "deriv v1") throw ParseError(file, lineno, 1, "expected 'deriv v1' header");
      saw_header = true;
      continue;
    }
    if (line.rfind("root", 0) == 0) {
      root = std::stoi(trim(line.substr(4)));
      continue;
    }
    auto segs = split(line, " :: ");
    if (segs.size() < 2) throw ParseError(file, lineno, 1, "expected ' :: <sequent>'");
    std::istringstream head(segs[0]);
    std::string kw;
    head >> kw;
    if (kw != "node") throw ParseError(file, lineno, 1, "expected 'node'");
    int id = -1;
    head >> id;
    if (id != (int)nodes.size())
      throw ParseError(file, lineno, 1, "node ids must be consecutive from 0");
    std::string rname;
    head >> rname;
    Derivation d;
    bool known = false;
    for (Rule r : {Rule::theory_axiom, Rule::identity, Rule::cut, Rule::substitution,
                   Rule::and_intro, Rule::and_elim, Rule::top_intro, Rule::eq_refl,
                   Rule::eq_subst, Rule::exists_left, Rule::exists_right, Rule::weaken,
                   Rule::frobenius, Rule::or_intro}) {
      if (rname == rule_name(r)) {
        d.rule = r;
        known = true;
        break;
      }
    }
    if (!known) throw ParseError(file, lineno, 1, "unknown rule: " + rname);
    std::vector<int> kids;
    std::string field;
    while (head >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos)
        throw ParseError(file, lineno, 1, "expected key=value, got: " + field);
      std::string key = field.substr(0, eq);
      std::string val = field.substr(eq + 1);
      // map values may contain spaces never, but := splits below
      if (key == "axiom") {
        d.axiom = val;
      } else if (key == "i") {
        d.index = (size_t)std::stoul(val);
      } else if (key == "t") {
        d.term_a = parse_term(val, sig, file);
      } else if (key == "s") {
        d.term_b = parse_term(val, sig, file);
      } else if (key == "v") {
        d.hole = val;
      } else if (key == "ctx") {
        d.subst_ctx = Context(parse_bracket_list(val, file, lineno));
      } else if (key == "vars") {
        d.binder = Context(parse_bracket_list(val, file, lineno));
      } else if (key == "map") {
        if (!val.empty()) {
          for (auto& entry : split(val, ";")) {
            auto parts = split(entry, ":=");
            if (parts.size() != 2)
              throw ParseError(file, lineno, 1, "bad map entry: " + entry);
            d.subst[trim(parts[0])] = parse_term(trim(parts[1]), sig, file);
          }
        }
      } else if (key == "children") {
        for (auto& c : split(val, ",")) kids.push_back(std::stoi(trim(c)));
      } else {
        throw ParseError(file, lineno, 1, "unknown field: " + key);
      }
    }
    d.conclusion = parse_sequent(trim(segs[1]), sig, file);
    if (segs.size() > 2) {
      std::string tplseg = trim(segs[2]);
      if (tplseg.rfind("tpl ", 0) != 0)
        throw ParseError(file, lineno, 1, "expected 'tpl <formula>' segment");
      d.tmpl = parse_formula(tplseg.substr(4), sig, file);
    }
    for (int k : kids) {
      if (k < 0 || k >= (int)nodes.size())
        throw ParseError(file, lineno, 1, "child index out of range: " + std::to_string(k));
      if (used[k]) throw ParseError(file, lineno, 1, "child used twice: " + std::to_string(k));
      used[k] = true;
      d.premises.push_back(nodes[k]);
    }
    nodes.push_back(std::move(d));
    used.push_back(false);
  }
  if (nodes.empty()) throw ParseError(file, lineno, 1, "no nodes in derivation file");
  if (root < 0) root = (int)nodes.size() - 1;
  if (root >= (int)nodes.size()) throw ParseError(file, lineno, 1, "root index out of range");
  return nodes[root];
}

}  // namespace chasekit
