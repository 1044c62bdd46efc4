#include "arraymc/parser.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <set>
#include <sstream>

namespace arraymc {

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind;
  std::string text;
  Rational num;
  int line = 0, col = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;

  int cur() const { return pos_ < s_.size() ? static_cast<unsigned char>(s_[pos_]) : -1; }
  void bump() {
    if (cur() == '\n') { line_++; col_ = 1; } else { col_++; }
    pos_++;
  }

  void advance() {
    while (true) {
      while (isspace(cur())) bump();
      if (cur() == '#') {
        while (cur() != -1 && cur() != '\n') bump();
        continue;
      }
      break;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (cur() == -1) {
      tok_ = Token{Token::Kind::End, "", Rational(), line_, col_};
      return;
    }
    if (isalpha(cur()) || cur() == '_') {
      std::string id;
      while (isalnum(cur()) || cur() == '_' || cur() == '-') {
        // '-' inside identifiers serves the theory names (linear-order)
        if (cur() == '-' && !isalpha(pos_ + 1 < s_.size() ? s_[pos_ + 1] : 0)) break;
        id += static_cast<char>(cur());
        bump();
      }
      tok_ = Token{Token::Kind::Ident, id, Rational(), tok_.line, tok_.col};
      return;
    }
    if (isdigit(cur())) {
      long long num = 0;
      std::string text;
      while (isdigit(cur())) {
        text += static_cast<char>(cur());
        num = num * 10 + (cur() - '0');
        bump();
      }
      long long den = 1;
      if (cur() == '/' && pos_ + 1 < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
        bump();
        den = 0;
        std::string dtxt;
        while (isdigit(cur())) {
          dtxt += static_cast<char>(cur());
          den = den * 10 + (cur() - '0');
          bump();
        }
        text += "/" + dtxt;
      }
      tok_ = Token{Token::Kind::Number, text, Rational(num, den), tok_.line, tok_.col};
      return;
    }
    // punctuation, including two-char tokens
    static const char* two[] = {"!=", "<=", "->"};
    for (const char* t : two) {
      if (s_.compare(pos_, 2, t) == 0) {
        tok_ = Token{Token::Kind::Punct, t, Rational(), tok_.line, tok_.col};
        bump();
        bump();
        return;
      }
    }
    std::string p(1, static_cast<char>(cur()));
    bump();
    tok_ = Token{Token::Kind::Punct, p, Rational(), tok_.line, tok_.col};
  }
};

// raw term before sort resolution
struct RawTerm {
  enum class Kind { Ident, Number, Read };
  Kind kind;
  std::string name;
  Rational num;
  std::shared_ptr<RawTerm> index;
  int line = 0, col = 0;
};

struct RawAtom {
  enum class Op { Eq, Ne, Lt, Le, Pred, True, False };
  Op op;
  std::string pred;
  std::vector<RawTerm> args;
  int line = 0, col = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lx_(text) {}

  SystemSpec parse() {
    bool saw_system = false, saw_theory = false, saw_init = false, saw_unsafe = false;
    while (lx_.peek().kind != Token::Kind::End) {
      Token t = expect_ident("statement keyword");
      if (t.text == "system") {
        spec_.name = expect_ident("system name").text;
        saw_system = true;
      } else if (t.text == "index-theory") {
        parse_index_theory();
        saw_theory = true;
      } else if (t.text == "elem") {
        parse_elem();
      } else if (t.text == "array") {
        parse_array();
      } else if (t.text == "init") {
        require(saw_theory, t, "index-theory must precede init");
        spec_.init = parse_forall();
        saw_init = true;
      } else if (t.text == "transition") {
        require(saw_theory, t, "index-theory must precede transitions");
        parse_transition();
      } else if (t.text == "unsafe") {
        require(saw_theory, t, "index-theory must precede unsafe");
        spec_.unsafe = parse_exists();
        saw_unsafe = true;
      } else if (t.text == "suggest_invariant") {
        spec_.suggested_invariants.push_back(parse_exists());
      } else {
        fail(t, "unknown statement '" + t.text + "'");
      }
    }
    if (!saw_system) throw SpecError("missing 'system' declaration");
    if (!saw_theory) throw SpecError("missing 'index-theory' declaration");
    if (!saw_init) throw SpecError("missing 'init' formula");
    if (!saw_unsafe) throw SpecError("missing 'unsafe' formula");
    validate_with_engine();
    return std::move(spec_);
  }

 private:
  Lexer lx_;
  SystemSpec spec_;

  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw SpecError(t.line, t.col, msg);
  }
  void require(bool ok, const Token& t, const std::string& msg) {
    if (!ok) fail(t, msg);
  }

  Token expect_ident(const std::string& what) {
    Token t = lx_.next();
    if (t.kind != Token::Kind::Ident) fail(t, "expected " + what);
    return t;
  }
  void expect_punct(const std::string& p) {
    Token t = lx_.next();
    if (t.kind != Token::Kind::Punct || t.text != p) fail(t, "expected '" + p + "'");
  }
  bool accept_punct(const std::string& p) {
    if (lx_.peek().kind == Token::Kind::Punct && lx_.peek().text == p) {
      lx_.next();
      return true;
    }
    return false;
  }
  bool accept_ident(const std::string& id) {
    if (lx_.peek().kind == Token::Kind::Ident && lx_.peek().text == id) {
      lx_.next();
      return true;
    }
    return false;
  }

  void parse_index_theory() {
    Token t = expect_ident("index theory name");
    if (t.text == "equality")
      spec_.sig.index = std::make_shared<IndexTheory>(IndexTheory::Kind::PureEquality);
    else if (t.text == "linear-order")
      spec_.sig.index = std::make_shared<IndexTheory>(IndexTheory::Kind::LinearOrder);
    else if (t.text == "successor")
      spec_.sig.index = std::make_shared<IndexTheory>(IndexTheory::Kind::SuccessorGraph, false);
    else if (t.text == "successor-origin")
      spec_.sig.index = std::make_shared<IndexTheory>(IndexTheory::Kind::SuccessorGraph, true);
    else
      fail(t, "unknown index theory '" + t.text + "'");
  }

  void parse_elem() {
    Token name = expect_ident("element sort name");
    expect_punct("=");
    Token kind = lx_.next();
    if (kind.kind == Token::Kind::Ident && kind.text == "enum") {
      expect_punct("{");
      std::vector<std::string> members;
      while (true) {
        Token m = lx_.next();
        if (m.kind == Token::Kind::Ident || m.kind == Token::Kind::Number)
          members.push_back(m.text);
        else
          fail(m, "expected enum member");
        if (accept_punct(",")) continue;
        expect_punct("}");
        break;
      }
      spec_.sig.elems[name.text] =
          std::make_shared<ElemTheory>(ElemTheory::enumerated(name.text, members));
    } else if (kind.kind == Token::Kind::Ident && kind.text == "rational") {
      spec_.sig.elems[name.text] = std::make_shared<ElemTheory>(ElemTheory::rational(name.text));
    } else if (kind.kind == Token::Kind::Ident && kind.text == "bool") {
      spec_.sig.elems[name.text] = std::make_shared<ElemTheory>(ElemTheory::boolean(name.text));
    } else {
      fail(kind, "expected enum {...}, rational, or bool");
    }
  }

  void parse_array() {
    Token name = expect_ident("array name");
    expect_punct(":");
    Token sort = expect_ident("element sort");
    if (!spec_.sig.elems.count(sort.text)) fail(sort, "unknown element sort " + sort.text);
    if (spec_.sig.find_array(name.text)) fail(name, "duplicate array " + name.text);
    spec_.sig.arrays.push_back(ArrayDecl{name.text, sort.text});
  }

  std::vector<Term> parse_var_list() {
    std::vector<Term> vars;
    while (lx_.peek().kind == Token::Kind::Ident && lx_.peek().text != "guard") {
      if (lx_.peek().text == "true" || lx_.peek().text == "false") break;
      vars.push_back(Term::index_var(lx_.next().text));
      if (lx_.peek().kind == Token::Kind::Punct && lx_.peek().text == ".") break;
    }
    if (vars.empty()) throw SpecError(lx_.peek().line, lx_.peek().col, "expected variable list");
    return vars;
  }

  ForallI parse_forall() {
    Token f = expect_ident("forall");
    if (f.text != "forall") fail(f, "expected 'forall'");
    std::vector<Term> vars = parse_var_list();
    expect_punct(".");
    Formula m = parse_formula(vars);
    check_reads_at(m, vars, "init");
    return ForallI{vars, m};
  }

  ExistsI parse_exists() {
    Token f = expect_ident("exists");
    if (f.text != "exists") fail(f, "expected 'exists'");
    std::vector<Term> vars = parse_var_list();
    expect_punct(".");
    Formula m = parse_formula(vars);
    check_reads_at(m, vars, "formula");
    return ExistsI{vars, m};
  }

  void parse_transition() {
    TransitionRule tr;
    tr.name = expect_ident("transition name").text;
    Token e = expect_ident("exists");
    if (e.text != "exists") fail(e, "expected 'exists'");
    while (lx_.peek().kind == Token::Kind::Ident && lx_.peek().text != "guard")
      tr.vars.push_back(Term::index_var(lx_.next().text));
    Token g = expect_ident("guard");
    if (g.text != "guard") fail(g, "expected 'guard'");
    tr.guard = parse_formula(tr.vars);
    check_reads_at(tr.guard, tr.vars, "transition guard");

    std::string univ_name;
    while (accept_ident("update")) {
      Token arr = expect_ident("array name");
      const ArrayDecl* ad = spec_.sig.find_array(arr.text);
      if (!ad) fail(arr, "unknown array " + arr.text);
      if (tr.updates.count(arr.text)) fail(arr, "duplicate update for " + arr.text);
      expect_punct("[");
      Token j = expect_ident("universal index variable");
      expect_punct("]");
      if (univ_name.empty()) univ_name = j.text;
      else if (univ_name != j.text)
        fail(j, "updates of one transition must share the universal index variable");
      for (const auto& v : tr.vars)
        if (v.name() == j.text) fail(j, "universal variable shadows a transition variable");
      Token c = expect_ident("case");
      if (c.text != "case") fail(c, "expected 'case'");

      auto fn = std::make_shared<CaseFunction>();
      fn->array = arr.text;
      fn->exist_params = tr.vars;
      fn->univ_param = Term::index_var(j.text);
      std::vector<Term> scope = tr.vars;
      scope.push_back(fn->univ_param);
      while (true) {
        if (accept_ident("else")) {
          expect_punct("->");
          fn->else_value = parse_term_of_sort(scope, ad->elem_sort);
          break;
        }
        Formula guard = parse_formula(scope);
        expect_punct("->");
        Term value = parse_term_of_sort(scope, ad->elem_sort);
        fn->branches.push_back(CaseFunction::Branch{guard, value});
        if (accept_punct(";")) continue;
        break;
      }
      for (const auto& b : fn->branches) check_reads_at(b.guard, scope, "case guard");
      tr.updates[arr.text] = fn;
    }
    if (tr.updates.empty())
      throw SpecError("transition " + tr.name + " has no update clause");
    spec_.transitions.push_back(std::move(tr));
  }

  // ---- formulas -------------------------------------------------------------

  Formula parse_formula(const std::vector<Term>& scope) { return parse_or(scope); }

  Formula parse_or(const std::vector<Term>& scope) {
    std::vector<Formula> parts{parse_and(scope)};
    while (accept_punct("|")) parts.push_back(parse_and(scope));
    return Formula::mk_or(std::move(parts));
  }
  Formula parse_and(const std::vector<Term>& scope) {
    std::vector<Formula> parts{parse_unary(scope)};
    while (accept_punct("&")) parts.push_back(parse_unary(scope));
    return Formula::mk_and(std::move(parts));
  }
  Formula parse_unary(const std::vector<Term>& scope) {
    if (accept_punct("!")) return Formula::mk_not(parse_unary(scope));
    if (accept_punct("(")) {
      Formula f = parse_or(scope);
      expect_punct(")");
      return f;
    }
    return parse_atom(scope);
  }

  RawTerm parse_raw_term() {
    Token t = lx_.next();
    RawTerm r;
    r.line = t.line;
    r.col = t.col;
    if (t.kind == Token::Kind::Number) {
      r.kind = RawTerm::Kind::Number;
      r.num = t.num;
      r.name = t.text;
      return r;
    }
    if (t.kind != Token::Kind::Ident) fail(t, "expected term");
    if (accept_punct("[")) {
      r.kind = RawTerm::Kind::Read;
      r.name = t.text;
      r.index = std::make_shared<RawTerm>(parse_raw_term());
      expect_punct("]");
      return r;
    }
    r.kind = RawTerm::Kind::Ident;
    r.name = t.text;
    return r;
  }

  Formula parse_atom(const std::vector<Term>& scope) {
    if (lx_.peek().kind == Token::Kind::Ident) {
      if (lx_.peek().text == "true") { lx_.next(); return Formula::mk_true(); }
      if (lx_.peek().text == "false") { lx_.next(); return Formula::mk_false(); }
    }
    RawTerm lhs = parse_raw_term();
    // relation application S(x, y)
    if (lhs.kind == RawTerm::Kind::Ident && accept_punct("(")) {
      std::vector<Term> args;
      args.push_back(resolve_index(parse_raw_term(), scope));
      while (accept_punct(",")) args.push_back(resolve_index(parse_raw_term(), scope));
      expect_punct(")");
      if (spec_.sig.index->kind() != IndexTheory::Kind::SuccessorGraph || lhs.name != "S")
        throw SpecError(lhs.line, lhs.col, "unknown index relation " + lhs.name);
      if (args.size() != 2) throw SpecError(lhs.line, lhs.col, "S takes two arguments");
      return Formula::lit(Atom::idx_pred("S", args));
    }
    Token op = lx_.next();
    if (op.kind != Token::Kind::Punct ||
        (op.text != "=" && op.text != "!=" && op.text != "<" && op.text != "<="))
      fail(op, "expected comparison operator");
    RawTerm rhs = parse_raw_term();
    auto [a, b] = resolve_pair(lhs, rhs, scope, op);
    if (op.text == "=") return Formula::lit(Atom::eq(a, b));
    if (op.text == "!=") return Formula::lit(Atom::eq(a, b), false);
    bool index_side = a.is_index();
    if (index_side && spec_.sig.index->kind() != IndexTheory::Kind::LinearOrder)
      fail(op, "order atoms on indexes need the linear-order theory");
    if (!index_side) {
      const ElemTheory& th = spec_.sig.elem_theory(a.elem_sort());
      if (th.kind() != ElemTheory::Kind::Rational)
        fail(op, "order atoms need a rational element sort");
    }
    if (op.text == "<") return Formula::lit(Atom::lt(a, b));
    return Formula::lit(Atom::le(a, b));
  }

  // ---- sort resolution --------------------------------------------------------

  bool in_scope(const std::string& name, const std::vector<Term>& scope) const {
    for (const auto& v : scope)
      if (v.name() == name) return true;
    return false;
  }

  bool is_index_const(const std::string& name) const {
    for (const auto& c : spec_.sig.index->constants())
      if (c.name() == name) return true;
    return false;
  }

  Term resolve_index(const RawTerm& r, const std::vector<Term>& scope) {
    if (r.kind == RawTerm::Kind::Ident) {
      if (in_scope(r.name, scope)) return Term::index_var(r.name);
      if (is_index_const(r.name)) return Term::index_const(r.name);
      throw SpecError(r.line, r.col, "unbound index variable " + r.name);
    }
    throw SpecError(r.line, r.col, "expected an index term");
  }

  // Sorts an identifier/number can take as an element constant.
  std::vector<std::string> const_sorts(const RawTerm& r) const {
    std::vector<std::string> out;
    for (const auto& [sort, th] : spec_.sig.elems) {
      if (th->kind() == ElemTheory::Kind::Rational) {
        if (r.kind == RawTerm::Kind::Number) out.push_back(sort);
      } else {
        const auto& ms = th->members();
        if (std::find(ms.begin(), ms.end(), r.name) != ms.end()) out.push_back(sort);
      }
    }
    return out;
  }

  Term resolve(const RawTerm& r, const std::vector<Term>& scope,
               const std::string& expected_sort) {
    switch (r.kind) {
      case RawTerm::Kind::Read: {
        const ArrayDecl* ad = spec_.sig.find_array(r.name);
        if (!ad) throw SpecError(r.line, r.col, "unknown array " + r.name);
        Term ix = resolve_index(*r.index, scope);
        return Term::array_read(ad->name, ad->elem_sort, ix);
      }
      case RawTerm::Kind::Ident: {
        if (in_scope(r.name, scope)) return Term::index_var(r.name);
        if (is_index_const(r.name)) return Term::index_const(r.name);
        auto sorts = const_sorts(r);
        if (!expected_sort.empty()) {
          if (std::find(sorts.begin(), sorts.end(), expected_sort) == sorts.end())
            throw SpecError(r.line, r.col,
                            r.name + " is not a constant of sort " + expected_sort);
          return Term::elem_const(r.name, expected_sort);
        }
        if (sorts.size() == 1) return Term::elem_const(r.name, sorts[0]);
        throw SpecError(r.line, r.col, sorts.empty()
                                           ? "unknown identifier " + r.name
                                           : "ambiguous constant " + r.name);
      }
      case RawTerm::Kind::Number: {
        auto sorts = const_sorts(r);
        std::string sort = expected_sort;
        if (sort.empty()) {
          if (sorts.size() == 1) sort = sorts[0];
          else
            throw SpecError(r.line, r.col, sorts.empty() ? "numeral fits no element sort"
                                                         : "ambiguous numeral");
        } else if (std::find(sorts.begin(), sorts.end(), sort) == sorts.end()) {
          throw SpecError(r.line, r.col, "numeral not valid at sort " + sort);
        }
        const ElemTheory& th = spec_.sig.elem_theory(sort);
        if (th.kind() == ElemTheory::Kind::Rational) {
          spec_.sig.numerals.push_back(r.num);
          return Term::rat_const(r.num, sort);
        }
        return Term::elem_const(r.name, sort);
      }
    }
    throw SpecError(r.line, r.col, "unresolvable term");
  }

  // Sort of a raw term when self-evident (reads, bound variables).
  std::string self_sort(const RawTerm& r, const std::vector<Term>& scope, bool& is_idx) {
    is_idx = false;
    if (r.kind == RawTerm::Kind::Read) {
      const ArrayDecl* ad = spec_.sig.find_array(r.name);
      if (!ad) throw SpecError(r.line, r.col, "unknown array " + r.name);
      return ad->elem_sort;
    }
    if (r.kind == RawTerm::Kind::Ident &&
        (in_scope(r.name, scope) || is_index_const(r.name))) {
      is_idx = true;
      return "";
    }
    return "";
  }

  std::pair<Term, Term> resolve_pair(const RawTerm& lhs, const RawTerm& rhs,
                                     const std::vector<Term>& scope, const Token& op) {
    bool li = false, ri = false;
    std::string ls = self_sort(lhs, scope, li);
    std::string rs = self_sort(rhs, scope, ri);
    if (li || ri) {
      Term a = resolve_index(li ? lhs : rhs, scope);
      Term b = resolve_index(li ? rhs : lhs, scope);
      return li ? std::make_pair(a, b) : std::make_pair(b, a);
    }
    std::string expected = !ls.empty() ? ls : rs;
    Term a = resolve(lhs, scope, !ls.empty() ? ls : expected);
    Term b = resolve(rhs, scope, a.is_index() ? "" : a.elem_sort());
    if (a.sort() != b.sort()) fail(op, "sort mismatch in comparison");
    return {a, b};
  }

  Term parse_term_of_sort(const std::vector<Term>& scope, const std::string& sort) {
    RawTerm r = parse_raw_term();
    Term t = resolve(r, scope, sort);
    if (t.is_index() || t.elem_sort() != sort)
      throw SpecError(r.line, r.col, "update value must have sort " + sort);
    return t;
  }

  // Functional form: reads only at the allowed index variables.
  void check_reads_at(const Formula& f, const std::vector<Term>& allowed,
                      const std::string& where) {
    std::vector<Term> reads;
    f.collect_reads(reads);
    for (const auto& rd : reads) {
      const Term& ix = rd.index_arg();
      bool ok = false;
      for (const auto& v : allowed)
        if (ix == v) ok = true;
      if (!ok)
        throw SpecError("read " + rd.str() + " outside the quantified variables in " + where);
    }
  }

  // Partition checks for every case update, via the decision engine.
  void validate_with_engine() {
    SmtEngine engine(spec_.sig);
    for (const auto& tr : spec_.transitions) {
      for (const auto& [arr, fn] : tr.updates) {
        std::vector<Term> scope = fn->exist_params;
        scope.push_back(fn->univ_param);
        // exhaustiveness (an else branch makes it trivial)
        if (!fn->else_value) {
          std::vector<Formula> gs;
          for (const auto& b : fn->branches) gs.push_back(b.guard);
          Sentence s;
          s.evars = scope;
          s.matrix = Formula::mk_not(Formula::mk_or(std::move(gs)));
          if (engine.check_sentence(s).sat)
            throw SpecError("non-exhaustive case partition updating " + arr + " in transition " +
                            tr.name);
        }
        // pairwise inconsistency of the partition pieces
        for (size_t i = 0; i < fn->case_count(); ++i)
          for (size_t j = i + 1; j < fn->case_count(); ++j) {
            Sentence s;
            s.evars = scope;
            s.matrix = Formula::mk_and({fn->partition_guard(i), fn->partition_guard(j)});
            if (engine.check_sentence(s).sat)
              throw SpecError("overlapping case partition updating " + arr + " in transition " +
                              tr.name);
          }
      }
    }
  }
};

}  // namespace

SystemSpec parse_spec(const std::string& text) {
  Parser p(text);
  return p.parse();
}

}  // namespace arraymc
