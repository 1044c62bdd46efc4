#include <sstream>

#include "arraymc/parser.hpp"

namespace arraymc {

namespace {

std::string term_str(const Term& t) { return t.str(); }

std::string atom_str(const Atom& a, bool pos) {
  switch (a.kind) {
    case AtomKind::Eq:
      return term_str(a.args[0]) + (pos ? " = " : " != ") + term_str(a.args[1]);
    case AtomKind::Lt: {
      std::string s = term_str(a.args[0]) + " < " + term_str(a.args[1]);
      return pos ? s : "!(" + s + ")";
    }
    case AtomKind::Le: {
      std::string s = term_str(a.args[0]) + " <= " + term_str(a.args[1]);
      return pos ? s : "!(" + s + ")";
    }
    case AtomKind::IdxPred: {
      std::string s = a.pred + "(";
      for (size_t i = 0; i < a.args.size(); ++i) s += (i ? ", " : "") + term_str(a.args[i]);
      s += ")";
      return pos ? s : "!" + s;
    }
  }
  return "?";
}

std::string fmla(const Formula& f, bool parens) {
  switch (f.kind()) {
    case Formula::Kind::True: return "true";
    case Formula::Kind::False: return "false";
    case Formula::Kind::Lit: return atom_str(f.literal().atom, f.literal().pos);
    case Formula::Kind::Not: return "!(" + fmla(f.kids()[0], false) + ")";
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::string op = f.kind() == Formula::Kind::And ? " & " : " | ";
      std::string s;
      for (size_t i = 0; i < f.kids().size(); ++i) {
        bool kid_parens = f.kids()[i].kind() == Formula::Kind::And ||
                          f.kids()[i].kind() == Formula::Kind::Or;
        s += (i ? op : "") + fmla(f.kids()[i], kid_parens);
      }
      return parens ? "(" + s + ")" : s;
    }
  }
  return "?";
}

std::string vars_str(const std::vector<Term>& vars) {
  std::string s;
  for (const auto& v : vars) s += " " + v.name();
  return s;
}

}  // namespace

std::string print_formula(const Formula& f) { return fmla(f, false); }

std::string print_spec(const SystemSpec& spec) {
  std::ostringstream os;
  os << "system " << spec.name << "\n";
  os << "index-theory " << spec.sig.index->name() << "\n";
  for (const auto& [name, th] : spec.sig.elems) {
    os << "elem " << name << " = ";
    switch (th->kind()) {
      case ElemTheory::Kind::Enumerated: {
        os << "enum {";
        const auto& ms = th->members();
        for (size_t i = 0; i < ms.size(); ++i) os << (i ? "," : "") << ms[i];
        os << "}";
        break;
      }
      case ElemTheory::Kind::Rational: os << "rational"; break;
      case ElemTheory::Kind::Boolean: os << "bool"; break;
    }
    os << "\n";
  }
  for (const auto& a : spec.sig.arrays) os << "array " << a.name << " : " << a.elem_sort << "\n";
  os << "init forall" << vars_str(spec.init.vars) << " . " << print_formula(spec.init.matrix)
     << "\n";
  for (const auto& t : spec.transitions) {
    os << "transition " << t.name << " exists" << vars_str(t.vars) << "\n";
    os << "  guard " << print_formula(t.guard) << "\n";
    for (const auto& [arr, fn] : t.updates) {
      os << "  update " << arr << "[" << fn->univ_param.name() << "] case ";
      bool first = true;
      for (const auto& b : fn->branches) {
        if (!first) os << " ; ";
        first = false;
        os << print_formula(b.guard) << " -> " << b.value.str();
      }
      if (fn->else_value) {
        if (!first) os << " ; ";
        os << "else -> " << fn->else_value->str();
      }
      os << "\n";
    }
  }
  os << "unsafe exists" << vars_str(spec.unsafe.vars) << " . " << print_formula(spec.unsafe.matrix)
     << "\n";
  for (const auto& s : spec.suggested_invariants)
    os << "suggest_invariant exists" << vars_str(s.vars) << " . " << print_formula(s.matrix)
       << "\n";
  return os.str();
}

namespace {

bool formula_eq(const Formula& a, const Formula& b) { return a.compare(b) == 0; }

bool case_eq(const CaseFunction& a, const CaseFunction& b) {
  if (a.array != b.array || !(a.univ_param == b.univ_param)) return false;
  if (a.branches.size() != b.branches.size()) return false;
  for (size_t i = 0; i < a.branches.size(); ++i) {
    if (!formula_eq(a.branches[i].guard, b.branches[i].guard)) return false;
    if (!(a.branches[i].value == b.branches[i].value)) return false;
  }
  if (a.else_value.has_value() != b.else_value.has_value()) return false;
  if (a.else_value && !(*a.else_value == *b.else_value)) return false;
  return true;
}

}  // namespace

bool spec_equal(const SystemSpec& a, const SystemSpec& b) {
  if (a.name != b.name) return false;
  if (a.sig.index->kind() != b.sig.index->kind() || a.sig.index->origin() != b.sig.index->origin())
    return false;
  if (a.sig.elems.size() != b.sig.elems.size()) return false;
  for (const auto& [name, th] : a.sig.elems) {
    auto it = b.sig.elems.find(name);
    if (it == b.sig.elems.end()) return false;
    if (th->kind() != it->second->kind() || th->members() != it->second->members()) return false;
  }
  if (a.sig.arrays.size() != b.sig.arrays.size()) return false;
  for (size_t i = 0; i < a.sig.arrays.size(); ++i)
    if (a.sig.arrays[i].name != b.sig.arrays[i].name ||
        a.sig.arrays[i].elem_sort != b.sig.arrays[i].elem_sort)
      return false;
  auto quant_eq = [](const std::vector<Term>& x, const std::vector<Term>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (!(x[i] == y[i])) return false;
    return true;
  };
  if (!quant_eq(a.init.vars, b.init.vars) || !formula_eq(a.init.matrix, b.init.matrix))
    return false;
  if (!quant_eq(a.unsafe.vars, b.unsafe.vars) || !formula_eq(a.unsafe.matrix, b.unsafe.matrix))
    return false;
  if (a.transitions.size() != b.transitions.size()) return false;
  for (size_t i = 0; i < a.transitions.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (x.name != y.name || !quant_eq(x.vars, y.vars) || !formula_eq(x.guard, y.guard))
      return false;
    if (x.updates.size() != y.updates.size()) return false;
    for (const auto& [arr, fn] : x.updates) {
      auto it = y.updates.find(arr);
      if (it == y.updates.end() || !case_eq(*fn, *it->second)) return false;
    }
  }
  if (a.suggested_invariants.size() != b.suggested_invariants.size()) return false;
  for (size_t i = 0; i < a.suggested_invariants.size(); ++i)
    if (!quant_eq(a.suggested_invariants[i].vars, b.suggested_invariants[i].vars) ||
        !formula_eq(a.suggested_invariants[i].matrix, b.suggested_invariants[i].matrix))
      return false;
  return true;
}

}  // namespace arraymc
