#include "arraymc/term.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <stdexcept>

#include "arraymc/formula.hpp"

namespace arraymc {

struct Term::Node {
  TermKind kind;
  std::string name;
  std::string sort;
  std::optional<Rational> num;
  Term child;
  std::shared_ptr<const CaseFunction> fn;
};

Term detail_make_term(std::shared_ptr<const Term::Node> n) { return Term(std::move(n)); }

static Term make(TermKind k, std::string name, std::string sort, std::optional<Rational> num,
                 Term child, std::shared_ptr<const CaseFunction> fn) {
  auto n = std::make_shared<Term::Node>();
  n->kind = k;
  n->name = std::move(name);
  n->sort = std::move(sort);
  n->num = std::move(num);
  n->child = std::move(child);
  n->fn = std::move(fn);
  return detail_make_term(std::move(n));
}

Term Term::index_var(const std::string& name) {
  return make(TermKind::IndexVar, name, "", {}, {}, nullptr);
}
Term Term::index_const(const std::string& name) {
  return make(TermKind::IndexConst, name, "", {}, {}, nullptr);
}
Term Term::elem_var(const std::string& name, const std::string& sort) {
  return make(TermKind::ElemVar, name, sort, {}, {}, nullptr);
}
Term Term::elem_const(const std::string& symbol, const std::string& sort) {
  return make(TermKind::ElemConst, symbol, sort, {}, {}, nullptr);
}
Term Term::rat_const(const Rational& value, const std::string& sort) {
  return make(TermKind::ElemConst, value.str(), sort, value, {}, nullptr);
}
Term Term::array_read(const std::string& array, const std::string& elem_sort, const Term& idx) {
  if (!idx.is_index()) throw std::logic_error("array read with non-index argument");
  return make(TermKind::ArrayRead, array, elem_sort, {}, idx, nullptr);
}
Term Term::case_app(std::shared_ptr<const CaseFunction> fn, const Term& idx_arg) {
  std::string arr = fn->array;
  return make(TermKind::CaseApp, arr, "", {}, idx_arg, std::move(fn));
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::name() const { return node_->name; }
const std::string& Term::elem_sort() const { return node_->sort; }
const std::optional<Rational>& Term::numeral() const { return node_->num; }
const Term& Term::index_arg() const { return node_->child; }
const std::shared_ptr<const CaseFunction>& Term::case_fn() const { return node_->fn; }

Sort Term::sort() const {
  switch (node_->kind) {
    case TermKind::IndexVar:
    case TermKind::IndexConst:
      return Sort::idx();
    default:
      return Sort::of_elem(node_->sort);
  }
}

int Term::compare(const Term& o) const {
  if (node_ == o.node_) return 0;
  if (!node_ || !o.node_) return node_ ? 1 : -1;
  if (node_->kind != o.node_->kind) return node_->kind < o.node_->kind ? -1 : 1;
  if (int c = node_->name.compare(o.node_->name)) return c < 0 ? -1 : 1;
  if (int c = node_->sort.compare(o.node_->sort)) return c < 0 ? -1 : 1;
  switch (node_->kind) {
    case TermKind::ArrayRead:
      return node_->child.compare(o.node_->child);
    case TermKind::CaseApp: {
      if (node_->fn != o.node_->fn) return node_->fn < o.node_->fn ? -1 : 1;
      return node_->child.compare(o.node_->child);
    }
    default:
      return 0;
  }
}

size_t Term::hash() const {
  size_t h = std::hash<int>()(static_cast<int>(node_->kind));
  h = h * 31 + std::hash<std::string>()(node_->name);
  h = h * 31 + std::hash<std::string>()(node_->sort);
  if (node_->child.valid()) h = h * 31 + node_->child.hash();
  return h;
}

std::string Term::str() const {
  switch (node_->kind) {
    case TermKind::IndexVar:
    case TermKind::IndexConst:
    case TermKind::ElemVar:
    case TermKind::ElemConst:
      return node_->name;
    case TermKind::ArrayRead:
      return node_->name + "[" + node_->child.str() + "]";
    case TermKind::CaseApp:
      return node_->name + "'[" + node_->child.str() + "]";
  }
  return "?";
}

Term Term::substitute(const std::map<std::string, Term>& m) const {
  switch (node_->kind) {
    case TermKind::IndexVar: {
      auto it = m.find(node_->name);
      if (it == m.end()) return *this;
      if (!it->second.is_index()) throw std::logic_error("sort mismatch in substitution");
      return it->second;
    }
    case TermKind::ElemVar: {
      auto it = m.find(node_->name);
      if (it == m.end()) return *this;
      if (it->second.sort() != sort()) throw std::logic_error("sort mismatch in substitution");
      return it->second;
    }
    case TermKind::IndexConst:
    case TermKind::ElemConst:
      return *this;
    case TermKind::ArrayRead: {
      Term c = node_->child.substitute(m);
      if (c == node_->child) return *this;
      return array_read(node_->name, node_->sort, c);
    }
    case TermKind::CaseApp: {
      // the universal parameter is bound inside the function body
      assert(m.find(node_->fn->univ_param.name()) == m.end());
      Term c = node_->child.substitute(m);
      bool body_touched = false;
      for (const auto& p : node_->fn->exist_params)
        if (m.count(p.name())) body_touched = true;
      if (!body_touched) {
        if (c == node_->child) return *this;
        return case_app(node_->fn, c);
      }
      auto fn2 = std::make_shared<CaseFunction>(*node_->fn);
      for (auto& p : fn2->exist_params) p = p.substitute(m);
      for (auto& b : fn2->branches) {
        b.guard = b.guard.substitute(m);
        b.value = b.value.substitute(m);
      }
      if (fn2->else_value) fn2->else_value = fn2->else_value->substitute(m);
      return case_app(std::move(fn2), c);
    }
  }
  return *this;
}

bool Term::contains_case_app() const {
  if (node_->kind == TermKind::CaseApp) return true;
  if (node_->child.valid()) return node_->child.contains_case_app();
  return false;
}

void Term::collect_vars(std::vector<Term>& out) const {
  auto add = [&out](const Term& t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  switch (node_->kind) {
    case TermKind::IndexVar:
    case TermKind::ElemVar:
      add(*this);
      break;
    case TermKind::ArrayRead:
      node_->child.collect_vars(out);
      break;
    case TermKind::CaseApp:
      node_->child.collect_vars(out);
      for (const auto& p : node_->fn->exist_params) p.collect_vars(out);
      break;
    default:
      break;
  }
}

void Term::collect_reads(std::vector<Term>& out) const {
  if (node_->kind == TermKind::ArrayRead) {
    if (std::find(out.begin(), out.end(), *this) == out.end()) out.push_back(*this);
  }
  if (node_->child.valid()) node_->child.collect_reads(out);
}

Atom Atom::eq(Term a, Term b) {
  if (b.compare(a) < 0) std::swap(a, b);
  return Atom{AtomKind::Eq, "", {std::move(a), std::move(b)}};
}

bool Atom::is_index_atom() const {
  if (kind == AtomKind::IdxPred) return true;
  return args[0].is_index();
}

int Atom::compare(const Atom& o) const {
  if (kind != o.kind) return kind < o.kind ? -1 : 1;
  if (int c = pred.compare(o.pred)) return c < 0 ? -1 : 1;
  if (args.size() != o.args.size()) return args.size() < o.args.size() ? -1 : 1;
  for (size_t i = 0; i < args.size(); ++i)
    if (int c = args[i].compare(o.args[i])) return c;
  return 0;
}

std::string Atom::str() const {
  switch (kind) {
    case AtomKind::Eq: return args[0].str() + " = " + args[1].str();
    case AtomKind::Lt: return args[0].str() + " < " + args[1].str();
    case AtomKind::Le: return args[0].str() + " <= " + args[1].str();
    case AtomKind::IdxPred: {
      std::string s = pred + "(";
      for (size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + args[i].str();
      return s + ")";
    }
  }
  return "?";
}

std::string Literal::str() const {
  if (pos) return atom.str();
  if (atom.kind == AtomKind::Eq) return atom.args[0].str() + " != " + atom.args[1].str();
  return "!" + atom.str();
}

}  // namespace arraymc
