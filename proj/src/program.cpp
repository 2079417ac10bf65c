#include <map>
#include <stdexcept>

#include "sepinv/program.hpp"

namespace sepinv {

Expr Expr::var(std::string n) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(n);
  return e;
}

Expr Expr::constant(std::int64_t v) {
  Expr e;
  e.kind = Kind::Const;
  e.value = v;
  return e;
}

Expr Expr::field(Expr base, std::string f) {
  Expr e;
  e.kind = Kind::Field;
  e.name = std::move(f);
  e.sub.push_back(std::move(base));
  return e;
}

Expr Expr::deref(Expr base) {
  Expr e;
  e.kind = Kind::Deref;
  e.sub.push_back(std::move(base));
  return e;
}

Expr Expr::addr_of(Expr field_expr) {
  Expr e;
  e.kind = Kind::AddrOf;
  e.sub.push_back(std::move(field_expr));
  return e;
}

std::string Expr::str() const {
  switch (kind) {
    case Kind::Var: return name;
    case Kind::Const: return std::to_string(value);
    case Kind::Field: {
      const Expr& b = sub[0];
      bool wrap = b.kind == Kind::Deref || b.kind == Kind::AddrOf;
      return (wrap ? "(" + b.str() + ")" : b.str()) + "->" + name;
    }
    case Kind::Deref: return "*" + sub[0].str();
    case Kind::AddrOf: return "&(" + sub[0].str() + ")";
  }
  return {};
}

namespace {

const char* op_text(PureOp op) {
  switch (op) {
    case PureOp::Eq: return "==";
    case PureOp::Neq: return "!=";
    case PureOp::Lt: return "<";
    case PureOp::Gt: return ">";
  }
  return "?";
}

}  // namespace

std::string Cond::str() const {
  if (literal_false) return "false";
  if (atoms.empty()) return "true";
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += " && ";
    out += atoms[i].lhs.str() + " " + op_text(atoms[i].op) + " " + atoms[i].rhs.str();
  }
  return out;
}

Stmt Stmt::assign(Expr lhs, Expr rhs) {
  Stmt s;
  s.kind = Kind::Assign;
  s.lhs = std::move(lhs);
  s.rhs = std::move(rhs);
  return s;
}

Stmt Stmt::seq(std::vector<Stmt> items) {
  Stmt s;
  s.kind = Kind::Seq;
  s.body = std::move(items);
  return s;
}

Stmt Stmt::if_else(Cond c, Stmt then_branch, Stmt else_branch) {
  Stmt s;
  s.kind = Kind::If;
  s.cond = std::move(c);
  s.body = then_branch.items();
  s.else_body = else_branch.items();
  return s;
}

Stmt Stmt::loop(Cond c, Stmt body) {
  Stmt s;
  s.kind = Kind::While;
  s.cond = std::move(c);
  s.body = body.items();
  return s;
}

std::vector<Stmt> Stmt::items() const {
  if (kind == Kind::Seq) return body;
  if (kind == Kind::Skip) return {};
  return {*this};
}

bool Stmt::contains_loop() const {
  if (kind == Kind::While) return true;
  for (const auto& s : body)
    if (s.contains_loop()) return true;
  for (const auto& s : else_body)
    if (s.contains_loop()) return true;
  return false;
}

std::string Stmt::str(int indent) const {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  auto block = [&](const std::vector<Stmt>& items) {
    std::string out = "{\n";
    for (const auto& s : items) out += s.str(indent + 1);
    return out + pad + "}";
  };
  switch (kind) {
    case Kind::Skip: return pad + "skip;\n";
    case Kind::Assign: return pad + lhs.str() + " = " + rhs.str() + ";\n";
    case Kind::Seq: {
      std::string out;
      for (const auto& s : body) out += s.str(indent);
      return out;
    }
    case Kind::If: {
      std::string out = pad + "if (" + cond.str() + ") " + block(body);
      if (!else_body.empty()) out += " else " + block(else_body);
      return out + "\n";
    }
    case Kind::While: return pad + "while (" + cond.str() + ") " + block(body) + "\n";
    case Kind::Call: {
      std::string out = pad + callee + "(";
      for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i].str();
      return out + ");\n";
    }
  }
  return {};
}

bool operator==(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.lhs == b.lhs && a.rhs == b.rhs && a.cond == b.cond && a.body == b.body &&
         a.else_body == b.else_body && a.callee == b.callee && a.args == b.args;
}

namespace {

void flatten_into(const Stmt& s, std::vector<Stmt>& out) {
  switch (s.kind) {
    case Stmt::Kind::Skip:
      return;
    case Stmt::Kind::Seq:
      for (const auto& c : s.body) flatten_into(c, out);
      return;
    case Stmt::Kind::If:
    case Stmt::Kind::While: {
      Stmt copy = s;
      copy.body.clear();
      copy.else_body.clear();
      for (const auto& c : s.body) flatten_into(c, copy.body);
      for (const auto& c : s.else_body) flatten_into(c, copy.else_body);
      out.push_back(std::move(copy));
      return;
    }
    default:
      out.push_back(s);
  }
}

}  // namespace

Stmt flatten(const Stmt& s) {
  std::vector<Stmt> items;
  flatten_into(s, items);
  if (items.empty()) return Stmt::skip();
  if (items.size() == 1) return items.front();
  return Stmt::seq(std::move(items));
}

SplitProgram split_program(const Stmt& body) {
  std::vector<Stmt> items = flatten(body).items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].kind != Stmt::Kind::While) continue;
    SplitProgram out;
    out.before = flatten(Stmt::seq({items.begin(), items.begin() + static_cast<std::ptrdiff_t>(i)}));
    out.cond = items[i].cond;
    out.body = flatten(Stmt::seq(items[i].body));
    out.after = flatten(Stmt::seq({items.begin() + static_cast<std::ptrdiff_t>(i) + 1, items.end()}));
    return out;
  }
  throw std::invalid_argument("no loop found at top level");
}

namespace {

void expr_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Var) out.insert(e.name);
  for (const auto& s : e.sub) expr_vars(s, out);
}

void stmt_vars(const Stmt& s, std::set<std::string>& used, std::set<std::string>& assigned) {
  switch (s.kind) {
    case Stmt::Kind::Assign:
      expr_vars(s.lhs, used);
      expr_vars(s.rhs, used);
      if (s.lhs.kind == Expr::Kind::Var) assigned.insert(s.lhs.name);
      break;
    case Stmt::Kind::Call:
      for (const auto& a : s.args) expr_vars(a, used);
      break;
    case Stmt::Kind::If:
    case Stmt::Kind::While:
      for (const auto& a : s.cond.atoms) {
        expr_vars(a.lhs, used);
        expr_vars(a.rhs, used);
      }
      break;
    default:
      break;
  }
  for (const auto& c : s.body) stmt_vars(c, used, assigned);
  for (const auto& c : s.else_body) stmt_vars(c, used, assigned);
}

Expr rename_expr(const Expr& e, const std::map<std::string, std::string>& names) {
  Expr out = e;
  if (e.kind == Expr::Kind::Var) {
    if (auto it = names.find(e.name); it != names.end()) out.name = it->second;
  }
  for (auto& s : out.sub) s = rename_expr(s, names);
  return out;
}

Stmt rename_stmt(const Stmt& s, const std::map<std::string, std::string>& names) {
  Stmt out = s;
  out.lhs = rename_expr(s.lhs, names);
  out.rhs = rename_expr(s.rhs, names);
  for (auto& a : out.cond.atoms) {
    a.lhs = rename_expr(a.lhs, names);
    a.rhs = rename_expr(a.rhs, names);
  }
  for (auto& a : out.args) a = rename_expr(a, names);
  for (auto& c : out.body) c = rename_stmt(c, names);
  for (auto& c : out.else_body) c = rename_stmt(c, names);
  return out;
}

class Inliner {
 public:
  Inliner(const Program& prog, std::set<std::string> taken) : prog_(prog), taken_(std::move(taken)) {}

  Stmt run(const Stmt& s) {
    if (s.kind == Stmt::Kind::Call) return expand(s);
    Stmt out = s;
    for (auto& c : out.body) c = run(c);
    for (auto& c : out.else_body) c = run(c);
    return out;
  }

 private:
  Stmt expand(const Stmt& call) {
    const Func* f = prog_.find(call.callee);
    if (!f) throw ParseError(call.loc, "unknown function " + call.callee);
    if (std::find(stack_.begin(), stack_.end(), f->name) != stack_.end())
      throw ParseError(call.loc, "recursive call to " + f->name + " cannot be inlined");
    if (call.args.size() != f->params.size()) throw ParseError(call.loc, "wrong number of arguments to " + f->name);

    std::set<std::string> locals(f->params.begin(), f->params.end());
    std::set<std::string> assigned;
    stmt_vars(f->body, locals, assigned);
    std::map<std::string, std::string> names;
    for (const auto& v : locals) {
      std::string n;
      do {
        n = v + "_" + f->name + std::to_string(++counter_);
      } while (taken_.count(n));
      taken_.insert(n);
      names.emplace(v, n);
    }
    std::vector<Stmt> items;
    for (std::size_t i = 0; i < f->params.size(); ++i) {
      Stmt a = Stmt::assign(Expr::var(names.at(f->params[i])), call.args[i]);
      a.loc = call.loc;
      items.push_back(std::move(a));
    }
    stack_.push_back(f->name);
    items.push_back(run(rename_stmt(f->body, names)));
    stack_.pop_back();
    return flatten(Stmt::seq(std::move(items)));
  }

  const Program& prog_;
  std::set<std::string> taken_;
  std::vector<std::string> stack_;
  int counter_ = 0;
};

}  // namespace

Stmt inline_calls(const Program& prog, const Stmt& body) {
  std::set<std::string> taken = used_vars(body);
  for (const auto& f : prog.funcs) {
    auto u = used_vars(f.body);
    taken.insert(u.begin(), u.end());
    taken.insert(f.params.begin(), f.params.end());
  }
  return Inliner(prog, std::move(taken)).run(body);
}

std::set<std::string> assigned_vars(const Stmt& s) {
  std::set<std::string> used, assigned;
  stmt_vars(s, used, assigned);
  return assigned;
}

std::set<std::string> used_vars(const Stmt& s) {
  std::set<std::string> used, assigned;
  stmt_vars(s, used, assigned);
  return used;
}

std::set<std::string> cond_vars(const Cond& c) {
  std::set<std::string> out;
  for (const auto& a : c.atoms) {
    expr_vars(a.lhs, out);
    expr_vars(a.rhs, out);
  }
  return out;
}

}  // namespace sepinv
