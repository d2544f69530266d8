#include "coneflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>

namespace coneflow {

int Expr::add_literal(double v) {
  nodes_.push_back(Node{NodeKind::Literal, v, -1, -1, -1});
  return root_ = static_cast<int>(nodes_.size()) - 1;
}

int Expr::add_var(int slot) {
  nodes_.push_back(Node{NodeKind::Var, 0.0, slot, -1, -1});
  return root_ = static_cast<int>(nodes_.size()) - 1;
}

int Expr::add_param(int slot) {
  nodes_.push_back(Node{NodeKind::Param, 0.0, slot, -1, -1});
  return root_ = static_cast<int>(nodes_.size()) - 1;
}

int Expr::add_unary(NodeKind kind, int operand) {
  nodes_.push_back(Node{kind, 0.0, -1, operand, -1});
  return root_ = static_cast<int>(nodes_.size()) - 1;
}

int Expr::add_binary(NodeKind kind, int lhs, int rhs) {
  nodes_.push_back(Node{kind, 0.0, -1, lhs, rhs});
  return root_ = static_cast<int>(nodes_.size()) - 1;
}

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string_view text;
  double number = 0.0;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  Lexer(std::string_view src, int line, int column) : src_(src), line_(line), col_(column) {}

  Token next() {
    skip_space();
    Token t{Tok::End, {}, 0.0, line_, col_};
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    const std::size_t start = pos_;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '.')) {
        advance();
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t look = pos_ + 1;
        if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
        if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
          while (pos_ < look) advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            advance();
          }
        }
      }
      t.kind = Tok::Number;
      t.text = src_.substr(start, pos_ - start);
      const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size()) {
        throw ParseError("malformed number '" + std::string(t.text) + "'", t.line, t.column);
      }
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        advance();
      }
      t.kind = Tok::Ident;
      t.text = src_.substr(start, pos_ - start);
      return t;
    }
    advance();
    t.text = src_.substr(start, 1);
    switch (c) {
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '^': t.kind = Tok::Caret; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
    }
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_;
  int col_;
};

class Parser {
 public:
  Parser(std::string_view src, const NameScope& scope, int line, int column)
      : lex_(src, line, column), scope_(scope) {
    cur_ = lex_.next();
  }

  Expr run() {
    if (cur_.kind == Tok::End) fail("empty expression");
    const int root = parse_sum();
    if (cur_.kind == Tok::RParen) fail("unbalanced parenthesis: unexpected ')'");
    if (cur_.kind != Tok::End) fail("unexpected token '" + std::string(cur_.text) + "'");
    e_.set_root(root);
    return std::move(e_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur_.line, cur_.column);
  }
  void eat() { cur_ = lex_.next(); }

  int parse_sum() {
    int lhs = parse_product();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const NodeKind k = cur_.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      eat();
      const int rhs = parse_product();
      lhs = e_.add_binary(k, lhs, rhs);
    }
    return lhs;
  }

  int parse_product() {
    int lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const NodeKind k = cur_.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      eat();
      const int rhs = parse_unary();
      lhs = e_.add_binary(k, lhs, rhs);
    }
    return lhs;
  }

  int parse_unary() {
    if (cur_.kind == Tok::Minus) {
      eat();
      const int operand = parse_unary();
      return e_.add_unary(NodeKind::Neg, operand);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (cur_.kind == Tok::Caret) {
      eat();
      const int expo = parse_unary();
      return e_.add_binary(NodeKind::Pow, base, expo);
    }
    return base;
  }

  int parse_primary() {
    switch (cur_.kind) {
      case Tok::Number: {
        const double v = cur_.number;
        eat();
        return e_.add_literal(v);
      }
      case Tok::LParen: {
        const Token open = cur_;
        eat();
        const int inner = parse_sum();
        if (cur_.kind != Tok::RParen) {
          throw ParseError("unbalanced parenthesis: '(' opened here is never closed", open.line,
                           open.column);
        }
        eat();
        return inner;
      }
      case Tok::Ident: return parse_identifier();
      case Tok::End: fail("unexpected end of expression");
      default: fail("unexpected token '" + std::string(cur_.text) + "'");
    }
  }

  int parse_identifier() {
    const Token id = cur_;
    eat();
    const std::string name(id.text);
    if (cur_.kind == Tok::LParen) {
      NodeKind k;
      if (name == "sin") k = NodeKind::Sin;
      else if (name == "cos") k = NodeKind::Cos;
      else if (name == "exp") k = NodeKind::Exp;
      else throw ParseError("unknown function '" + name + "'", id.line, id.column);
      const Token open = cur_;
      eat();
      const int arg = parse_sum();
      if (cur_.kind != Tok::RParen) {
        throw ParseError("unbalanced parenthesis in call to '" + name + "'", open.line,
                         open.column);
      }
      eat();
      return e_.add_unary(k, arg);
    }
    const auto& st = scope_.states;
    if (auto it = std::find(st.begin(), st.end(), name); it != st.end()) {
      return e_.add_var(static_cast<int>(it - st.begin()));
    }
    const auto& pr = scope_.params;
    if (auto it = std::find(pr.begin(), pr.end(), name); it != pr.end()) {
      return e_.add_param(static_cast<int>(it - pr.begin()));
    }
    throw ParseError("undeclared identifier '" + name + "'", id.line, id.column);
  }

  Lexer lex_;
  const NameScope& scope_;
  Token cur_;
  Expr e_;
};

// Binding strength used by the printer; mirrors the parser's grammar levels.
int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void render(const Expr& e, int i, const NameScope& scope, std::string& out) {
  const Node& n = e.node(i);
  auto child = [&](int c, bool parens) {
    if (parens) out += '(';
    render(e, c, scope, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case NodeKind::Literal: out += format_number(n.value); return;
    case NodeKind::Var: out += scope.states.at(static_cast<std::size_t>(n.slot)); return;
    case NodeKind::Param: out += scope.params.at(static_cast<std::size_t>(n.slot)); return;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
      out += n.kind == NodeKind::Sin ? "sin" : n.kind == NodeKind::Cos ? "cos" : "exp";
      child(n.lhs, true);
      return;
    case NodeKind::Neg:
      out += '-';
      child(n.lhs, precedence(e.node(n.lhs).kind) < 3);
      return;
    case NodeKind::Pow:
      // Base must be a primary; exponent is parsed at unary level.
      child(n.lhs, precedence(e.node(n.lhs).kind) < 5);
      out += '^';
      child(n.rhs, precedence(e.node(n.rhs).kind) < 3);
      return;
    default: {
      const int p = precedence(n.kind);
      child(n.lhs, precedence(e.node(n.lhs).kind) < p);
      switch (n.kind) {
        case NodeKind::Add: out += " + "; break;
        case NodeKind::Sub: out += " - "; break;
        case NodeKind::Mul: out += "*"; break;
        default: out += "/"; break;
      }
      child(n.rhs, precedence(e.node(n.rhs).kind) <= p);
      return;
    }
  }
}

bool equal_nodes(const Expr& a, int i, const Expr& b, int j) {
  const Node& x = a.node(i);
  const Node& y = b.node(j);
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::Literal: return x.value == y.value;
    case NodeKind::Var:
    case NodeKind::Param: return x.slot == y.slot;
    case NodeKind::Neg:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp: return equal_nodes(a, x.lhs, b, y.lhs);
    default: return equal_nodes(a, x.lhs, b, y.lhs) && equal_nodes(a, x.rhs, b, y.rhs);
  }
}

constexpr int kNonPolynomial = -1;

int degree_of(const Expr& e, int i, const std::vector<bool>& in_set) {
  const Node& n = e.node(i);
  switch (n.kind) {
    case NodeKind::Literal:
    case NodeKind::Param: return 0;
    case NodeKind::Var: {
      const auto s = static_cast<std::size_t>(n.slot);
      return s < in_set.size() && in_set[s] ? 1 : 0;
    }
    case NodeKind::Neg: return degree_of(e, n.lhs, in_set);
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp: return degree_of(e, n.lhs, in_set) == 0 ? 0 : kNonPolynomial;
    default: break;
  }
  const int a = degree_of(e, n.lhs, in_set);
  const int b = degree_of(e, n.rhs, in_set);
  if (a < 0 || b < 0) return kNonPolynomial;
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return std::max(a, b);
    case NodeKind::Mul: return a + b;
    case NodeKind::Div: return b == 0 ? a : kNonPolynomial;
    case NodeKind::Pow: {
      if (b != 0) return kNonPolynomial;
      if (a == 0) return 0;
      const Node& ex = e.node(n.rhs);
      if (ex.kind == NodeKind::Literal && ex.value >= 0 && std::floor(ex.value) == ex.value &&
          ex.value < 1e6) {
        return a * static_cast<int>(ex.value);
      }
      return kNonPolynomial;
    }
    default: return kNonPolynomial;
  }
}

}  // namespace

Expr parse_expression(std::string_view text, const NameScope& scope, int line, int column) {
  return Parser(text, scope, line, column).run();
}

std::string to_string(const Expr& e, const NameScope& scope) {
  std::string out;
  if (!e.empty()) render(e, e.root(), scope, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return equal_nodes(a, a.root(), b, b.root());
}

int polynomial_degree(const Expr& e, const std::vector<bool>& in_set) {
  return e.empty() ? 0 : degree_of(e, e.root(), in_set);
}

bool depends_on_vars(const Expr& e) {
  return std::any_of(e.nodes().begin(), e.nodes().end(),
                     [](const Node& n) { return n.kind == NodeKind::Var; });
}

}  // namespace coneflow
