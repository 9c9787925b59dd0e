#include "vfc/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>

#include "vfc/errors.hpp"

namespace vfc {

struct Expr::Node {
  enum Kind { kNum, kVar, kUnary, kBinary, kCall } kind;
  Cx value;
  std::string name;  // variable or function name, or operator spelling
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& why) {
    throw err_schema("expression parse error at position " + std::to_string(pos) + ": " + why +
                     " in '" + s + "'");
  }

  NodePtr make_num(Cx v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::kNum;
    n->value = v;
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = binary("+", lhs, parse_term());
      else if (eat('-'))
        lhs = binary("-", lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = binary("*", lhs, parse_unary());
      else if (eat('/'))
        lhs = binary("/", lhs, parse_unary());
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    if (eat('-')) {
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::kUnary;
      n->name = "-";
      n->a = parse_unary();
      return n;
    }
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (eat('^')) {
      NodePtr exp = parse_unary();  // right-assoc
      return binary("^", base, exp);
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t end = pos;
      while (end < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.' || s[end] == 'e' ||
              s[end] == 'E' || ((s[end] == '+' || s[end] == '-') && (s[end - 1] == 'e' || s[end - 1] == 'E'))))
        ++end;
      double v = std::stod(s.substr(pos, end - pos));
      pos = end;
      return make_num(Cx(v, 0.0));
    }
    if (c == '(') {
      ++pos;
      NodePtr inner = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos;
      while (end < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
        ++end;
      std::string name = s.substr(pos, end - pos);
      pos = end;
      if (peek() == '(') {
        eat('(');
        auto n = std::make_shared<Expr::Node>();
        n->kind = Expr::Node::kCall;
        n->name = name;
        n->a = parse_expr();
        if (eat(',')) n->b = parse_expr();
        if (!eat(')')) fail("expected ')' after call");
        return n;
      }
      if (name == "i") return make_num(Cx(0.0, 1.0));
      if (name == "pi") return make_num(Cx(3.14159265358979323846, 0.0));
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::kVar;
      n->name = name;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr binary(const char* op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::kBinary;
    n->name = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
};

Cx eval_node(const Expr::Node& n, const ExprEnv& env) {
  switch (n.kind) {
    case Expr::Node::kNum:
      return n.value;
    case Expr::Node::kVar: {
      auto it = env.find(n.name);
      if (it == env.end()) throw err_schema("unbound variable '" + n.name + "'");
      return it->second;
    }
    case Expr::Node::kUnary:
      return -eval_node(*n.a, env);
    case Expr::Node::kBinary: {
      Cx a = eval_node(*n.a, env);
      Cx b = eval_node(*n.b, env);
      if (n.name == "+") return a + b;
      if (n.name == "-") return a - b;
      if (n.name == "*") return a * b;
      if (n.name == "/") return a / b;
      if (n.name == "^") {
        double er = b.real();
        if (b.imag() == 0.0 && er == std::floor(er) && std::abs(er) <= 64) {
          // integer powers by repeated multiplication: exact flags for
          // polynomial sections
          long k = static_cast<long>(er);
          Cx r = 1.0;
          Cx base = k >= 0 ? a : Cx(1.0) / a;
          for (long t = 0; t < std::labs(k); ++t) r *= base;
          return r;
        }
        return std::pow(a, b);
      }
      throw err_schema("unknown operator " + n.name);
    }
    case Expr::Node::kCall: {
      Cx a = eval_node(*n.a, env);
      if (n.name == "conj") return std::conj(a);
      if (n.name == "abs") return Cx(std::abs(a), 0.0);
      if (n.name == "re") return Cx(a.real(), 0.0);
      if (n.name == "im") return Cx(a.imag(), 0.0);
      if (n.name == "exp") return std::exp(a);
      if (n.name == "log") return std::log(a);
      if (n.name == "sqrt") return std::sqrt(a);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "bump") {
        // C^2 compactly supported profile (1-t^2)^3 on |t|<1; real part only.
        double t = a.real();
        double q = 1.0 - t * t;
        return Cx(q > 0.0 ? q * q * q : 0.0, 0.0);
      }
      if (n.name == "pow" && n.b) return std::pow(a, eval_node(*n.b, env));
      throw err_schema("unknown function " + n.name);
    }
  }
  throw err_schema("corrupt expression node");
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.root_ = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  e.text_ = text;
  return e;
}

Cx Expr::eval(const ExprEnv& env) const {
  if (!root_) throw err_schema("evaluating empty expression");
  return eval_node(*root_, env);
}

std::vector<Expr> parse_expr_list(const std::vector<std::string>& texts) {
  std::vector<Expr> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(Expr::parse(t));
  return out;
}

}  // namespace vfc
