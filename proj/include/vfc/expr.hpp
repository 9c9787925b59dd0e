#ifndef VFC_EXPR_HPP
#define VFC_EXPR_HPP

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vfc {

using Cx = std::complex<double>;
using ExprEnv = std::map<std::string, Cx>;

// Small arithmetic DSL over coordinates: +, -, *, /, ^ (integer power),
// conj, abs, re, im, exp, log, sin, cos, sqrt, bump; constants i and pi;
// numbers; free identifiers resolved through the environment (u1.., z1..,
// t1..).
class Expr {
 public:
  static Expr parse(const std::string& text);

  Cx eval(const ExprEnv& env) const;
  const std::string& text() const { return text_; }

  Expr() = default;

  struct Node;  // exposed for the parser/evaluator translation unit

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

std::vector<Expr> parse_expr_list(const std::vector<std::string>& texts);

}  // namespace vfc

#endif
