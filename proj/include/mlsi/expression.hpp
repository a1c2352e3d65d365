#pragma once

#include <mlsi/types.hpp>

#include <memory>
#include <string>

namespace mlsi {

/// Malformed expression. offset() is the byte position of the problem.
class ExpressionError : public InvalidArgument {
 public:
  ExpressionError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Minimal arithmetic grammar over x in R^n:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := ('+' | '-') unary | power
//   power := atom ('^' unary)?
//   atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
// Names: x (1-D, or the whole vector inside norm), x1..xn, pi, e.
// Functions: pow, exp, log, norm, sqrt, abs, sin, cos.
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& text, int dim);

  double operator()(const Vec& x) const;
  int dim() const { return dim_; }
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  int dim_ = 1;
  std::string text_;
};

}  // namespace mlsi
