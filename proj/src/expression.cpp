#include <mlsi/expression.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace mlsi {

ExpressionError::ExpressionError(std::size_t offset, const std::string& what)
    : InvalidArgument("expression error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

enum class Op { number, variable, vector, negate, add, sub, mul, div, pow, exp, log, norm, sqrt, abs, sin, cos };

struct Expression::Node {
  Op op = Op::number;
  double value = 0.0;
  int index = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, std::vector<NodePtr> args = {}, double value = 0.0, int index = 0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  n->value = value;
  n->index = index;
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

  NodePtr run() {
    skip();
    if (pos_ == s_.size()) throw ExpressionError(pos_, "empty expression");
    NodePtr root = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError(pos_, std::string("unexpected '") + s_[pos_] + "'");
    scalar(root);
    return root;
  }

 private:
  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;
  std::vector<std::pair<const Expression::Node*, std::size_t>> vector_uses_;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  // Rejects the vector variable anywhere except as the argument of norm.
  void scalar(const NodePtr& n) {
    if (n->op == Op::vector) {
      for (const auto& [node, offset] : vector_uses_) {
        if (node == n.get()) throw ExpressionError(offset, "the vector x is only allowed inside norm() when n > 1");
      }
    }
    if (n->op == Op::norm) return;
    for (const NodePtr& a : n->args) scalar(a);
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (eat('+')) {
        left = make(Op::add, {left, term()});
      } else if (eat('-')) {
        left = make(Op::sub, {left, term()});
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (eat('*')) {
        left = make(Op::mul, {left, unary()});
      } else if (eat('/')) {
        left = make(Op::div, {left, unary()});
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::negate, {unary()});
    if (eat('+')) return unary();
    NodePtr base = atom();
    if (eat('^')) return make(Op::pow, {base, unary()});
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ == s_.size()) throw ExpressionError(pos_, "unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!eat(')')) throw ExpressionError(pos_, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    throw ExpressionError(pos_, std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) throw ExpressionError(start, "malformed number");
    pos_ = static_cast<std::size_t>(end - s_.data());
    return make(Op::number, {}, v);
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') return call(id, start);
    if (id == "pi") return make(Op::number, {}, std::numbers::pi);
    if (id == "e") return make(Op::number, {}, std::numbers::e);
    if (id == "x") {
      if (dim_ == 1) return make(Op::variable, {}, 0.0, 0);
      NodePtr v = make(Op::vector);
      vector_uses_.emplace_back(v.get(), start);
      return v;
    }
    if (id.size() > 1 && id[0] == 'x' && std::all_of(id.begin() + 1, id.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
      const int i = std::stoi(id.substr(1));
      if (i < 1 || i > dim_) {
        throw ExpressionError(start, "variable " + id + " out of range for dimension " + std::to_string(dim_));
      }
      return make(Op::variable, {}, 0.0, i - 1);
    }
    throw ExpressionError(start, "unknown name '" + id + "'");
  }

  NodePtr call(const std::string& id, std::size_t start) {
    struct Fn {
      const char* name;
      Op op;
      std::size_t arity;
    };
    static constexpr Fn table[] = {{"pow", Op::pow, 2},   {"exp", Op::exp, 1},   {"log", Op::log, 1},
                                   {"norm", Op::norm, 1}, {"sqrt", Op::sqrt, 1}, {"abs", Op::abs, 1},
                                   {"sin", Op::sin, 1},   {"cos", Op::cos, 1}};
    const Fn* fn = nullptr;
    for (const Fn& f : table) {
      if (id == f.name) fn = &f;
    }
    if (!fn) throw ExpressionError(start, "unknown function '" + id + "'");
    eat('(');
    std::vector<NodePtr> args{expr()};
    while (eat(',')) args.push_back(expr());
    if (!eat(')')) throw ExpressionError(pos_, "expected ')' to close " + id);
    if (args.size() != fn->arity) {
      throw ExpressionError(start, id + " takes " + std::to_string(fn->arity) + " argument(s), got " +
                                       std::to_string(args.size()));
    }
    return make(fn->op, std::move(args));
  }
};

double eval(const Expression::Node& n, const Vec& x) {
  auto arg = [&](std::size_t i) { return eval(*n.args[i], x); };
  switch (n.op) {
    case Op::number: return n.value;
    case Op::variable: return x[n.index];
    case Op::vector: return x.norm();  // unreachable outside norm
    case Op::negate: return -arg(0);
    case Op::add: return arg(0) + arg(1);
    case Op::sub: return arg(0) - arg(1);
    case Op::mul: return arg(0) * arg(1);
    case Op::div: return arg(0) / arg(1);
    case Op::pow: return std::pow(arg(0), arg(1));
    case Op::exp: return std::exp(arg(0));
    case Op::log: return std::log(arg(0));
    case Op::norm: return n.args[0]->op == Op::vector ? x.norm() : std::abs(arg(0));
    case Op::sqrt: return std::sqrt(arg(0));
    case Op::abs: return std::abs(arg(0));
    case Op::sin: return std::sin(arg(0));
    case Op::cos: return std::cos(arg(0));
  }
  return std::nan("");
}

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
  if (dim < 1) throw InvalidArgument("expression dimension must be >= 1");
  Expression e;
  e.root_ = Parser(text, dim).run();
  e.dim_ = dim;
  e.text_ = text;
  return e;
}

double Expression::operator()(const Vec& x) const {
  if (x.size() != dim_) throw InvalidArgument("expression: dimension mismatch");
  return eval(*root_, x);
}

}  // namespace mlsi
