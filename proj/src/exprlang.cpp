#include "invlab/exprlang.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>

namespace invlab::expr {
namespace {

SourcePos position_in(std::string_view src, std::size_t offset) {
  SourcePos pos;
  pos.offset = offset;
  for (std::size_t i = 0; i < offset && i < src.size(); ++i) {
    if (src[i] == '\n') {
      ++pos.line;
      pos.col = 1;
    } else {
      ++pos.col;
    }
  }
  return pos;
}

std::string render(const SourcePos& pos, const std::string& message) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + message;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct FunctionName {
  std::string_view name;
  Op op;
};

constexpr FunctionName kFunctions[] = {
    {"sin", Op::kSin},   {"cos", Op::kCos},   {"exp", Op::kExp},
    {"log", Op::kLog},   {"sqrt", Op::kSqrt}, {"tanh", Op::kTanh},
    {"abs", Op::kAbs},   {"pow", Op::kPow},
};

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConst: return "Const";
    case Op::kVarX: return "x";
    case Op::kVarU: return "u";
    case Op::kAdd: return "Add";
    case Op::kSub: return "Sub";
    case Op::kMul: return "Mul";
    case Op::kDiv: return "Div";
    case Op::kNeg: return "Neg";
    case Op::kPow: return "Pow";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kTanh: return "tanh";
    case Op::kAbs: return "abs";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::string_view src, Dims dims, std::vector<Node>& nodes)
      : src_(src), dims_(dims), nodes_(nodes) {}

  int parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) fail(pos_, "empty expression");
    const int root = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) {
      fail(pos_, "unexpected '" + std::string(1, src_[pos_]) +
                     "', expected one of: operator, end of input");
    }
    return root;
  }

 private:
  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) {
        p_.fail(p_.pos_, "expression nesting exceeds " + std::to_string(kMaxDepth));
      }
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  [[noreturn]] void fail(std::size_t offset, const std::string& message) {
    throw ParseError(position_in(src_, offset), message);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* context) {
    if (!accept(c)) {
      fail(pos_, std::string("expected '") + c + "' " + context);
    }
  }

  int add(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  int binary(Op op, int lhs, int rhs, std::size_t offset) {
    Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    n.offset = offset;
    return add(n);
  }

  int parse_expr() {
    DepthGuard guard(*this);
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = binary(Op::kAdd, lhs, parse_term(), at);
      } else if (accept('-')) {
        lhs = binary(Op::kSub, lhs, parse_term(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = binary(Op::kMul, lhs, parse_unary(), at);
      } else if (accept('/')) {
        lhs = binary(Op::kDiv, lhs, parse_unary(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) {
      DepthGuard guard(*this);
      Node n;
      n.op = Op::kNeg;
      n.lhs = parse_unary();
      n.offset = at;
      return add(n);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      DepthGuard guard(*this);
      return binary(Op::kPow, base, parse_unary(), at);
    }
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) {
      fail(pos_, "unexpected end of input, expected one of: number, identifier, '(', '-'");
    }
    const std::size_t at = pos_;
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      expect(')', "to close '('");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(at, "unexpected '" + std::string(1, c) +
                 "', expected one of: number, identifier, '(', '-'");
  }

  int parse_number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      const std::size_t start = end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
      return end > start;
    };
    bool any = digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      any = digits() || any;
    }
    if (!any) fail(at, "malformed number");
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t save = end;
      ++end;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (!digits()) {
        fail(save, "malformed exponent in number");
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(src_.data() + at, src_.data() + end, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + end || !std::isfinite(value)) {
      fail(at, "number out of range");
    }
    pos_ = end;
    Node n;
    n.op = Op::kConst;
    n.value = value;
    n.offset = at;
    return add(n);
  }

  int parse_identifier() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
      ++end;
    }
    const std::string_view name = src_.substr(at, end - at);
    pos_ = end;

    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u')) {
      const std::string_view digits = name.substr(1);
      bool numeric = true;
      for (char ch : digits) numeric = numeric && std::isdigit(static_cast<unsigned char>(ch));
      if (numeric) {
        int index = 0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), index);
        if (res.ec != std::errc()) fail(at, "dimension overflow in '" + std::string(name) + "'");
        const int limit = name[0] == 'x' ? dims_.n : dims_.k;
        if (index < 1 || index > limit) {
          fail(at, "unknown identifier '" + std::string(name) + "' (declared " +
                       (name[0] == 'x' ? "x1..x" : "u1..u") + std::to_string(limit) + ")");
        }
        Node n;
        n.op = name[0] == 'x' ? Op::kVarX : Op::kVarU;
        n.index = index - 1;
        n.offset = at;
        return add(n);
      }
    }

    for (const auto& f : kFunctions) {
      if (f.name != name) continue;
      expect('(', ("after function '" + std::string(name) + "'").c_str());
      Node n;
      n.op = f.op;
      n.offset = at;
      n.lhs = parse_expr();
      if (f.op == Op::kPow) {
        expect(',', "between pow arguments");
        n.rhs = parse_expr();
      }
      expect(')', ("to close call to '" + std::string(name) + "'").c_str());
      return add(n);
    }
    fail(at, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  Dims dims_;
  std::vector<Node>& nodes_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

ParseError::ParseError(SourcePos pos, const std::string& message)
    : Error(render(pos, message)), pos_(pos) {}

DomainError::DomainError(SourcePos pos, const std::string& message)
    : EvaluationError(render(pos, message)), pos_(pos) {}

Expr parse(std::string_view source, Dims dims) {
  if (dims.n < 0 || dims.k < 0) {
    throw ParseError(SourcePos{}, "dimension overflow: negative dimension");
  }
  Expr e;
  e.source_ = std::string(source);
  e.dims_ = dims;
  Parser parser(e.source_, dims, e.nodes_);
  e.root_ = parser.parse_all();
  if (e.depth() > kMaxDepth) {
    throw ParseError(e.position(0), "expression tree depth exceeds " + std::to_string(kMaxDepth));
  }
  return e;
}

SourcePos Expr::position(std::size_t offset) const { return position_in(source_, offset); }

void Expr::domain_error(int id, const std::string& message) const {
  throw DomainError(position(nodes_[static_cast<std::size_t>(id)].offset), message);
}

int Expr::depth() const {
  // Children are stored before their parents.
  std::vector<int> d(nodes_.size(), 0);
  auto at = [&](int id) { return id < 0 ? 0 : d[static_cast<std::size_t>(id)]; };
  for (std::size_t i = 0; i < nodes_.size(); ++i) d[i] = 1 + std::max(at(nodes_[i].lhs), at(nodes_[i].rhs));
  return at(root_);
}

bool Expr::uses(Op op) const {
  for (const Node& n : nodes_) {
    if (n.op == op) return true;
  }
  return false;
}

bool Expr::structurally_equal(const Expr& other) const {
  std::function<bool(int, int)> rec = [&](int a, int b) -> bool {
    if (a < 0 || b < 0) return a == b;
    const Node& x = nodes_[static_cast<std::size_t>(a)];
    const Node& y = other.nodes_[static_cast<std::size_t>(b)];
    if (x.op != y.op) return false;
    if (x.op == Op::kConst && x.value != y.value) return false;
    if ((x.op == Op::kVarX || x.op == Op::kVarU) && x.index != y.index) return false;
    return rec(x.lhs, y.lhs) && rec(x.rhs, y.rhs);
  };
  return rec(root_, other.root_);
}

std::string Expr::print() const {
  std::function<std::string(int)> rec = [&](int id) -> std::string {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kConst: return format_number(n.value);
      case Op::kVarX: return "x" + std::to_string(n.index + 1);
      case Op::kVarU: return "u" + std::to_string(n.index + 1);
      case Op::kAdd: return "(" + rec(n.lhs) + " + " + rec(n.rhs) + ")";
      case Op::kSub: return "(" + rec(n.lhs) + " - " + rec(n.rhs) + ")";
      case Op::kMul: return "(" + rec(n.lhs) + " * " + rec(n.rhs) + ")";
      case Op::kDiv: return "(" + rec(n.lhs) + " / " + rec(n.rhs) + ")";
      case Op::kPow: return "(" + rec(n.lhs) + " ^ " + rec(n.rhs) + ")";
      case Op::kNeg: return "(-" + rec(n.lhs) + ")";
      default: return std::string(op_name(n.op)) + "(" + rec(n.lhs) + ")";
    }
  };
  return rec(root_);
}

std::string Expr::tree() const {
  std::function<std::string(int)> rec = [&](int id) -> std::string {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kConst: return format_number(n.value);
      case Op::kVarX: return "x" + std::to_string(n.index + 1);
      case Op::kVarU: return "u" + std::to_string(n.index + 1);
      default: break;
    }
    std::string out = std::string(op_name(n.op)) + "(" + rec(n.lhs);
    if (n.rhs >= 0) out += ", " + rec(n.rhs);
    return out + ")";
  };
  return rec(root_);
}

namespace {

void check_inputs(const Expr& e, const Vec& x, const Vec& u) {
  if (x.size() != e.dims().n || u.size() != e.dims().k) {
    throw InvalidArgument("expression '" + e.source() + "' expects " +
                          std::to_string(e.dims().n) + " state and " +
                          std::to_string(e.dims().k) + " control values");
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw EvaluationError("expression '" + e.source() + "' evaluated at non-finite input");
  }
}

}  // namespace

double eval(const Expr& e, const Vec& x, const Vec& u) {
  check_inputs(e, x, u);
  std::vector<double> xs(x.data(), x.data() + x.size());
  std::vector<double> us(u.data(), u.data() + u.size());
  return e.evaluate<double>(xs, us);
}

Dual<double> eval_dual(const Expr& e, const Vec& x, const Vec& u,
                       const std::vector<Variable>& wrt) {
  check_inputs(e, x, u);
  const std::size_t m = wrt.size();
  auto seed = [&](Variable::Kind kind, Eigen::Index i, double v) {
    Dual<double> d{v, std::vector<double>(m, 0.0)};
    for (std::size_t w = 0; w < m; ++w) {
      if (wrt[w].kind == kind && wrt[w].index == i) d.partials[w] = 1.0;
    }
    return d;
  };
  std::vector<Dual<double>> xs;
  std::vector<Dual<double>> us;
  for (Eigen::Index i = 0; i < x.size(); ++i) xs.push_back(seed(Variable::Kind::kX, i, x(i)));
  for (Eigen::Index i = 0; i < u.size(); ++i) us.push_back(seed(Variable::Kind::kU, i, u(i)));
  Dual<double> out = e.evaluate<Dual<double>>(xs, us);
  if (!detail::all_finite(out)) {
    throw DomainError(e.position(0), "non-finite value or derivative");
  }
  return out;
}

SecondOrder eval_second_order(const Expr& e, const Vec& x, const Vec& u) {
  check_inputs(e, x, u);
  using D1 = Dual<double>;
  using D2 = Dual<D1>;
  const auto n = static_cast<std::size_t>(x.size());
  auto zero1 = D1{0.0, std::vector<double>(n, 0.0)};
  std::vector<D2> xs;
  for (std::size_t i = 0; i < n; ++i) {
    D2 v;
    v.value = D1{x(static_cast<Eigen::Index>(i)), std::vector<double>(n, 0.0)};
    v.value.partials[i] = 1.0;
    v.partials.assign(n, zero1);
    v.partials[i].value = 1.0;
    xs.push_back(std::move(v));
  }
  std::vector<D2> us;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    us.push_back(D2{D1{u(i), std::vector<double>(n, 0.0)}, std::vector<D1>(n, zero1)});
  }
  const D2 out = e.evaluate<D2>(xs, us);
  if (!detail::all_finite(out)) {
    throw DomainError(e.position(0), "non-finite value or derivative");
  }
  SecondOrder so;
  so.value = out.value.value;
  so.gradient = Vec(static_cast<Eigen::Index>(n));
  so.hessian = Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    so.gradient(static_cast<Eigen::Index>(j)) = out.partials[j].value;
    for (std::size_t i = 0; i < n; ++i) {
      so.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          out.partials[j].partials[i];
    }
  }
  return so;
}

}  // namespace invlab::expr
