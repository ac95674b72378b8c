#include "jacopt/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <vector>

#include <fmt/format.h>

namespace jacopt {

namespace {

NodePtr make(Node nd) { return std::make_shared<const Node>(std::move(nd)); }

bool is_unary(Op op) {
  switch (op) {
    case Op::Neg:
    case Op::Pow:
    case Op::PowReal:
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Sin:
    case Op::Cos:
    case Op::Tan:
    case Op::Abs:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Abs: return "abs";
    default: return nullptr;
  }
}

bool lookup_function(std::string_view name, Op& op) {
  static constexpr std::pair<std::string_view, Op> kFunctions[] = {
      {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin},
      {"cos", Op::Cos},   {"tan", Op::Tan}, {"abs", Op::Abs},
  };
  for (const auto& [n, o] : kFunctions) {
    if (n == name) {
      op = o;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string_view text;
  int column;  // 1-based
  double number = 0.0;
  bool integer = false;  // digits only
};

std::vector<Token> lex(std::string_view s, int line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      bool integer = true;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        integer = false;
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          integer = false;
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      Token t{Tok::Number, s.substr(i, j - i), col};
      const std::string lexeme(t.text);
      char* end = nullptr;
      t.number = std::strtod(lexeme.c_str(), &end);
      if (end != lexeme.c_str() + lexeme.size() || lexeme == ".") {
        throw ParseError("malformed number '" + lexeme + "'", line, col);
      }
      t.integer = integer;
      out.push_back(t);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '^': kind = Tok::Caret; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back({kind, s.substr(i, 1), col});
    ++i;
  }
  out.push_back({Tok::End, {}, static_cast<int>(s.size()) + 1});
  return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
//
//   expr    := term (('+' | '-') term)*
//   term    := power (('*' | '/') power)*
//   power   := unary ('^' power)?
//   unary   := ('-' | '+') unary | primary
//   primary := number | ident | func '(' expr ')' | '(' expr ')'

class Parser {
 public:
  Parser(std::vector<Token> toks, const SymbolTable& symbols, int line)
      : toks_(std::move(toks)), symbols_(symbols), line_(line) {}

  Expr parse() {
    if (peek().kind == Tok::End) throw ParseError("empty expression", line_, 0);
    Expr e = expr();
    if (peek().kind != Tok::End) fail("unexpected '" + std::string(peek().text) + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, peek().column);
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      fail(std::string("expected ") + what +
           (peek().kind == Tok::End ? " at end of input" : " before '" + std::string(peek().text) + "'"));
    }
    take();
  }

  Expr expr() {
    Expr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = take().kind == Tok::Plus ? Op::Add : Op::Sub;
      lhs = Expr::binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = power();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = take().kind == Tok::Star ? Op::Mul : Op::Div;
      lhs = Expr::binary(op, std::move(lhs), power());
    }
    return lhs;
  }

  Expr power() {
    Expr base = unary();
    if (peek().kind != Tok::Caret) return base;
    take();
    // A bare (optionally signed) numeric literal exponent not followed by
    // another '^' is stored exactly.
    std::size_t k = 0;
    double sign = 1.0;
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) {
      if (peek().kind == Tok::Minus) sign = -1.0;
      k = 1;
    }
    if (peek(k).kind == Tok::Number && peek(k + 1).kind != Tok::Caret) {
      const Token& lit = peek(k);
      pos_ += k + 1;
      if (lit.integer) {
        const double v = sign * lit.number;
        if (std::fabs(v) > 1.0e9) fail("integer exponent too large");
        return fold(Expr::pow(std::move(base), static_cast<long>(v)));
      }
      return fold(Expr::pow_real(std::move(base), sign * lit.number));
    }
    Expr exponent = power();
    if (exponent.node().op == Op::Const) {
      const double v = exponent.node().value;
      Expr e = v == std::trunc(v) && std::fabs(v) <= 1.0e9 ? Expr::pow(std::move(base), static_cast<long>(v))
                                                           : Expr::pow_real(std::move(base), v);
      return fold(std::move(e));
    }
    return Expr::unary(Op::Exp, exponent * Expr::unary(Op::Log, std::move(base)));
  }

  // Literal-only powers and negated literals become constants, so that
  // printed trees parse back to the same tree.
  static Expr fold(Expr e) {
    const Node& nd = e.node();
    if (!nd.child[0] || nd.child[0]->op != Op::Const) return e;
    const double a = nd.child[0]->value;
    switch (nd.op) {
      case Op::Neg: return Expr::constant(-a);
      case Op::Pow: return Expr::constant(std::pow(a, static_cast<double>(nd.exponent)));
      case Op::PowReal: return Expr::constant(std::pow(a, nd.value));
      default: return e;
    }
  }

  Expr unary() {
    if (peek().kind == Tok::Minus) {
      take();
      return fold(-unary());
    }
    if (peek().kind == Tok::Plus) {
      take();
      return unary();
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        take();
        return Expr::constant(t.number);
      case Tok::LParen: {
        take();
        Expr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        Op fn;
        if (peek(1).kind == Tok::LParen && lookup_function(t.text, fn)) {
          take();
          take();
          Expr arg = expr();
          expect(Tok::RParen, "')'");
          return Expr::unary(fn, std::move(arg));
        }
        auto it = symbols_.find(t.text);
        if (it == symbols_.end()) fail("unknown identifier '" + std::string(t.text) + "'");
        take();
        return Expr::var(it->second);
      }
      case Tok::End:
        fail("unexpected end of input");
      default:
        fail("unexpected '" + std::string(t.text) + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const SymbolTable& symbols_;
  int line_;
};

// ---------------------------------------------------------------------------
// Printer

int precedence(const Node& nd) {
  switch (nd.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Pow:
    case Op::PowReal: return 3;
    case Op::Neg: return 4;
    case Op::Const: return nd.value < 0 || std::signbit(nd.value) ? 0 : 5;
    default: return 5;
  }
}

std::string number(double v, bool force_real) {
  std::string s = fmt::format("{}", v);
  if (force_real && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void print(const Node& nd, int min_prec, std::span<const std::string> names, std::string& out) {
  const bool parens = precedence(nd) < min_prec;
  if (parens) out += '(';
  switch (nd.op) {
    case Op::Const:
      out += number(nd.value, false);
      break;
    case Op::Var:
      if (nd.index < names.size()) {
        out += names[nd.index];
      } else {
        out += fmt::format("x{}", nd.index + 1);
      }
      break;
    case Op::Neg:
      out += '-';
      print(*nd.child[0], 4, names, out);
      break;
    case Op::Add:
    case Op::Sub:
      print(*nd.child[0], 1, names, out);
      out += nd.op == Op::Add ? " + " : " - ";
      print(*nd.child[1], 2, names, out);
      break;
    case Op::Mul:
    case Op::Div:
      print(*nd.child[0], 2, names, out);
      out += nd.op == Op::Mul ? "*" : "/";
      print(*nd.child[1], 3, names, out);
      break;
    case Op::Pow:
      print(*nd.child[0], 4, names, out);
      out += fmt::format("^{}", nd.exponent);
      break;
    case Op::PowReal:
      print(*nd.child[0], 4, names, out);
      out += "^" + number(nd.value, true);
      break;
    default:
      out += function_name(nd.op);
      out += '(';
      print(*nd.child[0], 0, names, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

template <typename Visit>
void walk(const Node& nd, Visit&& visit) {
  visit(nd);
  for (const auto& c : nd.child) {
    if (c) walk(*c, visit);
  }
}

}  // namespace

NodePtr Expr::constant_node(double v) {
  Node nd;
  nd.op = Op::Const;
  nd.value = v;
  return make(std::move(nd));
}

Expr Expr::var(std::size_t j) {
  Node nd;
  nd.op = Op::Var;
  nd.index = j;
  return Expr(make(std::move(nd)));
}

Expr Expr::unary(Op op, Expr a) {
  if (!is_unary(op) || op == Op::Pow || op == Op::PowReal) {
    throw Error("Expr::unary: not a unary operator");
  }
  Node nd;
  nd.op = op;
  nd.child[0] = a.ptr();
  return Expr(make(std::move(nd)));
}

Expr Expr::binary(Op op, Expr a, Expr b) {
  if (op != Op::Add && op != Op::Sub && op != Op::Mul && op != Op::Div) {
    throw Error("Expr::binary: not a binary operator");
  }
  Node nd;
  nd.op = op;
  nd.child[0] = a.ptr();
  nd.child[1] = b.ptr();
  return Expr(make(std::move(nd)));
}

Expr Expr::pow(Expr base, long exponent) {
  Node nd;
  nd.op = Op::Pow;
  nd.exponent = exponent;
  nd.child[0] = base.ptr();
  return Expr(make(std::move(nd)));
}

Expr Expr::pow_real(Expr base, double exponent) {
  Node nd;
  nd.op = Op::PowReal;
  nd.value = exponent;
  nd.child[0] = base.ptr();
  return Expr(make(std::move(nd)));
}

Expr parse_function(std::string_view text, const SymbolTable& symbols, int line) {
  Parser parser(lex(text, line), symbols, line);
  return parser.parse();
}

std::string to_string(const Expr& e, std::span<const std::string> names) {
  std::string out;
  print(e.node(), 0, names, out);
  return out;
}

std::set<std::size_t> free_variables(const Expr& e) {
  std::set<std::size_t> vars;
  walk(e.node(), [&](const Node& nd) {
    if (nd.op == Op::Var) vars.insert(nd.index);
  });
  return vars;
}

std::size_t arity(const Expr& e) {
  std::size_t n = 0;
  walk(e.node(), [&](const Node& nd) {
    if (nd.op == Op::Var) n = std::max(n, nd.index + 1);
  });
  return n;
}

bool uses_abs(const Expr& e) {
  bool found = false;
  walk(e.node(), [&](const Node& nd) { found = found || nd.op == Op::Abs; });
  return found;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.op != y.op) return false;
  switch (x.op) {
    case Op::Const:
    case Op::PowReal:
      if (x.value != y.value) return false;
      break;
    case Op::Var:
      if (x.index != y.index) return false;
      break;
    case Op::Pow:
      if (x.exponent != y.exponent) return false;
      break;
    default:
      break;
  }
  for (std::size_t k = 0; k < 2; ++k) {
    if (static_cast<bool>(x.child[k]) != static_cast<bool>(y.child[k])) return false;
    if (x.child[k] && !structurally_equal(Expr(x.child[k]), Expr(y.child[k]))) return false;
  }
  return true;
}

}  // namespace jacopt
