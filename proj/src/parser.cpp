#include "tlnn/parser.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlnn/errors.hpp"

namespace tlnn {
namespace {

enum class Tok {
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Amp, Pipe, Bang, Comma, Eq, GeOp, LtOp, Ident, Number, End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double num = 0.0;
  int line = 1;
  int column = 1;
};

[[noreturn]] void fail(const std::string& msg, const Token& at) {
  throw ParseError(msg, at.line, at.column);
}

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t = next();
      const bool end = t.kind == Tok::End;
      out.push_back(std::move(t));
      if (end) return out;
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++col_;
        ++pos_;
      } else {
        return;
      }
    }
  }

  Token next() {
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      t.kind = k;
      t.text = c;
      advance(1);
      return t;
    };
    switch (c) {
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case '[': return single(Tok::LBracket);
      case ']': return single(Tok::RBracket);
      case '{': return single(Tok::LBrace);
      case '}': return single(Tok::RBrace);
      case '&': return single(Tok::Amp);
      case '|': return single(Tok::Pipe);
      case '!': return single(Tok::Bang);
      case ',': return single(Tok::Comma);
      case '=': return single(Tok::Eq);
      case '<': return single(Tok::LtOp);
      case '>':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          t.kind = Tok::GeOp;
          t.text = ">=";
          advance(2);
          return t;
        }
        throw ParseError("expected '>=' after '>'", line_, col_);
      default:
        break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      t.kind = Tok::Ident;
      t.text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(t.text.size());
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.')
      return lex_number();
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  Token lex_number() {
    Token t;
    t.kind = Tok::Number;
    t.line = line_;
    t.column = col_;
    std::size_t start = pos_;
    if (pos_ < src_.size() && src_[pos_] == '-') ++pos_;
    bool any_digit = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
      any_digit = true;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        any_digit = true;
      }
    }
    if (!any_digit) throw ParseError("malformed number", line_, col_);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // the 'e' belongs to whatever follows
      }
    }
    t.text = src_.substr(start, pos_ - start);
    col_ += static_cast<int>(t.text.size());
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.num);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
      throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
    return t;
  }

  void advance(int n) {
    pos_ += static_cast<std::size_t>(n);
    col_ += n;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct Annotation {
  bool is_vector = false;
  double scalar = 0.0;
  std::vector<double> vec;
  Token at;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula run() {
    OrResult r = parse_or();
    if (r.trailing)
      fail("weight annotation has no operator to bind to", r.trailing_at);
    if (peek().kind != Tok::End) fail("unexpected trailing input", peek());
    return std::move(*r.f);
  }

 private:
  struct OrResult {
    std::optional<Formula> f;
    std::optional<double> trailing;
    Token trailing_at;
  };

  const Token& peek() const { return toks_[idx_]; }
  Token get() { return toks_[idx_++]; }

  Token expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what, peek());
    return get();
  }

  std::optional<Annotation> try_annotation() {
    if (peek().kind != Tok::LBrace) return std::nullopt;
    Annotation a;
    a.at = get();
    Token name = expect(Tok::Ident, "'w'");
    if (name.text != "w") fail("unknown annotation '" + name.text + "'", name);
    expect(Tok::Eq, "'='");
    if (peek().kind == Tok::LBracket) {
      a.is_vector = true;
      get();
      if (peek().kind != Tok::RBracket) {
        for (;;) {
          a.vec.push_back(expect(Tok::Number, "a weight value").num);
          if (peek().kind != Tok::Comma) break;
          get();
        }
      }
      expect(Tok::RBracket, "']'");
      if (a.vec.empty()) fail("empty weight vector", a.at);
    } else {
      a.scalar = expect(Tok::Number, "a weight value").num;
    }
    expect(Tok::RBrace, "'}'");
    return a;
  }

  int parse_interval_bound() {
    Token t = expect(Tok::Number, "an interval bound");
    for (char c : t.text)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail("interval bound must be a non-negative integer", t);
    int value = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (res.ec != std::errc()) fail("interval bound out of range", t);
    return value;
  }

  Formula parse_predicate() {
    Token x = expect(Tok::Ident, "a formula");
    if (x.text != "x") fail("unknown identifier '" + x.text + "'", x);
    Cmp cmp;
    if (peek().kind == Tok::GeOp) {
      cmp = Cmp::Ge;
    } else if (peek().kind == Tok::LtOp) {
      cmp = Cmp::Lt;
    } else {
      fail("expected '>=' or '<' after 'x'", peek());
    }
    get();
    Token num = expect(Tok::Number, "a threshold value");
    return Formula::predicate(cmp, num.num);
  }

  Formula parse_primary() {
    if (peek().kind == Tok::LParen) {
      get();
      OrResult r = parse_or();
      expect(Tok::RParen, "')'");
      if (r.trailing) {
        if (r.f->kind() != FormulaKind::Predicate)
          fail("weight annotation has no operator to bind to", r.trailing_at);
        return Formula::predicate(r.f->cmp(), r.f->threshold(),
                                  r.f->weight() * *r.trailing);
      }
      return std::move(*r.f);
    }
    if (peek().kind == Tok::Ident) return parse_predicate();
    fail("expected a formula", peek());
  }

  Formula parse_unary() {
    if (peek().kind == Tok::Bang) {
      get();
      return Formula::negation(parse_unary());
    }
    if (peek().kind == Tok::Ident &&
        (peek().text == "G" || peek().text == "F")) {
      Token op = get();
      expect(Tok::LBracket, "'[' after the temporal operator");
      int tau1 = parse_interval_bound();
      expect(Tok::Comma, "','");
      int tau2 = parse_interval_bound();
      expect(Tok::RBracket, "']'");
      std::vector<double> weights;
      if (auto a = try_annotation()) {
        if (!a->is_vector)
          fail("temporal weight annotation must be a vector '{w=[...]}'", a->at);
        weights = std::move(a->vec);
      }
      Formula child = parse_unary();
      return op.text == "G"
                 ? Formula::always(tau1, tau2, std::move(child), std::move(weights))
                 : Formula::eventually(tau1, tau2, std::move(child),
                                       std::move(weights));
    }
    return parse_primary();
  }

  struct Operand {
    Formula f;
    std::optional<double> weight;
    Token weight_at;
  };

  Operand parse_operand() {
    Operand op{parse_unary(), std::nullopt, Token{}};
    if (auto a = try_annotation()) {
      if (a->is_vector)
        fail("vector weight annotation only follows a temporal interval", a->at);
      op.weight = a->scalar;
      op.weight_at = a->at;
    }
    return op;
  }

  OrResult parse_and() {
    std::vector<Operand> ops;
    ops.push_back(parse_operand());
    while (peek().kind == Tok::Amp) {
      get();
      ops.push_back(parse_operand());
    }
    if (ops.size() == 1)
      return {std::move(ops[0].f), ops[0].weight, ops[0].weight_at};
    std::vector<Formula> kids;
    std::vector<double> weights;
    kids.reserve(ops.size());
    weights.reserve(ops.size());
    for (Operand& op : ops) {
      kids.push_back(std::move(op.f));
      weights.push_back(op.weight.value_or(1.0));
    }
    return {Formula::conjunction(std::move(kids), std::move(weights)),
            std::nullopt, Token{}};
  }

  OrResult parse_or() {
    std::vector<OrResult> parts;
    parts.push_back(parse_and());
    while (peek().kind == Tok::Pipe) {
      get();
      parts.push_back(parse_and());
    }
    if (parts.size() == 1) return std::move(parts[0]);
    std::vector<Formula> kids;
    std::vector<double> weights;
    kids.reserve(parts.size());
    weights.reserve(parts.size());
    for (OrResult& p : parts) {
      kids.push_back(std::move(*p.f));
      weights.push_back(p.trailing.value_or(1.0));
    }
    return {Formula::disjunction(std::move(kids), std::move(weights)),
            std::nullopt, Token{}};
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

}  // namespace

Formula parse_formula(const std::string& text) {
  Parser parser(Lexer(text).run());
  return parser.run();
}

}  // namespace tlnn
