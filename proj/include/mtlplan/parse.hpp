// mtlplan/parse.hpp -- text -> Formula
//
// Grammar (loosest binding first):
//   formula  := impl (("U" | "R") window? formula)?      right-associative
//   impl     := or ("->" impl)?                          rewritten to !a | b
//   or       := and ("|" and)*
//   and      := unary ("&" unary)*
//   unary    := "!" unary | "X" unary
//            |  ("F" | "G") window? unary | primary
//   primary  := "(" formula ")" | "true" | "false" | ident
//   window   := "[" number "," (number | "inf") "]"
// Window bounds are in seconds; an omitted window means [0, inf].
#pragma once

#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtlplan/formula.hpp"

namespace mtlplan {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                           std::to_string(col) + ")"),
        line(line),
        col(col) {}
  int line;
  int col;
};

namespace detail {

enum class Tok {
  LParen, RParen, LBracket, RBracket, Comma,
  Bang, Amp, Pipe, Arrow,
  True, False, Next, Finally, Globally, Until, Release, Inf,
  Ident, Number, End,
};

struct Token {
  Tok type;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t = next_token();
      out.push_back(t);
      if (t.type == Tok::End) break;
    }
    return out;
  }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {  // comment to end of line
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++pos_; ++line_; col_ = 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_; ++col_;
      } else {
        break;
      }
    }
  }

  Token next_token() {
    if (pos_ >= src_.size()) return {Tok::End, "", 0.0, line_, col_};
    int line = line_, col = col_;
    char c = src_[pos_];
    auto single = [&](Tok t) {
      ++pos_; ++col_;
      return Token{t, std::string(1, c), 0.0, line, col};
    };
    switch (c) {
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case '[': return single(Tok::LBracket);
      case ']': return single(Tok::RBracket);
      case ',': return single(Tok::Comma);
      case '!': return single(Tok::Bang);
      case '&': return single(Tok::Amp);
      case '|': return single(Tok::Pipe);
      case '-':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
          pos_ += 2; col_ += 2;
          return {Tok::Arrow, "->", 0.0, line, col};
        }
        throw ParseError("unexpected character '-'", line, col);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
              src_[pos_] == 'e' || src_[pos_] == 'E' ||
              ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
               (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
        ++pos_;
      std::string text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(text.size());
      char* end = nullptr;
      double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size())
        throw ParseError("malformed number '" + text + "'", line, col);
      return {Tok::Number, text, v, line, col};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(text.size());
      Tok t = Tok::Ident;
      if (text == "true") t = Tok::True;
      else if (text == "false") t = Tok::False;
      else if (text == "X") t = Tok::Next;
      else if (text == "F") t = Tok::Finally;
      else if (text == "G") t = Tok::Globally;
      else if (text == "U") t = Tok::Until;
      else if (text == "R") t = Tok::Release;
      else if (text == "inf") t = Tok::Inf;
      return {t, text, 0.0, line, col};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula run() {
    Formula f = parse_until();
    expect(Tok::End, "unexpected trailing input");
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  bool accept(Tok t) {
    if (peek().type == t) { ++pos_; return true; }
    return false;
  }
  void expect(Tok t, const std::string& msg) {
    if (!accept(t)) throw ParseError(msg, peek().line, peek().col);
  }

  Interval parse_window_opt() {
    if (peek().type != Tok::LBracket) return Interval::unbounded();
    Token open = take();
    if (peek().type != Tok::Number)
      throw ParseError("expected number for window lower bound", peek().line, peek().col);
    double lo = take().num;
    expect(Tok::Comma, "expected ',' in window");
    double hi;
    if (peek().type == Tok::Inf) { take(); hi = std::numeric_limits<double>::infinity(); }
    else if (peek().type == Tok::Number) hi = take().num;
    else throw ParseError("expected number or 'inf' for window upper bound", peek().line, peek().col);
    expect(Tok::RBracket, "expected ']' to close window");
    if (hi < lo) throw ParseError("window upper bound below lower bound", open.line, open.col);
    return Interval(lo, hi);
  }

  Formula parse_until() {
    Formula lhs = parse_impl();
    if (peek().type == Tok::Until || peek().type == Tok::Release) {
      Token op = take();
      Interval w = parse_window_opt();
      Formula rhs = parse_until();  // right-associative
      return op.type == Tok::Until ? Formula::until(w, std::move(lhs), std::move(rhs))
                                   : Formula::release(w, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula parse_impl() {
    Formula lhs = parse_or();
    if (accept(Tok::Arrow)) {
      Formula rhs = parse_impl();
      return Formula::disjunction({Formula::negation(std::move(lhs)), std::move(rhs)});
    }
    return lhs;
  }

  Formula parse_or() {
    std::vector<Formula> kids{parse_and()};
    while (accept(Tok::Pipe)) kids.push_back(parse_and());
    if (kids.size() == 1) return std::move(kids[0]);
    return Formula::disjunction(std::move(kids));
  }

  Formula parse_and() {
    std::vector<Formula> kids{parse_unary()};
    while (accept(Tok::Amp)) kids.push_back(parse_unary());
    if (kids.size() == 1) return std::move(kids[0]);
    return Formula::conjunction(std::move(kids));
  }

  Formula parse_unary() {
    switch (peek().type) {
      case Tok::Bang: take(); return Formula::negation(parse_unary());
      case Tok::Next: take(); return Formula::next(parse_unary());
      case Tok::Finally: {
        take();
        Interval w = parse_window_opt();
        return Formula::eventually(w, parse_unary());
      }
      case Tok::Globally: {
        take();
        Interval w = parse_window_opt();
        return Formula::always(w, parse_unary());
      }
      default: return parse_primary();
    }
  }

  Formula parse_primary() {
    switch (peek().type) {
      case Tok::LParen: {
        take();
        Formula f = parse_until();
        expect(Tok::RParen, "expected ')'");
        return f;
      }
      case Tok::True: take(); return Formula::constant(true);
      case Tok::False: take(); return Formula::constant(false);
      case Tok::Ident: return Formula::atom(take().text);
      case Tok::Inf:
        throw ParseError("'inf' is only valid inside a window", peek().line, peek().col);
      case Tok::End:
        throw ParseError("unexpected end of specification", peek().line, peek().col);
      default:
        throw ParseError("unexpected token '" + peek().text + "'", peek().line, peek().col);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse_formula(const std::string& text) {
  detail::Lexer lex(text);
  detail::Parser parser(lex.run());
  return parser.run();
}

}  // namespace mtlplan
