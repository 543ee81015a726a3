#include <charconv>

#include <fmt/format.h>

#include "dragprof/errors.hpp"
#include "dragprof/interp.hpp"

namespace dragprof {

namespace {

enum class TokenKind { LParen, RParen, VectorOpen, Quote, Dot, Atom, End };

struct Token {
  TokenKind kind;
  std::string_view text;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    SourcePos pos{line_, column_};
    if (at_end()) return {TokenKind::End, {}, pos};
    char c = src_[i_];
    if (c == '(' || c == '[') {
      advance();
      return {TokenKind::LParen, {}, pos};
    }
    if (c == ')' || c == ']') {
      advance();
      return {TokenKind::RParen, {}, pos};
    }
    if (c == '\'') {
      advance();
      return {TokenKind::Quote, {}, pos};
    }
    if (c == '"') throw SyntaxError(pos.line, pos.column, "string literals are not supported");
    if (c == '#' && i_ + 1 < src_.size() && src_[i_ + 1] == '(') {
      advance();
      advance();
      return {TokenKind::VectorOpen, {}, pos};
    }
    std::size_t start = i_;
    while (!at_end() && !delimiter(src_[i_])) advance();
    std::string_view text = src_.substr(start, i_ - start);
    if (text == ".") return {TokenKind::Dot, text, pos};
    return {TokenKind::Atom, text, pos};
  }

 private:
  static bool delimiter(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '(' || c == ')' || c == '[' ||
           c == ']' || c == '\'' || c == '"' || c == ';';
  }

  bool at_end() const { return i_ >= src_.size(); }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++i_;
  }

  void skip_space() {
    while (!at_end()) {
      char c = src_[i_];
      if (c == ';') {
        while (!at_end() && src_[i_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Reader {
 public:
  Reader(std::string_view src, SymbolTable& symbols) : lexer_(src), symbols_(symbols) {
    look_ = lexer_.next();
  }

  bool done() const { return look_.kind == TokenKind::End; }

  // Reader, compiler and Datum destruction all recurse on nesting.
  static constexpr std::size_t kMaxNesting = 1000;

  Datum read() {
    Token t = take();
    if (nesting_ >= kMaxNesting) {
      throw SyntaxError(t.pos.line, t.pos.column,
                        fmt::format("nesting deeper than {} levels", kMaxNesting));
    }
    ++nesting_;
    struct Leave {
      std::size_t& n;
      ~Leave() { --n; }
    } leave{nesting_};
    switch (t.kind) {
      case TokenKind::End:
        throw SyntaxError(t.pos.line, t.pos.column, "unexpected end of input");
      case TokenKind::RParen:
        throw SyntaxError(t.pos.line, t.pos.column, "unexpected ')'");
      case TokenKind::Dot:
        throw SyntaxError(t.pos.line, t.pos.column, "unexpected '.'");
      case TokenKind::Quote: {
        Datum q;
        q.kind = Datum::Kind::List;
        q.pos = t.pos;
        Datum sym;
        sym.kind = Datum::Kind::Symbol;
        sym.symbol = symbols_.intern("quote");
        sym.pos = t.pos;
        q.items.push_back(std::move(sym));
        q.items.push_back(read());
        return q;
      }
      case TokenKind::LParen: return read_list(t.pos);
      case TokenKind::VectorOpen: return read_vector(t.pos);
      case TokenKind::Atom: return atom(t);
    }
    throw SyntaxError(t.pos.line, t.pos.column, "unreadable token");
  }

 private:
  Token take() {
    Token t = look_;
    look_ = lexer_.next();
    return t;
  }

  Datum read_list(SourcePos pos) {
    Datum d;
    d.kind = Datum::Kind::List;
    d.pos = pos;
    for (;;) {
      if (look_.kind == TokenKind::End) {
        throw SyntaxError(look_.pos.line, look_.pos.column,
                          fmt::format("unexpected end of input: unclosed '(' opened at {}:{}",
                                      pos.line, pos.column));
      }
      if (look_.kind == TokenKind::RParen) {
        take();
        return d;
      }
      if (look_.kind == TokenKind::Dot) {
        Token dot = take();
        if (d.items.empty()) throw SyntaxError(dot.pos.line, dot.pos.column, "misplaced '.'");
        d.tail = std::make_shared<const Datum>(read());
        if (look_.kind != TokenKind::RParen) {
          throw SyntaxError(look_.pos.line, look_.pos.column, "expected ')' after dotted tail");
        }
        take();
        return d;
      }
      d.items.push_back(read());
    }
  }

  Datum read_vector(SourcePos pos) {
    Datum d;
    d.kind = Datum::Kind::Vector;
    d.pos = pos;
    for (;;) {
      if (look_.kind == TokenKind::End) {
        throw SyntaxError(look_.pos.line, look_.pos.column, "unexpected end of input in vector");
      }
      if (look_.kind == TokenKind::RParen) {
        take();
        return d;
      }
      d.items.push_back(read());
    }
  }

  Datum atom(const Token& t) {
    Datum d;
    d.pos = t.pos;
    std::string_view s = t.text;
    if (s == "#t" || s == "#true" || s == "#f" || s == "#false") {
      d.kind = Datum::Kind::Boolean;
      d.boolean = s == "#t" || s == "#true";
      return d;
    }
    if (s[0] == '#') throw SyntaxError(t.pos.line, t.pos.column, fmt::format("bad syntax '{}'", s));
    std::string_view digits = s;
    if (digits.size() > 1 && (digits[0] == '-' || digits[0] == '+')) digits.remove_prefix(1);
    bool numeric = !digits.empty() && digits.find_first_not_of("0123456789") == std::string_view::npos;
    if (numeric) {
      std::int64_t v = 0;
      const char* begin = s.data() + (s[0] == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw SyntaxError(t.pos.line, t.pos.column, fmt::format("integer out of range '{}'", s));
      }
      d.kind = Datum::Kind::Number;
      d.number = v;
      return d;
    }
    d.kind = Datum::Kind::Symbol;
    d.symbol = symbols_.intern(s);
    return d;
  }

  Lexer lexer_;
  SymbolTable& symbols_;
  Token look_;
  std::size_t nesting_ = 0;
};

std::string line_snippet(std::string_view src, std::size_t line) {
  std::size_t start = 0;
  for (std::size_t l = 1; l < line && start != std::string_view::npos; ++l) {
    start = src.find('\n', start);
    if (start != std::string_view::npos) ++start;
  }
  if (start == std::string_view::npos || start >= src.size()) return {};
  std::size_t end = src.find('\n', start);
  std::string_view text = src.substr(start, end == std::string_view::npos ? end : end - start);
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text.size() > 60) return std::string(text.substr(0, 57)) + "...";
  return std::string(text);
}

}  // namespace

std::vector<Datum> read_all(std::string_view source, SymbolTable& symbols) {
  Reader reader(source, symbols);
  std::vector<Datum> out;
  while (!reader.done()) out.push_back(reader.read());
  return out;
}

class Compiler {
 public:
  Compiler(Program& program, SymbolTable& symbols) : p_(program), sym_(symbols) {
    quote_ = sym_.intern("quote");
    if_ = sym_.intern("if");
    define_ = sym_.intern("define");
    set_ = sym_.intern("set!");
    lambda_ = sym_.intern("lambda");
    let_ = sym_.intern("let");
    let_star_ = sym_.intern("let*");
    letrec_ = sym_.intern("letrec");
    begin_ = sym_.intern("begin");
    cond_ = sym_.intern("cond");
    else_ = sym_.intern("else");
    and_ = sym_.intern("and");
    or_ = sym_.intern("or");
    when_ = sym_.intern("when");
    unless_ = sym_.intern("unless");
    or_temp_ = sym_.intern(" or-temp");
  }

  const Expr* compile(const Datum& d) {
    switch (d.kind) {
      case Datum::Kind::Number: return make(Literal{Value::number(d.number)}, d.pos);
      case Datum::Kind::Boolean: return make(Literal{Value::boolean(d.boolean)}, d.pos);
      case Datum::Kind::Symbol: return make(Var{d.symbol}, d.pos);
      case Datum::Kind::Vector: return make(Quote{&d}, d.pos);
      case Datum::Kind::List: break;
    }
    if (d.items.empty()) fail(d, "empty combination '()' (quote it for the empty list)");
    if (d.tail) fail(d, "dotted list in expression position");
    const Datum& head = d.items[0];
    if (head.kind == Datum::Kind::Symbol) {
      SymbolId s = head.symbol;
      if (s == quote_) return compile_quote(d);
      if (s == if_) return compile_if(d);
      if (s == define_) return compile_define(d);
      if (s == set_) return compile_set(d);
      if (s == lambda_) return compile_lambda(d);
      if (s == let_) return compile_let(d);
      if (s == let_star_) return compile_let_star(d, 0);
      if (s == letrec_) return compile_letrec(d);
      if (s == begin_) return compile_begin(d);
      if (s == cond_) return compile_cond(d, 1);
      if (s == and_) return compile_and(d, 1);
      if (s == or_) return compile_or(d, 1);
      if (s == when_ || s == unless_) return compile_when(d, s == unless_);
    }
    Apply app{compile(head), {}};
    for (std::size_t i = 1; i < d.items.size(); ++i) app.args.push_back(compile(d.items[i]));
    return make(std::move(app), d.pos);
  }

 private:
  template <typename Node>
  const Expr* make(Node node, SourcePos pos) {
    p_.exprs_.push_back(Expr{std::move(node), pos});
    return &p_.exprs_.back();
  }

  [[noreturn]] static void fail(const Datum& d, const std::string& what) {
    throw SyntaxError(d.pos.line, d.pos.column, what);
  }

  SymbolId expect_symbol(const Datum& d, const char* what) {
    if (d.kind != Datum::Kind::Symbol) fail(d, fmt::format("expected {}", what));
    return d.symbol;
  }

  const Expr* unspecified(SourcePos pos) { return make(Literal{Value::unspecified()}, pos); }

  // body ... starting at items[from]
  const Expr* compile_body(const Datum& d, std::size_t from) {
    if (from >= d.items.size()) fail(d, "empty body");
    if (from + 1 == d.items.size()) return compile(d.items[from]);
    Begin b;
    for (std::size_t i = from; i < d.items.size(); ++i) b.body.push_back(compile(d.items[i]));
    return make(std::move(b), d.items[from].pos);
  }

  const Expr* compile_quote(const Datum& d) {
    if (d.items.size() != 2) fail(d, "quote takes exactly one datum");
    const Datum& q = d.items[1];
    switch (q.kind) {
      case Datum::Kind::Number: return make(Literal{Value::number(q.number)}, d.pos);
      case Datum::Kind::Boolean: return make(Literal{Value::boolean(q.boolean)}, d.pos);
      case Datum::Kind::Symbol: return make(Literal{Value::symbol(q.symbol)}, d.pos);
      default: break;
    }
    if (q.is_empty_list()) return make(Literal{Value::nil()}, d.pos);
    return make(Quote{&q}, d.pos);
  }

  const Expr* compile_if(const Datum& d) {
    if (d.items.size() != 3 && d.items.size() != 4) fail(d, "if takes 2 or 3 operands");
    const Expr* otherwise = d.items.size() == 4 ? compile(d.items[3]) : nullptr;
    return make(If{compile(d.items[1]), compile(d.items[2]), otherwise}, d.pos);
  }

  const Expr* compile_define(const Datum& d) {
    if (d.items.size() < 3) fail(d, "define needs a name and a value");
    const Datum& target = d.items[1];
    if (target.kind == Datum::Kind::Symbol) {
      if (d.items.size() != 3) fail(d, "define of a variable takes one value");
      return make(Define{target.symbol, compile(d.items[2])}, d.pos);
    }
    if (target.kind != Datum::Kind::List || target.items.empty()) fail(target, "bad define target");
    SymbolId name = expect_symbol(target.items[0], "procedure name");
    Lambda lam = lambda_shape(target, 1);
    lam.body = compile_body(d, 2);
    lam.name = name;
    return make(Define{name, make(std::move(lam), d.pos)}, d.pos);
  }

  // parameter list items[from..] plus optional dotted rest
  Lambda lambda_shape(const Datum& formals, std::size_t from) {
    Lambda lam{};
    for (std::size_t i = from; i < formals.items.size(); ++i) {
      lam.params.push_back(expect_symbol(formals.items[i], "parameter name"));
    }
    if (formals.tail) lam.rest = expect_symbol(*formals.tail, "rest parameter name");
    return lam;
  }

  const Expr* compile_set(const Datum& d) {
    if (d.items.size() != 3) fail(d, "set! takes a name and a value");
    return make(SetVar{expect_symbol(d.items[1], "variable name"), compile(d.items[2])}, d.pos);
  }

  const Expr* compile_lambda(const Datum& d) {
    if (d.items.size() < 3) fail(d, "lambda needs formals and a body");
    const Datum& formals = d.items[1];
    Lambda lam{};
    if (formals.kind == Datum::Kind::Symbol) {
      lam.rest = formals.symbol;
    } else if (formals.kind == Datum::Kind::List) {
      lam = lambda_shape(formals, 0);
    } else {
      fail(formals, "bad lambda formals");
    }
    lam.body = compile_body(d, 2);
    return make(std::move(lam), d.pos);
  }

  std::vector<Binding> bindings(const Datum& list) {
    if (list.kind != Datum::Kind::List || list.tail) fail(list, "expected a binding list");
    std::vector<Binding> out;
    for (const Datum& b : list.items) {
      if (b.kind != Datum::Kind::List || b.items.size() != 2 || b.tail) {
        fail(b, "binding must be (name expr)");
      }
      out.push_back(Binding{expect_symbol(b.items[0], "binding name"), compile(b.items[1])});
    }
    return out;
  }

  const Expr* compile_let(const Datum& d) {
    if (d.items.size() < 3) fail(d, "let needs bindings and a body");
    if (d.items[1].kind == Datum::Kind::Symbol) {
      if (d.items.size() < 4) fail(d, "named let needs bindings and a body");
      SymbolId name = d.items[1].symbol;
      std::vector<Binding> bs = bindings(d.items[2]);
      Lambda lam{};
      NamedLet nl{name, {}, nullptr};
      for (const Binding& b : bs) {
        lam.params.push_back(b.name);
        nl.inits.push_back(b.init);
      }
      lam.body = compile_body(d, 3);
      lam.name = name;
      p_.lambdas_.push_back(std::move(lam));
      nl.loop = &p_.lambdas_.back();
      return make(std::move(nl), d.pos);
    }
    return make(Let{bindings(d.items[1]), compile_body(d, 2)}, d.pos);
  }

  const Expr* compile_let_star(const Datum& d, std::size_t index) {
    if (d.items.size() < 3) fail(d, "let* needs bindings and a body");
    const Datum& list = d.items[1];
    if (list.kind != Datum::Kind::List || list.tail) fail(list, "expected a binding list");
    if (index >= list.items.size()) {
      if (list.items.empty()) return make(Let{{}, compile_body(d, 2)}, d.pos);
      return compile_body(d, 2);
    }
    const Datum& b = list.items[index];
    if (b.kind != Datum::Kind::List || b.items.size() != 2) fail(b, "binding must be (name expr)");
    Binding one{expect_symbol(b.items[0], "binding name"), compile(b.items[1])};
    return make(Let{{one}, compile_let_star(d, index + 1)}, d.pos);
  }

  // (letrec ((f e) ...) body) => (let () (define f e) ... body)
  const Expr* compile_letrec(const Datum& d) {
    if (d.items.size() < 3) fail(d, "letrec needs bindings and a body");
    std::vector<Binding> bs = bindings(d.items[1]);
    Begin b;
    for (const Binding& x : bs) b.body.push_back(make(Define{x.name, x.init}, d.pos));
    for (std::size_t i = 2; i < d.items.size(); ++i) b.body.push_back(compile(d.items[i]));
    return make(Let{{}, make(std::move(b), d.pos)}, d.pos);
  }

  const Expr* compile_begin(const Datum& d) {
    if (d.items.size() == 1) return unspecified(d.pos);
    return compile_body(d, 1);
  }

  const Expr* compile_cond(const Datum& d, std::size_t index) {
    if (index >= d.items.size()) return unspecified(d.pos);
    const Datum& clause = d.items[index];
    if (clause.kind != Datum::Kind::List || clause.items.empty() || clause.tail) {
      fail(clause, "cond clause must be (test expr ...)");
    }
    if (clause.items[0].is_symbol(else_)) {
      if (index + 1 != d.items.size()) fail(clause, "else must be the last cond clause");
      return compile_body(clause, 1);
    }
    if (clause.items.size() == 1) {
      // (test) yields the test value itself
      return make_or(compile(clause.items[0]), compile_cond(d, index + 1), clause.pos);
    }
    return make(If{compile(clause.items[0]), compile_body(clause, 1), compile_cond(d, index + 1)},
                clause.pos);
  }

  const Expr* compile_and(const Datum& d, std::size_t index) {
    if (index >= d.items.size()) return make(Literal{Value::boolean(true)}, d.pos);
    if (index + 1 == d.items.size()) return compile(d.items[index]);
    return make(If{compile(d.items[index]), compile_and(d, index + 1),
                   make(Literal{Value::boolean(false)}, d.pos)},
                d.items[index].pos);
  }

  const Expr* make_or(const Expr* first, const Expr* rest, SourcePos pos) {
    const Expr* temp = make(Var{or_temp_}, pos);
    return make(Let{{Binding{or_temp_, first}}, make(If{temp, temp, rest}, pos)}, pos);
  }

  const Expr* compile_or(const Datum& d, std::size_t index) {
    if (index >= d.items.size()) return make(Literal{Value::boolean(false)}, d.pos);
    if (index + 1 == d.items.size()) return compile(d.items[index]);
    return make_or(compile(d.items[index]), compile_or(d, index + 1), d.items[index].pos);
  }

  const Expr* compile_when(const Datum& d, bool negate) {
    if (d.items.size() < 3) fail(d, "when/unless needs a test and a body");
    const Expr* test = compile(d.items[1]);
    const Expr* body = compile_body(d, 2);
    if (negate) return make(If{test, unspecified(d.pos), body}, d.pos);
    return make(If{test, body, nullptr}, d.pos);
  }

 public:
  void add_form(const Datum& d, std::string_view source) {
    p_.forms_.push_back(TopLevelForm{compile(d), d.pos, line_snippet(source, d.pos.line)});
  }

  Program& program() { return p_; }
  std::deque<Datum>& data() { return p_.data_; }

 private:
  Program& p_;
  SymbolTable& sym_;
  SymbolId quote_, if_, define_, set_, lambda_, let_, let_star_, letrec_, begin_, cond_, else_,
      and_, or_, when_, unless_, or_temp_;
};

Program parse(std::string_view source, SymbolTable& symbols) {
  Program program;
  Compiler compiler(program, symbols);
  for (Datum& d : read_all(source, symbols)) {
    compiler.data().push_back(std::move(d));
    compiler.add_form(compiler.data().back(), source);
  }
  return program;
}

}  // namespace dragprof
