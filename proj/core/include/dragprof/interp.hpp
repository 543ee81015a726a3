#pragma once

// Tree-walking evaluator for a small Scheme subset. Pairs and vectors are
// allocated through the Runtime so every creation and use is profiled;
// closures and environment frames live outside the profiled heap and act
// as roots for whatever they capture.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dragprof/heap.hpp"
#include "dragprof/runtime.hpp"

namespace dragprof {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Reader output: the s-expression before compilation to Expr.
struct Datum {
  enum class Kind { Number, Boolean, Symbol, List, Vector };

  Kind kind = Kind::List;
  std::int64_t number = 0;
  bool boolean = false;
  SymbolId symbol;
  std::vector<Datum> items;            // List and Vector elements
  std::shared_ptr<const Datum> tail;   // dotted tail of an improper list
  SourcePos pos;

  bool is_symbol(SymbolId s) const { return kind == Kind::Symbol && symbol == s; }
  bool is_empty_list() const { return kind == Kind::List && items.empty() && !tail; }
};

struct Expr;

struct Literal {
  Value value;
};
struct Var {
  SymbolId name;
};
struct Quote {
  const Datum* datum;
};
struct If {
  const Expr* test;
  const Expr* then;
  const Expr* otherwise;  // may be null
};
struct Binding {
  SymbolId name;
  const Expr* init;
};
struct Lambda {
  std::vector<SymbolId> params;
  std::optional<SymbolId> rest;
  const Expr* body;
  std::optional<SymbolId> name;
};
struct Let {
  std::vector<Binding> bindings;
  const Expr* body;
};
/// (let name ((p init) ...) body): `name` is bound, in a frame of its own,
/// to `loop`, which is then applied to the inits.
struct NamedLet {
  SymbolId name;
  std::vector<const Expr*> inits;
  const Lambda* loop;
};
struct Begin {
  std::vector<const Expr*> body;
};
struct Define {
  SymbolId name;
  const Expr* value;
};
struct SetVar {
  SymbolId name;
  const Expr* value;
};
struct Apply {
  const Expr* fn;
  std::vector<const Expr*> args;
};

struct Expr {
  std::variant<Literal, Var, Quote, If, Let, NamedLet, Lambda, Begin, Define, SetVar, Apply> node;
  SourcePos pos;
};

struct TopLevelForm {
  const Expr* expr;
  SourcePos pos;
  std::string snippet;
};

/// Parsed program. Owns every Expr and Datum it references, so closures
/// created while running it stay valid as long as the Program does.
class Program {
 public:
  Program() = default;
  Program(Program&&) = default;
  Program& operator=(Program&&) = default;
  Program(const Program&) = delete;
  Program& operator=(const Program&) = delete;

  const std::vector<TopLevelForm>& forms() const { return forms_; }

 private:
  friend class Compiler;

  std::deque<Expr> exprs_;
  std::deque<Lambda> lambdas_;
  std::deque<Datum> data_;
  std::vector<TopLevelForm> forms_;
};

/// Reads `source` into data, without compiling. Throws SyntaxError.
std::vector<Datum> read_all(std::string_view source, SymbolTable& symbols);

/// Reads and compiles `source`. Throws SyntaxError with line and column.
Program parse(std::string_view source, SymbolTable& symbols);

class Frame final : public Traceable {
 public:
  explicit Frame(std::shared_ptr<Frame> parent) : parent_(std::move(parent)) {}

  Value* find(SymbolId name);
  void define(SymbolId name, Value v);
  const std::shared_ptr<Frame>& parent() const { return parent_; }

  void trace(SlotVisitor& visitor) override;

 private:
  std::vector<std::pair<SymbolId, Value>> bindings_;
  std::shared_ptr<Frame> parent_;
};

class Interpreter;

class Procedure : public Traceable {
 public:
  enum class Kind { Closure, Primitive };
  explicit Procedure(Kind k) : kind_(k) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class Closure final : public Procedure {
 public:
  Closure(const Lambda* lambda, std::shared_ptr<Frame> env)
      : Procedure(Kind::Closure), lambda_(lambda), env_(std::move(env)) {}

  const Lambda& lambda() const { return *lambda_; }
  const std::shared_ptr<Frame>& env() const { return env_; }
  std::optional<SymbolId> name;

  void trace(SlotVisitor& visitor) override { visitor.visit_traceable(env_.get()); }

 private:
  const Lambda* lambda_;
  std::shared_ptr<Frame> env_;
};

enum class ArgType { Any, Number, Pair, Vector, Index, List };

struct PrimitiveSpec {
  std::string_view name;
  int min_args;
  int max_args;  // -1: variadic
  ArgType first;
  ArgType second;
  ArgType third;
  ArgType rest;
  Value (*fn)(Interpreter&, std::span<Value>);
};

class Primitive final : public Procedure {
 public:
  explicit Primitive(const PrimitiveSpec* spec) : Procedure(Kind::Primitive), spec_(spec) {}
  const PrimitiveSpec& spec() const { return *spec_; }
  void trace(SlotVisitor&) override {}

 private:
  const PrimitiveSpec* spec_;
};

std::span<const PrimitiveSpec> primitive_table();

/// Shadow stack of evaluator temporaries. Pins are strictly LIFO.
class RootStack {
 public:
  class [[nodiscard]] Pin {
   public:
    explicit Pin(RootStack& s) : stack_(s) {}
    ~Pin() { stack_.entries_.pop_back(); }
    Pin(const Pin&) = delete;
    Pin& operator=(const Pin&) = delete;

   private:
    RootStack& stack_;
  };

  Pin pin(Value& v);
  Pin pin(std::vector<Value>& values);
  Pin pin(std::shared_ptr<Frame>& frame);

  void trace(SlotVisitor& visitor);
  std::size_t depth() const { return entries_.size(); }

 private:
  using Entry = std::variant<Value*, std::vector<Value>*, std::shared_ptr<Frame>*>;
  std::vector<Entry> entries_;
};

struct EvalConfig {
  RuntimeConfig runtime;
  std::string source_name = "<input>";
  std::ostream* out = nullptr;  // display/newline target; null discards
  // Nested evaluations allowed; each costs roughly 0.5 KiB of native stack
  // in optimized builds. Whichever limit is hit first raises RuntimeError.
  // The byte budget is further capped by the process stack limit.
  std::size_t max_depth = 10000;
  std::size_t max_stack_bytes = std::size_t{6} << 20;
};

class Interpreter {
 public:
  explicit Interpreter(EvalConfig config = {});
  ~Interpreter();

  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  Program parse(std::string_view source) { return dragprof::parse(source, symbols_); }

  /// Evaluates every top-level form in order; returns the last value. The
  /// interpreter keeps the program alive. The last value stays rooted.
  Value run(Program program);
  Value run(std::string_view source) { return run(parse(source)); }

  /// Final collection plus finalize. No evaluation afterwards.
  TraceLog finish();

  /// Position and text of the top-level form being (or last) evaluated.
  const TopLevelForm* current_form() const { return current_form_; }

  std::string write(const Value& v) const;

  Runtime& runtime() { return runtime_; }
  const Runtime& runtime() const { return runtime_; }
  SymbolTable& symbols() { return symbols_; }
  const EvalConfig& config() const { return config_; }
  RootSource root_source() { return runtime_.root_source(); }
  std::ostream* out() const { return config_.out; }

  std::optional<Value> global(std::string_view name);

  // Used by primitives.
  [[noreturn]] void fail(std::string_view primitive, const std::string& message) const;
  Value list_from(std::span<const Value> items, Value tail = Value::nil());

 private:
  friend class EvalDepth;

  void trace_roots(SlotVisitor& visitor);
  Value eval(const Expr* expr, std::shared_ptr<Frame> env);
  Value lookup(SymbolId name, const std::shared_ptr<Frame>& env) const;
  void assign(SymbolId name, const Value& v, const std::shared_ptr<Frame>& env);
  Value materialize(const Datum& datum);
  Value call_primitive(const Primitive& prim, std::vector<Value>& args);
  std::shared_ptr<Frame> bind_arguments(const Closure& closure, std::vector<Value>& args);
  void check_argument(const PrimitiveSpec& spec, std::size_t index, ArgType type,
                      const Value& v) const;

  EvalConfig config_;
  SymbolTable symbols_;
  std::vector<std::optional<Value>> globals_;
  RootStack roots_;
  Value last_value_;
  Runtime runtime_;
  std::vector<std::unique_ptr<Program>> programs_;
  const TopLevelForm* current_form_ = nullptr;
  std::size_t depth_ = 0;
  std::uintptr_t stack_base_ = 0;
  std::size_t stack_budget_;
};

struct EvalResult {
  Value value;
  std::string printed;
  TraceLog log;
  CollectionSummary collections;
};

/// One-shot run: parse, evaluate, finish.
EvalResult evaluate(std::string_view source, const EvalConfig& config);

}  // namespace dragprof
