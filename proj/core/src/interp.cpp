#include <sys/resource.h>

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "dragprof/errors.hpp"
#include "dragprof/interp.hpp"

namespace dragprof {

Value* Frame::find(SymbolId name) {
  for (auto& [sym, value] : bindings_) {
    if (sym == name) return &value;
  }
  return nullptr;
}

void Frame::define(SymbolId name, Value v) {
  if (Value* slot = find(name)) {
    *slot = std::move(v);
    return;
  }
  bindings_.emplace_back(name, std::move(v));
}

void Frame::trace(SlotVisitor& visitor) {
  for (auto& [sym, value] : bindings_) visitor.visit(value);
  visitor.visit_traceable(parent_.get());
}

RootStack::Pin RootStack::pin(Value& v) {
  entries_.emplace_back(&v);
  return Pin(*this);
}

RootStack::Pin RootStack::pin(std::vector<Value>& values) {
  entries_.emplace_back(&values);
  return Pin(*this);
}

RootStack::Pin RootStack::pin(std::shared_ptr<Frame>& frame) {
  entries_.emplace_back(&frame);
  return Pin(*this);
}

void RootStack::trace(SlotVisitor& visitor) {
  for (const Entry& e : entries_) {
    if (auto* v = std::get_if<Value*>(&e)) {
      visitor.visit(**v);
    } else if (auto* vs = std::get_if<std::vector<Value>*>(&e)) {
      for (Value& v : **vs) visitor.visit(v);
    } else {
      visitor.visit_traceable(std::get<std::shared_ptr<Frame>*>(e)->get());
    }
  }
}

namespace {

// Headroom left below the soft stack limit for primitives, the collector and
// whatever called into the interpreter.
constexpr std::size_t kStackReserve = std::size_t{512} << 10;

std::size_t stack_budget(std::size_t configured) {
  rlimit limit{};
  if (getrlimit(RLIMIT_STACK, &limit) != 0 || limit.rlim_cur == RLIM_INFINITY) return configured;
  auto soft = static_cast<std::size_t>(limit.rlim_cur);
  return std::min(configured, soft > 2 * kStackReserve ? soft - kStackReserve : soft / 2);
}

}  // namespace

// Bounds both the eval nesting depth and the native stack consumed since the
// outermost eval, so deep non-tail recursion fails cleanly instead of
// overflowing the thread stack.
class EvalDepth {
 public:
  explicit EvalDepth(Interpreter& interp) : interp_(interp) {
    char marker = 0;
    auto here = reinterpret_cast<std::uintptr_t>(&marker);
    if (interp_.depth_ == 0) interp_.stack_base_ = here;
    std::uintptr_t used = interp_.stack_base_ > here ? interp_.stack_base_ - here : 0;
    if (interp_.depth_ + 1 > interp_.config_.max_depth || used > interp_.stack_budget_) {
      throw RuntimeError(fmt::format("maximum recursion depth exceeded ({} nested evaluations)",
                                     interp_.depth_));
    }
    ++interp_.depth_;
  }
  ~EvalDepth() { --interp_.depth_; }
  EvalDepth(const EvalDepth&) = delete;
  EvalDepth& operator=(const EvalDepth&) = delete;

 private:
  Interpreter& interp_;
};

Interpreter::Interpreter(EvalConfig config)
    : config_(std::move(config)),
      runtime_(config_.runtime, [this](SlotVisitor& v) { trace_roots(v); }),
      stack_budget_(stack_budget(config_.max_stack_bytes)) {
  for (const PrimitiveSpec& spec : primitive_table()) {
    SymbolId s = symbols_.intern(spec.name);
    if (globals_.size() <= s.index) globals_.resize(s.index + 1);
    globals_[s.index] = Value::procedure(std::make_shared<Primitive>(&spec));
  }
}

Interpreter::~Interpreter() = default;

void Interpreter::trace_roots(SlotVisitor& visitor) {
  for (auto& g : globals_) {
    if (g) visitor.visit(*g);
  }
  visitor.visit(last_value_);
  roots_.trace(visitor);
}

std::optional<Value> Interpreter::global(std::string_view name) {
  SymbolId s = symbols_.intern(name);
  if (s.index < globals_.size()) return globals_[s.index];
  return std::nullopt;
}

void Interpreter::fail(std::string_view primitive, const std::string& message) const {
  throw RuntimeError(fmt::format("{}: {}", primitive, message));
}

Value Interpreter::run(Program program) {
  programs_.push_back(std::make_unique<Program>(std::move(program)));
  const Program& p = *programs_.back();
  for (const TopLevelForm& form : p.forms()) {
    current_form_ = &form;
    last_value_ = eval(form.expr, nullptr);
  }
  return last_value_;
}

TraceLog Interpreter::finish() { return runtime_.finish(config_.source_name); }

Value Interpreter::lookup(SymbolId name, const std::shared_ptr<Frame>& env) const {
  for (Frame* f = env.get(); f != nullptr; f = f->parent().get()) {
    if (Value* v = f->find(name)) return *v;
  }
  if (name.index < globals_.size() && globals_[name.index]) return *globals_[name.index];
  throw RuntimeError(fmt::format("unbound variable '{}'", symbols_.name(name)));
}

void Interpreter::assign(SymbolId name, const Value& v, const std::shared_ptr<Frame>& env) {
  for (Frame* f = env.get(); f != nullptr; f = f->parent().get()) {
    if (Value* slot = f->find(name)) {
      *slot = v;
      return;
    }
  }
  if (name.index < globals_.size() && globals_[name.index]) {
    globals_[name.index] = v;
    return;
  }
  throw RuntimeError(fmt::format("set! of unbound variable '{}'", symbols_.name(name)));
}

Value Interpreter::list_from(std::span<const Value> items, Value tail) {
  // Each alloc_pair pins its own operands; `items` must already be rooted.
  Value acc = std::move(tail);
  for (std::size_t i = items.size(); i-- > 0;) acc = runtime_.alloc_pair(items[i], acc);
  return acc;
}

Value Interpreter::materialize(const Datum& d) {
  switch (d.kind) {
    case Datum::Kind::Number: return Value::number(d.number);
    case Datum::Kind::Boolean: return Value::boolean(d.boolean);
    case Datum::Kind::Symbol: return Value::symbol(d.symbol);
    case Datum::Kind::List:
    case Datum::Kind::Vector: break;
  }
  std::vector<Value> items;
  auto items_pin = roots_.pin(items);
  items.reserve(d.items.size());
  for (const Datum& item : d.items) items.push_back(materialize(item));
  if (d.kind == Datum::Kind::Vector) {
    Value vec = runtime_.alloc_vector(static_cast<std::int64_t>(items.size()), Value::nil());
    for (std::size_t i = 0; i < items.size(); ++i) runtime_.write_slot(vec, i, items[i]);
    return vec;
  }
  Value tail = d.tail ? materialize(*d.tail) : Value::nil();
  auto tail_pin = roots_.pin(tail);
  return list_from(items, tail);
}

std::shared_ptr<Frame> Interpreter::bind_arguments(const Closure& closure,
                                                   std::vector<Value>& args) {
  const Lambda& lam = closure.lambda();
  const std::size_t fixed = lam.params.size();
  if (args.size() < fixed || (!lam.rest && args.size() > fixed)) {
    std::string name = closure.name ? symbols_.name(*closure.name) : "#<lambda>";
    throw RuntimeError(fmt::format("{}: expected {}{} argument(s), got {}", name,
                                   lam.rest ? "at least " : "", fixed, args.size()));
  }
  // The rest list allocates, so build it while `args` is still pinned and
  // before the frame exists.
  Value rest;
  if (lam.rest) {
    rest = list_from(std::span<const Value>(args).subspan(fixed));
  }
  auto frame = std::make_shared<Frame>(closure.env());
  for (std::size_t i = 0; i < fixed; ++i) frame->define(lam.params[i], std::move(args[i]));
  if (lam.rest) frame->define(*lam.rest, std::move(rest));
  return frame;
}

void Interpreter::check_argument(const PrimitiveSpec& spec, std::size_t index, ArgType type,
                                 const Value& v) const {
  const Heap& heap = runtime_.heap();
  auto bad = [&](const char* expected) {
    fail(spec.name, fmt::format("argument {} must be {}, got {}", index + 1, expected, write(v)));
  };
  switch (type) {
    case ArgType::Any: return;
    case ArgType::Number:
      if (!v.is_number()) bad("a number");
      return;
    case ArgType::Index:
      if (!v.is_number() || v.as_number() < 0) bad("a non-negative integer");
      return;
    case ArgType::Pair:
      if (!heap.is_pair(v)) bad("a pair");
      return;
    case ArgType::Vector:
      if (!heap.is_vector(v)) bad("a vector");
      return;
    case ArgType::List: {
      // Proper, acyclic list; walked without recording events.
      Value cur = v;
      std::unordered_set<ObjId> seen;
      while (!cur.is_nil()) {
        if (!heap.is_pair(cur) || !seen.insert(cur.id()).second) bad("a proper list");
        cur = heap.read_slot(cur, 1);
      }
      return;
    }
  }
}

Value Interpreter::call_primitive(const Primitive& prim, std::vector<Value>& args) {
  const PrimitiveSpec& spec = prim.spec();
  const auto n = static_cast<int>(args.size());
  if (n < spec.min_args || (spec.max_args >= 0 && n > spec.max_args)) {
    if (spec.max_args == spec.min_args) {
      fail(spec.name, fmt::format("expected {} argument(s), got {}", spec.min_args, n));
    }
    if (spec.max_args < 0) {
      fail(spec.name, fmt::format("expected at least {} argument(s), got {}", spec.min_args, n));
    }
    fail(spec.name,
         fmt::format("expected {} to {} arguments, got {}", spec.min_args, spec.max_args, n));
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    ArgType t = i == 0 ? spec.first : i == 1 ? spec.second : i == 2 ? spec.third : spec.rest;
    check_argument(spec, i, t, args[i]);
  }
  // Type checks pass before any use event is recorded. A use fires for each
  // heap object passed directly; `args` is pinned, so a collection at the
  // use safepoint rewrites it in place.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i].is_ref()) runtime_.use(args[i]);
  }
  return spec.fn(*this, args);
}

Value Interpreter::eval(const Expr* expr, std::shared_ptr<Frame> env) {
  EvalDepth depth(*this);
  auto env_pin = roots_.pin(env);
  for (;;) {
    const auto& node = expr->node;
    if (const auto* var = std::get_if<Var>(&node)) return lookup(var->name, env);
    if (const auto* lit = std::get_if<Literal>(&node)) return lit->value;

    if (const auto* app = std::get_if<Apply>(&node)) {
      Value fn = eval(app->fn, env);
      auto fn_pin = roots_.pin(fn);
      std::vector<Value> args;
      auto args_pin = roots_.pin(args);
      args.reserve(app->args.size());
      for (const Expr* a : app->args) args.push_back(eval(a, env));
      if (!fn.is_procedure()) {
        throw RuntimeError(fmt::format("attempt to apply non-procedure {}", write(fn)));
      }
      auto* proc = static_cast<Procedure*>(fn.traceable());
      if (proc->kind() == Procedure::Kind::Primitive) {
        return call_primitive(*static_cast<Primitive*>(proc), args);
      }
      const auto& closure = *static_cast<Closure*>(proc);
      env = bind_arguments(closure, args);
      expr = closure.lambda().body;
      continue;
    }

    if (const auto* cond = std::get_if<If>(&node)) {
      Value test = eval(cond->test, env);
      if (test.truthy()) {
        expr = cond->then;
      } else if (cond->otherwise != nullptr) {
        expr = cond->otherwise;
      } else {
        return Value::unspecified();
      }
      continue;
    }

    if (const auto* begin = std::get_if<Begin>(&node)) {
      for (std::size_t i = 0; i + 1 < begin->body.size(); ++i) eval(begin->body[i], env);
      expr = begin->body.back();
      continue;
    }

    if (const auto* let = std::get_if<Let>(&node)) {
      std::vector<Value> inits;
      auto inits_pin = roots_.pin(inits);
      inits.reserve(let->bindings.size());
      for (const Binding& b : let->bindings) inits.push_back(eval(b.init, env));
      auto frame = std::make_shared<Frame>(env);
      for (std::size_t i = 0; i < inits.size(); ++i) {
        frame->define(let->bindings[i].name, std::move(inits[i]));
      }
      env = std::move(frame);
      expr = let->body;
      continue;
    }

    if (const auto* named = std::get_if<NamedLet>(&node)) {
      // TODO: the loop frame and its closure form a shared_ptr cycle that
      // is never reclaimed; sweep frames the last collection did not visit.
      auto loop_frame = std::make_shared<Frame>(env);
      auto closure = std::make_shared<Closure>(named->loop, loop_frame);
      closure->name = named->name;
      loop_frame->define(named->name, Value::procedure(closure));
      auto frame_pin = roots_.pin(loop_frame);
      std::vector<Value> args;
      auto args_pin = roots_.pin(args);
      args.reserve(named->inits.size());
      for (const Expr* init : named->inits) args.push_back(eval(init, env));
      env = bind_arguments(*closure, args);
      expr = named->loop->body;
      continue;
    }

    if (const auto* lam = std::get_if<Lambda>(&node)) {
      auto closure = std::make_shared<Closure>(lam, env);
      closure->name = lam->name;
      return Value::procedure(std::move(closure));
    }

    if (const auto* quote = std::get_if<Quote>(&node)) return materialize(*quote->datum);

    if (const auto* def = std::get_if<Define>(&node)) {
      Value v = eval(def->value, env);
      if (env) {
        env->define(def->name, std::move(v));
      } else {
        if (globals_.size() <= def->name.index) globals_.resize(def->name.index + 1);
        globals_[def->name.index] = std::move(v);
      }
      return Value::symbol(def->name);
    }

    if (const auto* set = std::get_if<SetVar>(&node)) {
      Value v = eval(set->value, env);
      assign(set->name, v, env);
      return Value::unspecified();
    }

    throw RuntimeError("unknown expression node");
  }
}

namespace {

class Printer {
 public:
  Printer(const Heap& heap, const SymbolTable& symbols) : heap_(heap), symbols_(symbols) {}

  void print(const Value& v, std::string& out, int depth) {
    if (++emitted_ > kLimit) {
      if (!truncated_) out += "...";
      truncated_ = true;
      return;
    }
    switch (v.tag()) {
      case Value::Tag::Nil: out += "()"; return;
      case Value::Tag::Boolean: out += v.as_boolean() ? "#t" : "#f"; return;
      case Value::Tag::Number: fmt::format_to(std::back_inserter(out), "{}", v.as_number()); return;
      case Value::Tag::Symbol: out += symbols_.name(v.as_symbol()); return;
      case Value::Tag::Unspecified: out += "#<unspecified>"; return;
      case Value::Tag::Procedure: {
        auto* proc = static_cast<const Procedure*>(v.traceable());
        if (proc->kind() == Procedure::Kind::Primitive) {
          fmt::format_to(std::back_inserter(out), "#<primitive {}>",
                         static_cast<const Primitive*>(proc)->spec().name);
        } else {
          const auto* c = static_cast<const Closure*>(proc);
          out += c->name ? fmt::format("#<procedure {}>", symbols_.name(*c->name))
                         : std::string("#<procedure>");
        }
        return;
      }
      case Value::Tag::Ref: break;
    }
    if (!heap_.is_live(v.id())) {
      fmt::format_to(std::back_inserter(out), "#<dangling {}>", v.id());
      return;
    }
    if (depth > kMaxDepth) {
      out += "...";
      return;
    }
    if (heap_.kind_of(v) == ObjKind::Vector) {
      out += "#(";
      std::size_t n = heap_.size_of(v);
      for (std::size_t i = 0; i < n && !truncated_; ++i) {
        if (i) out += ' ';
        print(heap_.read_slot(v, i), out, depth + 1);
      }
      out += ')';
      return;
    }
    out += '(';
    Value cur = v;
    bool first = true;
    while (!truncated_) {
      if (!first) out += ' ';
      first = false;
      print(heap_.read_slot(cur, 0), out, depth + 1);
      Value next = heap_.read_slot(cur, 1);
      if (next.is_nil()) break;
      if (!heap_.is_pair(next)) {
        out += " . ";
        print(next, out, depth + 1);
        break;
      }
      cur = next;
      if (++emitted_ > kLimit) {
        out += " ...";
        truncated_ = true;
      }
    }
    out += ')';
  }

 private:
  static constexpr std::size_t kLimit = 100000;
  static constexpr int kMaxDepth = 1000;

  const Heap& heap_;
  const SymbolTable& symbols_;
  std::size_t emitted_ = 0;
  bool truncated_ = false;
};

}  // namespace

std::string Interpreter::write(const Value& v) const {
  std::string out;
  Printer(runtime_.heap(), symbols_).print(v, out, 0);
  return out;
}

EvalResult evaluate(std::string_view source, const EvalConfig& config) {
  Interpreter interp(config);
  EvalResult result;
  result.value = interp.run(source);
  result.printed = interp.write(result.value);
  result.log = interp.finish();
  result.collections = interp.runtime().summary();
  return result;
}

}  // namespace dragprof
