#include <ostream>

#include <fmt/format.h>

#include "dragprof/errors.hpp"
#include "dragprof/interp.hpp"

// Primitive bodies run after the dispatcher has checked arity and argument
// types and recorded a use for every heap reference argument. Anything that
// allocates must read its operands from `args` (pinned), never from copies
// taken before the allocation.

namespace dragprof {

namespace {

using Args = std::span<Value>;

template <typename Op>
std::int64_t checked(std::string_view name, Op op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (op(a, b, &r)) throw RuntimeError(fmt::format("{}: integer overflow", name));
  return r;
}

constexpr auto kAdd = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
  return __builtin_add_overflow(a, b, r);
};
constexpr auto kSub = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
  return __builtin_sub_overflow(a, b, r);
};
constexpr auto kMul = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
  return __builtin_mul_overflow(a, b, r);
};

Value add(Interpreter&, Args args) {
  std::int64_t acc = 0;
  for (const Value& a : args) acc = checked("+", kAdd, acc, a.as_number());
  return Value::number(acc);
}

Value mul(Interpreter&, Args args) {
  std::int64_t acc = 1;
  for (const Value& a : args) acc = checked("*", kMul, acc, a.as_number());
  return Value::number(acc);
}

Value sub(Interpreter&, Args args) {
  if (args.size() == 1) return Value::number(checked("-", kSub, 0, args[0].as_number()));
  std::int64_t acc = args[0].as_number();
  for (std::size_t i = 1; i < args.size(); ++i) acc = checked("-", kSub, acc, args[i].as_number());
  return Value::number(acc);
}

template <typename Cmp>
Value compare(Args args, Cmp cmp) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (!cmp(args[i - 1].as_number(), args[i].as_number())) return Value::boolean(false);
  }
  return Value::boolean(true);
}

Value num_eq(Interpreter&, Args a) { return compare(a, [](auto x, auto y) { return x == y; }); }
Value num_lt(Interpreter&, Args a) { return compare(a, [](auto x, auto y) { return x < y; }); }
Value num_gt(Interpreter&, Args a) { return compare(a, [](auto x, auto y) { return x > y; }); }
Value num_le(Interpreter&, Args a) { return compare(a, [](auto x, auto y) { return x <= y; }); }
Value num_ge(Interpreter&, Args a) { return compare(a, [](auto x, auto y) { return x >= y; }); }

Value divide(Interpreter& in, Args args, std::string_view op) {
  std::int64_t d = args[1].as_number();
  if (d == 0) in.fail(op, "division by zero");
  if (d == -1 && args[0].as_number() == INT64_MIN) in.fail(op, "integer overflow");
  std::int64_t n = args[0].as_number();
  if (op == "quotient") return Value::number(n / d);
  if (op == "remainder") return Value::number(n % d);
  std::int64_t m = n % d;
  if (m != 0 && ((m < 0) != (d < 0))) m += d;
  return Value::number(m);
}

Value quotient(Interpreter& in, Args a) { return divide(in, a, "quotient"); }
Value remainder(Interpreter& in, Args a) { return divide(in, a, "remainder"); }
Value modulo(Interpreter& in, Args a) { return divide(in, a, "modulo"); }

Value zero_p(Interpreter&, Args a) { return Value::boolean(a[0].as_number() == 0); }
Value not_p(Interpreter&, Args a) { return Value::boolean(!a[0].truthy()); }

Value eq_p(Interpreter&, Args a) { return Value::boolean(a[0] == a[1]); }

Value null_p(Interpreter&, Args a) { return Value::boolean(a[0].is_nil()); }
Value pair_p(Interpreter& in, Args a) { return Value::boolean(in.runtime().heap().is_pair(a[0])); }
Value vector_p(Interpreter& in, Args a) {
  return Value::boolean(in.runtime().heap().is_vector(a[0]));
}
Value number_p(Interpreter&, Args a) { return Value::boolean(a[0].is_number()); }
Value symbol_p(Interpreter&, Args a) { return Value::boolean(a[0].is_symbol()); }
Value boolean_p(Interpreter&, Args a) { return Value::boolean(a[0].is_boolean()); }
Value procedure_p(Interpreter&, Args a) { return Value::boolean(a[0].is_procedure()); }

Value cons(Interpreter& in, Args a) { return in.runtime().alloc_pair(a[0], a[1]); }
Value list(Interpreter& in, Args a) { return in.list_from(a); }

Value car(Interpreter& in, Args a) { return in.runtime().read_slot(a[0], 0); }
Value cdr(Interpreter& in, Args a) { return in.runtime().read_slot(a[0], 1); }

Value set_car(Interpreter& in, Args a) {
  in.runtime().write_slot(a[0], 0, a[1]);
  return Value::unspecified();
}

Value set_cdr(Interpreter& in, Args a) {
  in.runtime().write_slot(a[0], 1, a[1]);
  return Value::unspecified();
}

Value make_vector(Interpreter& in, Args a) {
  Value fill = a.size() > 1 ? a[1] : Value::number(0);
  return in.runtime().alloc_vector(a[0].as_number(), fill);
}

Value vector(Interpreter& in, Args a) {
  Value v = in.runtime().alloc_vector(static_cast<std::int64_t>(a.size()), Value::nil());
  for (std::size_t i = 0; i < a.size(); ++i) in.runtime().write_slot(v, i, a[i]);
  return v;
}

std::size_t vector_index(Interpreter& in, const Value& vec, const Value& index,
                         std::string_view op) {
  auto i = static_cast<std::size_t>(index.as_number());
  std::size_t n = in.runtime().heap().size_of(vec);
  if (i >= n) in.fail(op, fmt::format("index {} out of range for vector of length {}", i, n));
  return i;
}

Value vector_ref(Interpreter& in, Args a) {
  return in.runtime().read_slot(a[0], vector_index(in, a[0], a[1], "vector-ref"));
}

Value vector_set(Interpreter& in, Args a) {
  in.runtime().write_slot(a[0], vector_index(in, a[0], a[1], "vector-set!"), a[2]);
  return Value::unspecified();
}

Value vector_length(Interpreter& in, Args a) {
  return Value::number(static_cast<std::int64_t>(in.runtime().heap().size_of(a[0])));
}

Value vector_to_list(Interpreter& in, Args a) {
  Runtime& rt = in.runtime();
  Value acc = Value::nil();
  for (std::size_t i = rt.heap().size_of(a[0]); i-- > 0;) {
    acc = rt.alloc_pair(rt.read_slot(a[0], i), acc);
  }
  return acc;
}

// The dispatcher already recorded a use of the head pair; the remaining
// spine pairs are read here, one use each, mirroring vector->list's one
// creation per pair. All uses precede the allocation so the fresh vector is
// never exposed to a safepoint while unrooted.
Value list_to_vector(Interpreter& in, Args a) {
  Runtime& rt = in.runtime();
  std::size_t n = 0;
  for (Value cur = a[0]; !cur.is_nil(); cur = rt.read_slot(cur, 1)) {
    if (n > 0) rt.use(cur);
    ++n;
  }
  Value vec = rt.alloc_vector(static_cast<std::int64_t>(n), Value::nil());
  Value cur = a[0];
  for (std::size_t i = 0; i < n; ++i) {
    rt.write_slot(vec, i, rt.read_slot(cur, 0));
    cur = rt.read_slot(cur, 1);
  }
  return vec;
}

Value display(Interpreter& in, Args a) {
  if (std::ostream* out = in.out()) *out << in.write(a[0]);
  return Value::unspecified();
}

Value newline(Interpreter& in, Args) {
  if (std::ostream* out = in.out()) *out << '\n';
  return Value::unspecified();
}

constexpr ArgType A = ArgType::Any;
constexpr ArgType N = ArgType::Number;
constexpr ArgType P = ArgType::Pair;
constexpr ArgType V = ArgType::Vector;
constexpr ArgType I = ArgType::Index;
constexpr ArgType L = ArgType::List;

// name, min, max, arg1, arg2, arg3, rest, fn
constexpr PrimitiveSpec kPrimitives[] = {
    {"cons", 2, 2, A, A, A, A, cons},
    {"list", 0, -1, A, A, A, A, list},
    {"car", 1, 1, P, A, A, A, car},
    {"cdr", 1, 1, P, A, A, A, cdr},
    {"set-car!", 2, 2, P, A, A, A, set_car},
    {"set-cdr!", 2, 2, P, A, A, A, set_cdr},
    {"null?", 1, 1, A, A, A, A, null_p},
    {"pair?", 1, 1, A, A, A, A, pair_p},
    {"number?", 1, 1, A, A, A, A, number_p},
    {"vector?", 1, 1, A, A, A, A, vector_p},
    {"symbol?", 1, 1, A, A, A, A, symbol_p},
    {"boolean?", 1, 1, A, A, A, A, boolean_p},
    {"procedure?", 1, 1, A, A, A, A, procedure_p},
    {"vector", 0, -1, A, A, A, A, vector},
    {"make-vector", 1, 2, I, A, A, A, make_vector},
    {"vector-ref", 2, 2, V, I, A, A, vector_ref},
    {"vector-set!", 3, 3, V, I, A, A, vector_set},
    {"vector-length", 1, 1, V, A, A, A, vector_length},
    {"vector->list", 1, 1, V, A, A, A, vector_to_list},
    {"list->vector", 1, 1, L, A, A, A, list_to_vector},
    {"+", 0, -1, N, N, N, N, add},
    {"-", 1, -1, N, N, N, N, sub},
    {"*", 0, -1, N, N, N, N, mul},
    {"=", 1, -1, N, N, N, N, num_eq},
    {"<", 1, -1, N, N, N, N, num_lt},
    {">", 1, -1, N, N, N, N, num_gt},
    {"<=", 1, -1, N, N, N, N, num_le},
    {">=", 1, -1, N, N, N, N, num_ge},
    {"quotient", 2, 2, N, N, A, A, quotient},
    {"remainder", 2, 2, N, N, A, A, remainder},
    {"modulo", 2, 2, N, N, A, A, modulo},
    {"zero?", 1, 1, N, A, A, A, zero_p},
    {"not", 1, 1, A, A, A, A, not_p},
    {"eq?", 2, 2, A, A, A, A, eq_p},
    {"eqv?", 2, 2, A, A, A, A, eq_p},
    {"display", 1, 1, A, A, A, A, display},
    {"newline", 0, 0, A, A, A, A, newline},
};

}  // namespace

std::span<const PrimitiveSpec> primitive_table() { return kPrimitives; }

}  // namespace dragprof
