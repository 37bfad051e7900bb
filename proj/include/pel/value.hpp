#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pel {

class Closure;
class Value;

using ClosurePtr = std::shared_ptr<const Closure>;

struct Nil {
  friend bool operator==(const Nil&, const Nil&) = default;
};

/// Integers are exact up to 64 bits; everything else is a double.
class Number {
 public:
  static Number integer(std::int64_t v) { return Number(true, v, 0.0); }
  static Number decimal(double v) { return Number(false, 0, v); }
  /// Parses a NUMBER lexeme (`-?digits(.digits)?`).
  static Number parse(std::string_view text);

  bool is_integer() const { return is_int_; }
  std::int64_t as_integer() const { return int_; }
  double as_double() const { return is_int_ ? static_cast<double>(int_) : dbl_; }
  /// The value as an int64 when it is integral (either representation).
  std::optional<std::int64_t> exact_integer() const;

  std::string display() const;
  friend bool operator==(const Number& a, const Number& b);

 private:
  Number(bool is_int, std::int64_t i, double d) : is_int_(is_int), int_(i), dbl_(d) {}
  bool is_int_;
  std::int64_t int_;
  double dbl_;
};

struct Key {
  std::string name;  // without the leading colon
  friend bool operator==(const Key&, const Key&) = default;
};

// Only produced by quoting code (`'foo`).
struct Symbol {
  std::string name;
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Pair;
using PairPtr = std::shared_ptr<const Pair>;
using ListPtr = std::shared_ptr<const std::vector<Value>>;

/// Immutable runtime value. Copies share structure.
class Value {
 public:
  using Rep = std::variant<Nil, Number, std::string, bool, Key, Symbol, PairPtr,
                           ListPtr, ClosurePtr>;

  Value() : rep_(Nil{}) {}

  static Value nil() { return Value(); }
  static Value number(Number n) { return Value(Rep(n)); }
  static Value integer(std::int64_t v) { return number(Number::integer(v)); }
  static Value decimal(double v) { return number(Number::decimal(v)); }
  static Value string(std::string s) { return Value(Rep(std::move(s))); }
  static Value boolean(bool b) { return Value(Rep(b)); }
  static Value key(std::string name) { return Value(Rep(Key{std::move(name)})); }
  static Value symbol(std::string name) { return Value(Rep(Symbol{std::move(name)})); }
  static Value pair(std::string key, Value value);
  static Value list(std::vector<Value> items);
  static Value closure(ClosurePtr c) { return Value(Rep(std::move(c))); }

  bool is_nil() const { return std::holds_alternative<Nil>(rep_); }
  bool is_number() const { return std::holds_alternative<Number>(rep_); }
  bool is_string() const { return std::holds_alternative<std::string>(rep_); }
  bool is_bool() const { return std::holds_alternative<bool>(rep_); }
  bool is_key() const { return std::holds_alternative<Key>(rep_); }
  bool is_symbol() const { return std::holds_alternative<Symbol>(rep_); }
  bool is_pair() const { return std::holds_alternative<PairPtr>(rep_); }
  bool is_list() const { return std::holds_alternative<ListPtr>(rep_); }
  bool is_closure() const { return std::holds_alternative<ClosurePtr>(rep_); }

  const Number& as_number() const { return std::get<Number>(rep_); }
  const std::string& as_string() const { return std::get<std::string>(rep_); }
  bool as_bool() const { return std::get<bool>(rep_); }
  const Key& as_key() const { return std::get<Key>(rep_); }
  const Symbol& as_symbol() const { return std::get<Symbol>(rep_); }
  const Pair& as_pair() const { return *std::get<PairPtr>(rep_); }
  const std::vector<Value>& as_list() const { return *std::get<ListPtr>(rep_); }
  const ClosurePtr& as_closure() const { return std::get<ClosurePtr>(rep_); }

  const Rep& rep() const { return rep_; }

  /// PelNum, PelString, ... as used in error messages and docstrings.
  const char* type_name() const;

  /// Canonical form: strings quoted, `#t/#f/#nil`, `[a b]`, `:k v`,
  /// `#<closure name arity>`.
  std::string display() const;
  /// Like display() but strings are written raw (what `print` emits).
  std::string print_form() const;

  /// Structural equality; closures compare by identity.
  friend bool operator==(const Value& a, const Value& b);

 private:
  explicit Value(Rep rep) : rep_(std::move(rep)) {}
  Rep rep_;
};

struct Pair {
  std::string key;
  Value value;
};

}  // namespace pel
