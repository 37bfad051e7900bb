#include "pel/value.hpp"

#include <charconv>
#include <cmath>

#include "pel/closure.hpp"

namespace pel {

Number Number::parse(std::string_view text) {
  if (text.find('.') == std::string_view::npos) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return integer(v);
  }
  double d = 0;
  std::from_chars(text.data(), text.data() + text.size(), d);
  return decimal(d);
}

std::optional<std::int64_t> Number::exact_integer() const {
  if (is_int_) return int_;
  if (std::isfinite(dbl_) && std::trunc(dbl_) == dbl_ && std::fabs(dbl_) < 9.2e18) {
    return static_cast<std::int64_t>(dbl_);
  }
  return std::nullopt;
}

std::string Number::display() const {
  if (is_int_) return std::to_string(int_);
  if (std::isnan(dbl_)) return "nan";
  if (std::isinf(dbl_)) return dbl_ > 0 ? "inf" : "-inf";
  if (std::trunc(dbl_) == dbl_ && std::fabs(dbl_) < 1e15) {
    return std::to_string(static_cast<std::int64_t>(dbl_));
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), dbl_);
  return std::string(buf, ptr);
}

bool operator==(const Number& a, const Number& b) {
  if (a.is_int_ && b.is_int_) return a.int_ == b.int_;
  return a.as_double() == b.as_double();
}

Value Value::pair(std::string key, Value value) {
  return Value(Rep(std::make_shared<const Pair>(Pair{std::move(key), std::move(value)})));
}

Value Value::list(std::vector<Value> items) {
  return Value(Rep(std::make_shared<const std::vector<Value>>(std::move(items))));
}

const char* Value::type_name() const {
  switch (rep_.index()) {
    case 0: return "PelNil";
    case 1: return "PelNum";
    case 2: return "PelString";
    case 3: return "PelBool";
    case 4: return "PelKey";
    case 5: return "PelSymbol";
    case 6: return "PelPair";
    case 7: return "PelListLiteral";
    case 8: return "PelClosure";
  }
  return "?";
}

namespace {

std::string render(const Value& v, bool raw_strings) {
  struct Visitor {
    bool raw;
    std::string operator()(const Nil&) const { return "#nil"; }
    std::string operator()(const Number& n) const { return n.display(); }
    std::string operator()(const std::string& s) const { return raw ? s : "\"" + s + "\""; }
    std::string operator()(bool b) const { return b ? "#t" : "#f"; }
    std::string operator()(const Key& k) const { return ":" + k.name; }
    std::string operator()(const Symbol& s) const { return s.name; }
    std::string operator()(const PairPtr& p) const {
      return ":" + p->key + " " + p->value.display();
    }
    std::string operator()(const ListPtr& l) const {
      std::string out = "[";
      for (std::size_t i = 0; i < l->size(); ++i) {
        if (i) out += " ";
        out += (*l)[i].display();
      }
      return out + "]";
    }
    std::string operator()(const ClosurePtr& c) const {
      std::size_t open = 0;
      for (const auto& b : c->bound()) open += b ? 0 : 1;
      return "#<closure " + (c->name().empty() ? std::string("anon") : c->name()) + " " +
             std::to_string(open) + ">";
    }
  };
  return std::visit(Visitor{raw_strings}, v.rep());
}

}  // namespace

std::string Value::display() const { return render(*this, false); }
std::string Value::print_form() const { return render(*this, true); }

bool operator==(const Value& a, const Value& b) {
  if (a.rep_.index() != b.rep_.index()) return false;
  if (a.is_pair()) {
    const Pair& x = a.as_pair();
    const Pair& y = b.as_pair();
    return x.key == y.key && x.value == y.value;
  }
  if (a.is_list()) {
    const auto& x = a.as_list();
    const auto& y = b.as_list();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] == y[i])) return false;
    }
    return true;
  }
  if (a.is_closure()) return a.as_closure() == b.as_closure();
  return a.rep_ == b.rep_;
}

}  // namespace pel
