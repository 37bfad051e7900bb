#include "pel/closure.hpp"

namespace pel {

ClosurePtr Closure::builtin(std::string name, std::vector<Param> params, bool strict,
                            BuiltinFn fn, DocPtr doc) {
  auto c = std::shared_ptr<Closure>(new Closure());
  c->name_ = std::move(name);
  c->params_ = std::move(params);
  c->strict_ = strict;
  c->fn_ = std::move(fn);
  c->doc_ = std::move(doc);
  c->bound_.resize(c->params_.size());
  return c;
}

ClosurePtr Closure::lambda(std::vector<Param> params, ExprPtr body, EnvPtr env) {
  auto c = std::shared_ptr<Closure>(new Closure());
  c->params_ = std::move(params);
  c->strict_ = true;
  c->body_ = std::move(body);
  c->env_ = std::move(env);
  c->bound_.resize(c->params_.size());
  return c;
}

std::optional<std::size_t> Closure::param_index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

bool Closure::ready(const Bound& bound) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].required() && !bound[i]) return false;
  }
  return true;
}

ClosurePtr Closure::with_bound(Bound bound) const {
  auto c = std::shared_ptr<Closure>(new Closure(*this));
  c->bound_ = std::move(bound);
  return c;
}

ClosurePtr Closure::with_name(std::string name) const {
  auto c = std::shared_ptr<Closure>(new Closure(*this));
  c->name_ = std::move(name);
  return c;
}

ClosurePtr make_partial(const ClosurePtr& closure,
                        const std::vector<std::pair<std::string, Arg>>& newly_bound) {
  Closure::Bound bound = closure->bound();
  for (const auto& [name, arg] : newly_bound) {
    auto idx = closure->param_index(name);
    if (!idx) {
      throw PelException(ErrorKind::UnknownNamedArgument,
                         "unknown named argument :" + name + " for " +
                             (closure->name().empty() ? "closure" : closure->name()));
    }
    if (bound[*idx]) {
      throw PelException(ErrorKind::DuplicateArgument, "argument :" + name + " supplied twice");
    }
    bound[*idx] = arg;
  }
  return closure->with_bound(std::move(bound));
}

}  // namespace pel
