#include "pel/environment.hpp"

#include <algorithm>
#include <mutex>

#include "pel/error.hpp"

namespace pel {

EnvPtr Environment::make_root() { return EnvPtr(new Environment(nullptr)); }

EnvPtr Environment::make_child(EnvPtr parent) {
  return EnvPtr(new Environment(std::move(parent)));
}

std::optional<Value> Environment::find(std::string_view name) const {
  for (const Environment* env = this; env; env = env->parent_.get()) {
    std::shared_lock lock(env->mu_);
    auto it = env->frame_.find(std::string(name));
    if (it != env->frame_.end()) return it->second;
  }
  return std::nullopt;
}

Value Environment::lookup(std::string_view name, const Span& span, SourcePtr source) const {
  if (auto v = find(name)) return *v;
  std::string msg = "unbound symbol '" + std::string(name) + "'";
  if (name == "^") msg += " (the caret is only meaningful inside a pipe stage)";
  throw PelException(ErrorKind::UnboundSymbol, msg, span, std::move(source));
}

Value Environment::define(const std::string& name, Value value) {
  std::unique_lock lock(mu_);
  if (!parent_ && builtins_.count(name)) {
    throw PelException(ErrorKind::RedefinitionOfBuiltin,
                       "cannot redefine builtin '" + name + "' at global scope");
  }
  frame_[name] = value;
  return value;
}

void Environment::install_builtin(const std::string& name, Value value) {
  std::unique_lock lock(mu_);
  builtins_.insert(name);
  frame_[name] = std::move(value);
}

bool Environment::is_builtin(std::string_view name) const {
  const Environment* env = this;
  while (env->parent_) env = env->parent_.get();
  std::shared_lock lock(env->mu_);
  return env->builtins_.count(std::string(name)) > 0;
}

std::vector<std::string> Environment::builtin_names() const {
  const Environment* env = this;
  while (env->parent_) env = env->parent_.get();
  std::shared_lock lock(env->mu_);
  std::vector<std::string> out(env->builtins_.begin(), env->builtins_.end());
  std::sort(out.begin(), out.end());
  return out;
}

Environment::Snapshot Environment::snapshot() const {
  std::shared_lock lock(mu_);
  return frame_;
}

void Environment::restore(Snapshot snap) {
  std::unique_lock lock(mu_);
  frame_ = std::move(snap);
}

std::vector<std::pair<std::string, Value>> Environment::user_bindings() const {
  std::shared_lock lock(mu_);
  std::vector<std::pair<std::string, Value>> out;
  for (const auto& [k, v] : frame_) {
    if (!builtins_.count(k)) out.emplace_back(k, v);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void Environment::set_agent_scope(AgentScope scope) {
  std::unique_lock lock(mu_);
  agent_scope_ = std::move(scope);
}

AgentScope Environment::agent_scope() const {
  for (const Environment* env = this; env; env = env->parent_.get()) {
    std::shared_lock lock(env->mu_);
    if (env->agent_scope_) return env->agent_scope_;
  }
  return nullptr;
}

}  // namespace pel
