#pragma once

#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pel/source.hpp"
#include "pel/value.hpp"

namespace pel {

class Environment;
using EnvPtr = std::shared_ptr<Environment>;

/// Set of agent paths that code running in an environment may address.
using AgentScope = std::shared_ptr<const std::set<std::string>>;

/// A lexical frame. Lookups walk the parent chain; definitions write the
/// innermost frame. Frames lock internally, so concurrent tasks may define
/// into the same frame.
class Environment {
 public:
  using Snapshot = std::unordered_map<std::string, Value>;

  static EnvPtr make_root();
  static EnvPtr make_child(EnvPtr parent);

  const EnvPtr& parent() const { return parent_; }
  bool is_root() const { return parent_ == nullptr; }

  std::optional<Value> find(std::string_view name) const;
  /// Throws PelException(UnboundSymbol).
  Value lookup(std::string_view name, const Span& span = {}, SourcePtr source = nullptr) const;

  /// Binds `name` in this frame and returns the value. Shadowing a builtin
  /// is an error in a root frame and allowed in child frames.
  Value define(const std::string& name, Value value);
  void install_builtin(const std::string& name, Value value);
  bool is_builtin(std::string_view name) const;
  std::vector<std::string> builtin_names() const;

  /// Root-frame state capture for the restart protocol.
  Snapshot snapshot() const;
  void restore(Snapshot snap);

  /// Non-builtin bindings of this frame, sorted by name.
  std::vector<std::pair<std::string, Value>> user_bindings() const;

  void set_agent_scope(AgentScope scope);
  /// Innermost scope along the chain, or null when unrestricted.
  AgentScope agent_scope() const;

 private:
  explicit Environment(EnvPtr parent) : parent_(std::move(parent)) {}

  EnvPtr parent_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Value> frame_;
  std::unordered_set<std::string> builtins_;
  AgentScope agent_scope_;
};

}  // namespace pel
