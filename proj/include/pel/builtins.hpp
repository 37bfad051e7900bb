#pragma once

#include <string>
#include <vector>

#include "pel/closure.hpp"
#include "pel/environment.hpp"

namespace pel {

/// Installs the core library into a root frame.
void install_builtins(Environment& env);

/// Names installed by install_builtins, sorted.
std::vector<std::string> core_builtin_names();

/// Builds a documented builtin closure. Used by modules that extend the
/// core set (agents register `meeting` and agent closures this way).
ClosurePtr make_builtin(std::string name, std::vector<Param> params, bool strict, BuiltinFn fn,
                        Docstring doc);

/// Parameter helpers for builtin tables.
Param required_param(std::string name);
Param optional_param(std::string name, Value default_value);

}  // namespace pel
