#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pel/source.hpp"

namespace pel {

/// Structured documentation attached to every builtin.
///
/// Rendered in four sections (signature, types, description, examples) when
/// an error raised inside the builtin is reported.
struct Docstring {
  std::string signature;
  std::vector<std::string> types;
  std::string description;
  std::string examples;

  std::string render() const;
};

using DocPtr = std::shared_ptr<const Docstring>;

enum class Phase { lex, parse, eval };

enum class ErrorKind {
  LexError,
  ParseError,
  UnboundSymbol,
  NotCallable,
  MixedArguments,
  TooManyArguments,
  UnknownNamedArgument,
  DuplicateArgument,
  TypeMismatch,
  ArithmeticError,
  ConditionNotBool,
  IndexOutOfRange,
  KeyNotFound,
  AtWithSlice,
  BadIndexType,
  PipeTargetNotCall,
  RedefinitionOfBuiltin,
  DefTargetNotSymbol,
  BadParamSpec,
  OddCaseBody,
  IterTargetNotList,
  IteratorNotSymbol,
  RecursionLimit,
  BackendError,
  UnparseableFix,
  CoercionError,
  UnknownAgent,
  RouterCodeInvalid,
  MalformedOrg,
  IoError,
  CapabilityViolation,
  DepthTooLarge,
  PreconditionFailed,
};

const char* to_string(ErrorKind kind);
Phase phase_of(ErrorKind kind);

/// The single error type raised by the lexer, parser, and runtime.
///
/// Besides the message it records where the error happened, the innermost
/// call expression that was executing (the "origin", which restarts may
/// rewrite), and the docstring of the builtin that raised it.
class PelException : public std::runtime_error {
 public:
  PelException(ErrorKind kind, std::string message);
  PelException(ErrorKind kind, std::string message, const Span& span,
               SourcePtr source = nullptr);

  ErrorKind kind() const { return kind_; }
  Phase phase() const { return phase_of(kind_); }
  const std::string& message() const { return message_; }

  const std::optional<Span>& span() const { return span_; }
  const SourcePtr& source() const { return source_; }
  void set_location(const Span& span, SourcePtr source);

  const std::optional<Span>& origin() const { return origin_; }
  const SourcePtr& origin_source() const { return origin_source_; }
  void set_origin(const Span& span, SourcePtr source);

  const DocPtr& context() const { return context_; }
  void set_context(DocPtr doc) { context_ = std::move(doc); }

  // Once sealed, enclosing builtins no longer attach their docstring.
  bool sealed() const { return sealed_; }
  void seal() { sealed_ = true; }

  const std::optional<std::size_t>& form_index() const { return form_index_; }
  void set_form_index(std::size_t index) { form_index_ = index; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<Span> span_;
  SourcePtr source_;
  std::optional<Span> origin_;
  SourcePtr origin_source_;
  DocPtr context_;
  bool sealed_ = false;
  std::optional<std::size_t> form_index_;
};

}  // namespace pel
