#include "pel/error.hpp"

namespace pel {

std::string Docstring::render() const {
  std::string out = "FUNCTION SIGNATURE: " + signature + "\n";
  out += "TYPES:\n";
  for (const auto& line : types) out += "- " + line + "\n";
  out += "DESCRIPTION:\n" + description + "\n";
  out += "EXAMPLE USAGE:\n" + examples + "\n";
  return out;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::LexError: return "LexError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnboundSymbol: return "UnboundSymbol";
    case ErrorKind::NotCallable: return "NotCallable";
    case ErrorKind::MixedArguments: return "MixedArguments";
    case ErrorKind::TooManyArguments: return "TooManyArguments";
    case ErrorKind::UnknownNamedArgument: return "UnknownNamedArgument";
    case ErrorKind::DuplicateArgument: return "DuplicateArgument";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::ArithmeticError: return "ArithmeticError";
    case ErrorKind::ConditionNotBool: return "ConditionNotBool";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::KeyNotFound: return "KeyNotFound";
    case ErrorKind::AtWithSlice: return "AtWithSlice";
    case ErrorKind::BadIndexType: return "BadIndexType";
    case ErrorKind::PipeTargetNotCall: return "PipeTargetNotCall";
    case ErrorKind::RedefinitionOfBuiltin: return "RedefinitionOfBuiltin";
    case ErrorKind::DefTargetNotSymbol: return "DefTargetNotSymbol";
    case ErrorKind::BadParamSpec: return "BadParamSpec";
    case ErrorKind::OddCaseBody: return "OddCaseBody";
    case ErrorKind::IterTargetNotList: return "IterTargetNotList";
    case ErrorKind::IteratorNotSymbol: return "IteratorNotSymbol";
    case ErrorKind::RecursionLimit: return "RecursionLimit";
    case ErrorKind::BackendError: return "BackendError";
    case ErrorKind::UnparseableFix: return "UnparseableFix";
    case ErrorKind::CoercionError: return "CoercionError";
    case ErrorKind::UnknownAgent: return "UnknownAgent";
    case ErrorKind::RouterCodeInvalid: return "RouterCodeInvalid";
    case ErrorKind::MalformedOrg: return "MalformedOrg";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::CapabilityViolation: return "CapabilityViolation";
    case ErrorKind::DepthTooLarge: return "DepthTooLarge";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
  }
  return "Unknown";
}

Phase phase_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::LexError: return Phase::lex;
    case ErrorKind::ParseError:
    case ErrorKind::CapabilityViolation: return Phase::parse;
    default: return Phase::eval;
  }
}

PelException::PelException(ErrorKind kind, std::string message)
    : std::runtime_error(message), kind_(kind), message_(std::move(message)) {}

PelException::PelException(ErrorKind kind, std::string message,
                           const Span& span, SourcePtr source)
    : std::runtime_error(message),
      kind_(kind),
      message_(std::move(message)),
      span_(span),
      source_(std::move(source)) {}

void PelException::set_location(const Span& span, SourcePtr source) {
  span_ = span;
  source_ = std::move(source);
}

void PelException::set_origin(const Span& span, SourcePtr source) {
  origin_ = span;
  origin_source_ = std::move(source);
}

}  // namespace pel
