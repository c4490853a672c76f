#pragma once

#include <stdexcept>
#include <string>

namespace mnt {

enum class ErrorKind {
  Parse,
  Validation,
  Compile,
  Load,
  ScheduleBug,
  Runtime,
  Io,
};

struct SourceLoc {
  int line = 0;
  int col = 0;
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Diagnostic carrying a source position; `what()` is "line:col: message".
class ParseError : public Error {
public:
  ParseError(SourceLoc loc, const std::string& message)
      : Error(ErrorKind::Parse, std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message),
        loc_(loc), message_(message) {}

  SourceLoc loc() const noexcept { return loc_; }
  const std::string& message() const noexcept { return message_; }

private:
  SourceLoc loc_;
  std::string message_;
};

/// Failure inside one compiler pass; the pass name is prefixed to the message.
class CompileError : public Error {
public:
  CompileError(std::string pass, const std::string& message)
      : Error(ErrorKind::Compile, pass + ": " + message), pass_(std::move(pass)) {}

  const std::string& pass() const noexcept { return pass_; }

private:
  std::string pass_;
};

} // namespace mnt
