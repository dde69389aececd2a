#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hemvsa {

// Malformed input file (syntax, missing field, wrong type).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// Well-formed input that violates one or more model invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid network:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

// Numerical failure inside a solver stage. `stage` names the stage
// ("germ", "hem", "pade", ...) so the CLI can tag its message.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace hemvsa
