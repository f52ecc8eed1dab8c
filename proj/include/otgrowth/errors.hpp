#pragma once

#include <stdexcept>
#include <string>

namespace otgrowth {

// Base of every error thrown by the library. `code()` is a short stable
// identifier used by the CLI in structured failure reports.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define OTGROWTH_DEFINE_ERROR(Name, Code)                                    \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(Code, what) {}            \
  };

OTGROWTH_DEFINE_ERROR(DomainError, "domain")
OTGROWTH_DEFINE_ERROR(ConfigurationError, "configuration")
OTGROWTH_DEFINE_ERROR(SolverError, "solver")
OTGROWTH_DEFINE_ERROR(UnsupportedConstant, "unsupported-constant")
OTGROWTH_DEFINE_ERROR(FormulaDegenerate, "formula-degenerate")
OTGROWTH_DEFINE_ERROR(GridTruncation, "grid-truncation")
OTGROWTH_DEFINE_ERROR(UnboundedInverse, "unbounded-inverse")
OTGROWTH_DEFINE_ERROR(EpsilonTooSmall, "epsilon-too-small")
OTGROWTH_DEFINE_ERROR(DegenerateRow, "degenerate-row")
OTGROWTH_DEFINE_ERROR(DirectionUndefined, "direction-undefined")

#undef OTGROWTH_DEFINE_ERROR

}  // namespace otgrowth
