#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stlppc {

// Every error raised by the library derives from Error. The module prefix in
// what() lets the CLI surface module-qualified diagnostics unchanged.
class Error : public std::runtime_error {
public:
  Error(std::string module, std::string kind, const std::string& message)
      : std::runtime_error(module + ": " + kind + ": " + message),
        module_(std::move(module)), kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string module_;
  std::string kind_;
};

// ---- stl_ast ---------------------------------------------------------------

class SyntaxError : public Error {
public:
  SyntaxError(std::size_t position, const std::string& expected)
      : Error("stl_ast", "SyntaxError",
              "at position " + std::to_string(position) + ": expected " + expected),
        position_(position), expected_(expected) {}
  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

private:
  std::size_t position_;
  std::string expected_;
};

class UnknownAtom : public Error {
public:
  explicit UnknownAtom(const std::string& name)
      : Error("stl_ast", "UnknownAtom", "'" + name + "' is not declared"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

class FragmentViolation : public Error {
public:
  explicit FragmentViolation(const std::string& what)
      : Error("stl_ast", "FragmentViolation", what) {}
};

class WindowOrderViolation : public Error {
public:
  explicit WindowOrderViolation(const std::string& what)
      : Error("stl_ast", "WindowOrderViolation", what) {}
};

class UnboundedWindowInSequence : public Error {
public:
  explicit UnboundedWindowInSequence(const std::string& what)
      : Error("stl_ast", "UnboundedWindowInSequence", what) {}
};

class InvalidAtom : public Error {
public:
  explicit InvalidAtom(const std::string& what) : Error("stl_ast", "InvalidAtom", what) {}
};

// ---- robustness ------------------------------------------------------------

class NonFiniteState : public Error {
public:
  NonFiniteState(const std::string& module, const std::string& what)
      : Error(module, "NonFiniteState", what) {}
};

class InsufficientHorizon : public Error {
public:
  InsufficientHorizon(double needed, double available)
      : Error("robustness", "InsufficientHorizon",
              "formula needs the trace up to t=" + std::to_string(needed) +
                  " but it ends at t=" + std::to_string(available)),
        needed_(needed), available_(available) {}
  double needed() const noexcept { return needed_; }
  double available() const noexcept { return available_; }

private:
  double needed_;
  double available_;
};

class InfeasibleFormula : public Error {
public:
  explicit InfeasibleFormula(double rho_opt)
      : Error("robustness", "InfeasibleFormula",
              "optimum of the smooth robustness is " + std::to_string(rho_opt) +
                  " <= 0; the body cannot be satisfied"),
        rho_opt_(rho_opt) {}
  double rho_opt() const noexcept { return rho_opt_; }

private:
  double rho_opt_;
};

// ---- funnel ----------------------------------------------------------------

enum class FunnelSide { lower, upper };

class FunnelViolation : public Error {
public:
  FunnelViolation(FunnelSide side, double margin)
      : Error("funnel", "FunnelViolation",
              std::string(side == FunnelSide::lower ? "lower" : "upper") +
                  " funnel boundary crossed (margin " + std::to_string(margin) + ")"),
        side_(side), margin_(margin) {}
  FunnelSide side() const noexcept { return side_; }
  double margin() const noexcept { return margin_; }

private:
  FunnelSide side_;
  double margin_;
};

class InfeasibleTask : public Error {
public:
  InfeasibleTask(std::size_t task, const std::string& why)
      : Error("funnel", "InfeasibleTask", "task " + std::to_string(task) + ": " + why),
        task_(task) {}
  std::size_t task() const noexcept { return task_; }

private:
  std::size_t task_;
};

class InvalidRhoMax : public Error {
public:
  InvalidRhoMax(std::size_t task, const std::string& why)
      : Error("funnel", "InvalidRhoMax", "task " + std::to_string(task) + ": " + why),
        task_(task) {}
  std::size_t task() const noexcept { return task_; }

private:
  std::size_t task_;
};

class DeadlinePassed : public Error {
public:
  DeadlinePassed(std::size_t task, double tau)
      : Error("funnel", "DeadlinePassed",
              "task " + std::to_string(task) + ": local deadline " + std::to_string(tau) +
                  " < 0"),
        task_(task) {}
  std::size_t task() const noexcept { return task_; }

private:
  std::size_t task_;
};

// ---- controller / dynamics -------------------------------------------------

class SingularInput : public Error {
public:
  explicit SingularInput(const std::string& what)
      : Error("controller", "SingularInput", what) {}
};

class InvalidLaplacian : public Error {
public:
  explicit InvalidLaplacian(const std::string& what)
      : Error("dynamics", "InvalidLaplacian", what) {}
};

// ---- hybrid ----------------------------------------------------------------

class HybridFault : public Error {
public:
  HybridFault(std::size_t task, const std::string& what)
      : Error("hybrid", "Fault", "task " + std::to_string(task) + ": " + what), task_(task) {}
  std::size_t task() const noexcept { return task_; }

private:
  std::size_t task_;
};

// ---- scenario / cli --------------------------------------------------------

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& key, const std::string& what)
      : Error("cli", "ParseError",
              "line " + std::to_string(line) + (key.empty() ? "" : " (" + key + ")") + ": " +
                  what),
        line_(line), key_(key) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

private:
  std::size_t line_;
  std::string key_;
};

class ValidationError : public Error {
public:
  ValidationError(const std::string& key, const std::string& reason)
      : Error("cli", "ValidationError", key + ": " + reason), key_(key), reason_(reason) {}
  const std::string& key() const noexcept { return key_; }
  const std::string& reason() const noexcept { return reason_; }

private:
  std::string key_;
  std::string reason_;
};

}  // namespace stlppc
