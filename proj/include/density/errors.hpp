#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace density {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rule oracle or a stage search ran out of its step/stage budget at `where`.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::uint64_t where, const std::string& what)
      : Error("budget exceeded at " + std::to_string(where) + ": " + what), where_(where) {}
  std::uint64_t where() const noexcept { return where_; }

 private:
  std::uint64_t where_;
};

class InvalidWindow : public Error {
 public:
  using Error::Error;
};

class InvalidResidue : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A caller-asserted hypothesis failed on the finite window (e.g. ρ_n(A) < q at `where`).
class PreconditionViolated : public Error {
 public:
  PreconditionViolated(std::uint64_t where, const std::string& what)
      : Error("precondition violated at " + std::to_string(where) + ": " + what), where_(where) {}
  std::uint64_t where() const noexcept { return where_; }

 private:
  std::uint64_t where_;
};

/// An input object broke its declared contract (monotone g, use defined, stream well-formed ...).
class ContractViolated : public Error {
 public:
  using Error::Error;
};

/// Width cap for canonical indices or residue listings exceeded.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace density
