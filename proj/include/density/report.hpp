#pragma once

// Records shared by every construction: certified inequalities, diagnostics, verification reports.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "density/rational.hpp"

namespace density {

enum class Rel { Ge, Le, Eq, Lt, Gt };

inline const char* to_string(Rel r) {
  switch (r) {
    case Rel::Ge: return ">=";
    case Rel::Le: return "<=";
    case Rel::Eq: return "==";
    case Rel::Lt: return "<";
    case Rel::Gt: return ">";
  }
  return "?";
}

/// One exact inequality `lhs rel rhs`, evaluated at `at` for checkpoint/row `index`.
struct Certificate {
  std::string family;
  std::uint64_t index = 0;
  std::uint64_t at = 0;
  Rational lhs, rhs;
  Rel rel = Rel::Ge;
  bool holds = false;

  static Certificate make(std::string family, std::uint64_t index, std::uint64_t at, Rational lhs, Rel rel,
                          Rational rhs) {
    bool ok = false;
    switch (rel) {
      case Rel::Ge: ok = lhs >= rhs; break;
      case Rel::Le: ok = lhs <= rhs; break;
      case Rel::Eq: ok = lhs == rhs; break;
      case Rel::Lt: ok = lhs < rhs; break;
      case Rel::Gt: ok = lhs > rhs; break;
    }
    return {std::move(family), index, at, std::move(lhs), std::move(rhs), rel, ok};
  }
};

/// A search that stopped early, a truncated run, or a requirement that could not act on the window.
struct Diagnostic {
  std::string kind;
  std::uint64_t where = 0;
  std::string message;
};

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> failures;
  std::vector<Certificate> certificates;

  void fail(std::string why) {
    ok = false;
    if (failures.size() < 64) failures.push_back(std::move(why));
  }
  void add(Certificate c) {
    if (!c.holds)
      fail(c.family + " violated at index " + std::to_string(c.index) + " (n=" + std::to_string(c.at) + "): " +
           to_string(c.lhs) + " " + to_string(c.rel) + " " + to_string(c.rhs));
    certificates.push_back(std::move(c));
  }
  void merge(VerifyReport other) {
    if (!other.ok) ok = false;
    for (auto& f : other.failures) fail(std::move(f));
    for (auto& c : other.certificates) certificates.push_back(std::move(c));
  }
};

}  // namespace density
