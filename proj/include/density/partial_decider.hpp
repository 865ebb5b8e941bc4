#pragma once

// Stage-budgeted partial 0/1 functions (φ_e with φ_{e,s} semantics) and jump approximations.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "density/ce_stream.hpp"
#include "density/errors.hpp"
#include "density/set_oracle.hpp"

namespace density {

enum class Tri : std::uint8_t { Zero = 0, One = 1, Undefined = 2 };

inline Tri tri_of(bool b) { return b ? Tri::One : Tri::Zero; }

/// eval(n, s): the value of φ(n) if it has converged by stage s.
class PartialDecider {
 public:
  using Fn = std::function<Tri(std::uint64_t, std::uint64_t)>;

  PartialDecider(Fn fn, std::string label) : fn_(std::make_shared<Fn>(std::move(fn))), label_(std::move(label)) {}

  Tri eval(std::uint64_t n, std::uint64_t s) const { return (*fn_)(n, s); }
  bool defined(std::uint64_t n, std::uint64_t s) const { return eval(n, s) != Tri::Undefined; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::shared_ptr<Fn> fn_;
  std::string label_;
};

namespace deciders {

/// φ(n) = value(n), converging at stage halt(n) (kNever: diverges).
inline PartialDecider from_parts(SetOracle value, std::function<std::uint64_t(std::uint64_t)> halt,
                                 std::string label) {
  return PartialDecider(
      [value = std::move(value), halt = std::move(halt)](std::uint64_t n, std::uint64_t s) {
        auto h = halt(n);
        if (h == kNever || s < h) return Tri::Undefined;
        return tri_of(value.contains(n));
      },
      std::move(label));
}

inline PartialDecider constant(bool v, std::uint64_t halt_stage = 0) {
  return from_parts(v ? sets::omega() : sets::empty(), [halt_stage](std::uint64_t) { return halt_stage; },
                    std::string("const ") + (v ? "1" : "0"));
}

inline PartialDecider never() {
  return PartialDecider([](std::uint64_t, std::uint64_t) { return Tri::Undefined; }, "never");
}

/// Characteristic function of S, defined from stage 0 on the domain D (everywhere when D is omitted).
inline PartialDecider restrict_to(const SetOracle& s, std::optional<SetOracle> domain = std::nullopt) {
  std::string label = "chi(" + s.label() + ")" + (domain ? " on " + domain->label() : "");
  return PartialDecider(
      [s, domain](std::uint64_t n, std::uint64_t) {
        if (domain && !domain->contains(n)) return Tri::Undefined;
        return tri_of(s.contains(n));
      },
      std::move(label));
}

/// φ(n) = value(n), converging at stage n + delay.
inline PartialDecider delayed(SetOracle value, std::uint64_t delay) {
  std::string label = value.label() + " after n+" + std::to_string(delay);
  return from_parts(std::move(value), [delay](std::uint64_t n) { return n + delay; }, std::move(label));
}

}  // namespace deciders

/// Checks definedness monotonicity and value stability of d on [0,n) × [0,stages].
inline void check_monotone(const PartialDecider& d, std::uint64_t n, std::uint64_t stages) {
  for (std::uint64_t x = 0; x < n; ++x) {
    Tri prev = Tri::Undefined;
    for (std::uint64_t s = 0; s <= stages; ++s) {
      Tri v = d.eval(x, s);
      if (prev != Tri::Undefined && v != prev)
        throw ContractViolated("decider '" + d.label() + "' changes at n=" + std::to_string(x) +
                               ", s=" + std::to_string(s));
      prev = v;
    }
  }
}

/// Approximation to the jump: guess(i,s) ∈ {0,1} and the use of the computation when guess = 1.
struct JumpApprox {
  std::function<bool(std::uint64_t, std::uint64_t)> guess;
  std::function<std::optional<std::uint64_t>(std::uint64_t, std::uint64_t)> use;
  std::string label = "jump";
};

}  // namespace density
