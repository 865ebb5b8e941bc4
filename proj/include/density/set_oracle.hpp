#pragma once

// Lazily represented subsets of ω: pure membership predicates with a per-query step budget.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "density/errors.hpp"
#include "density/rational.hpp"

namespace density {

/// Finite evaluation window: naturals in [0, n_max) and stages in [0, stage_max].
struct Universe {
  std::uint64_t n_max = 1;
  std::uint64_t stage_max = 1;

  static Universe make(std::uint64_t n_max, std::uint64_t stage_max) {
    if (n_max < 1) throw InvalidArgument("universe: n_max must be >= 1");
    if (stage_max < 1) throw InvalidArgument("universe: stage_max must be >= 1");
    return {n_max, stage_max};
  }
};

inline constexpr std::uint64_t kDefaultStepBudget = 1'000'000;

/// Counts abstract evaluation steps of one membership query.
class StepMeter {
 public:
  StepMeter(std::uint64_t query, std::uint64_t budget) : query_(query), budget_(budget) {}

  void charge(std::uint64_t steps = 1) {
    used_ += steps;
    if (used_ > budget_) throw BudgetExceeded(query_, "rule step budget of " + std::to_string(budget_) + " exhausted");
  }
  std::uint64_t used() const noexcept { return used_; }

 private:
  std::uint64_t query_;
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
};

enum class OracleKind { ExplicitBitset, Rule, ResidueUnion, RkUnion, Constructed };

inline const char* to_string(OracleKind k) {
  switch (k) {
    case OracleKind::ExplicitBitset: return "explicit-bitset";
    case OracleKind::Rule: return "rule";
    case OracleKind::ResidueUnion: return "residue-union";
    case OracleKind::RkUnion: return "rk-union";
    case OracleKind::Constructed: return "constructed";
  }
  return "?";
}

namespace detail {
struct OracleImpl {
  virtual ~OracleImpl() = default;
  virtual bool test(std::uint64_t n, StepMeter& meter) const = 0;
  virtual OracleKind kind() const = 0;
};
}  // namespace detail

/// Membership predicate over ω.  Copies share the same immutable implementation.
class SetOracle {
 public:
  SetOracle(std::shared_ptr<const detail::OracleImpl> impl, std::string label,
            std::uint64_t step_budget = kDefaultStepBudget)
      : impl_(std::move(impl)), label_(std::move(label)), budget_(step_budget) {}

  bool contains(std::uint64_t n) const {
    StepMeter meter(n, budget_);
    return impl_->test(n, meter);
  }
  /// Evaluates inside a caller-owned meter (used by composite oracles).
  bool contains(std::uint64_t n, StepMeter& meter) const { return impl_->test(n, meter); }

  OracleKind kind() const { return impl_->kind(); }
  const std::string& label() const noexcept { return label_; }
  std::uint64_t step_budget() const noexcept { return budget_; }

  SetOracle relabeled(std::string label) const { return SetOracle(impl_, std::move(label), budget_); }
  SetOracle with_budget(std::uint64_t budget) const { return SetOracle(impl_, label_, budget); }

 private:
  std::shared_ptr<const detail::OracleImpl> impl_;
  std::string label_;
  std::uint64_t budget_;
};

using RulePredicate = std::function<bool(std::uint64_t, StepMeter&)>;

namespace detail {

struct RuleImpl final : OracleImpl {
  explicit RuleImpl(RulePredicate f) : fn(std::move(f)) {}
  bool test(std::uint64_t n, StepMeter& m) const override { return fn(n, m); }
  OracleKind kind() const override { return OracleKind::Rule; }
  RulePredicate fn;
};

struct BitsetImpl final : OracleImpl {
  BitsetImpl(std::vector<bool> b, OracleKind k) : bits(std::move(b)), k_(k) {}
  bool test(std::uint64_t n, StepMeter& m) const override {
    m.charge();
    return n < bits.size() && bits[n];
  }
  OracleKind kind() const override { return k_; }
  std::vector<bool> bits;
  OracleKind k_;
};

struct ResidueImpl final : OracleImpl {
  ResidueImpl(std::uint64_t m, std::vector<bool> r) : modulus(m), hit(std::move(r)) {}
  bool test(std::uint64_t n, StepMeter& meter) const override {
    meter.charge();
    return hit[n % modulus];
  }
  OracleKind kind() const override { return OracleKind::ResidueUnion; }
  std::uint64_t modulus;
  std::vector<bool> hit;
};

/// ⋃_{k ∈ index set} R_k; the index set is a 64-bit mask or an index oracle.
struct RkImpl final : OracleImpl {
  bool test(std::uint64_t n, StepMeter& meter) const override {
    meter.charge();
    if (n == 0) return include_zero;
    auto k = static_cast<unsigned>(__builtin_ctzll(n));
    if (index_rule) return index_rule->contains(k, meter);
    return (mask >> k) & 1u;
  }
  OracleKind kind() const override { return OracleKind::RkUnion; }
  std::uint64_t mask = 0;
  std::shared_ptr<SetOracle> index_rule;
  bool include_zero = false;
};

}  // namespace detail

/// Index of the R_k containing m > 0 (number of trailing zero bits).
inline unsigned rk_index(std::uint64_t m) {
  if (m == 0) throw InvalidArgument("0 lies in no R_k");
  return static_cast<unsigned>(__builtin_ctzll(m));
}

inline bool in_rk(std::uint64_t m, unsigned k) { return m != 0 && rk_index(m) == k; }

/// Bit b_i of the binary expansion of r ∈ (0,1), taking the expansion with
/// infinitely many ones when r is dyadic: b_i = (⌈r·2^{i+1}⌉ − 1) mod 2.
inline bool binary_digit(const Rational& r, unsigned i) {
  Rational scaled = r;
  BigInt p = 1;
  p <<= (i + 1);
  scaled *= Rational(p);
  BigInt c = ceil_of(scaled) - 1;
  return (c & 1) != 0;
}

namespace sets {

inline SetOracle rule(std::string label, RulePredicate fn, std::uint64_t budget = kDefaultStepBudget) {
  return SetOracle(std::make_shared<detail::RuleImpl>(std::move(fn)), std::move(label), budget);
}

inline SetOracle empty() {
  return rule("empty", [](std::uint64_t, StepMeter& m) { m.charge(); return false; });
}

inline SetOracle omega() {
  return rule("omega", [](std::uint64_t, StepMeter& m) { m.charge(); return true; });
}

inline SetOracle explicit_bits(std::vector<bool> bits, std::string label = "explicit",
                               OracleKind kind = OracleKind::ExplicitBitset) {
  return SetOracle(std::make_shared<detail::BitsetImpl>(std::move(bits), kind), std::move(label));
}

inline SetOracle from_members(const std::vector<std::uint64_t>& members, std::string label = "explicit") {
  std::uint64_t top = 0;
  for (auto x : members) top = std::max(top, x + 1);
  std::vector<bool> bits(top, false);
  for (auto x : members) bits[x] = true;
  return explicit_bits(std::move(bits), std::move(label));
}

/// Union of residue classes modulo m.
inline SetOracle residue_union(std::uint64_t m, const std::vector<std::uint64_t>& residues,
                               std::string label = "") {
  if (m < 1) throw InvalidArgument("residue_union: modulus must be >= 1");
  std::vector<bool> hit(m, false);
  for (auto r : residues) {
    if (r >= m) throw InvalidResidue("residue " + std::to_string(r) + " >= modulus " + std::to_string(m));
    hit[r] = true;
  }
  if (label.empty()) label = "residues mod " + std::to_string(m);
  return SetOracle(std::make_shared<detail::ResidueImpl>(m, std::move(hit)), std::move(label));
}

inline SetOracle evens() { return residue_union(2, {0}, "evens"); }
inline SetOracle odds() { return residue_union(2, {1}, "odds"); }
inline SetOracle multiples(std::uint64_t k) { return residue_union(k, {0}, "multiples of " + std::to_string(k)); }

/// ⋃_{k ∈ indices} R_k for a finite index list (indices < 64).
inline SetOracle rk_union(const std::vector<unsigned>& indices, bool include_zero = false) {
  auto impl = std::make_shared<detail::RkImpl>();
  std::string label = "R{";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= 64) throw InvalidArgument("rk_union: index >= 64 has no member below 2^64");
    impl->mask |= (std::uint64_t{1} << indices[i]);
    label += (i ? "," : "") + std::to_string(indices[i]);
  }
  label += "}";
  impl->include_zero = include_zero;
  return SetOracle(impl, label);
}

inline SetOracle rk(unsigned k) { return rk_union({k}).relabeled("R_" + std::to_string(k)); }

/// R(A) = ⋃_{n ∈ A} R_n for an index oracle A.
inline SetOracle rk_union_rule(const SetOracle& indices, bool include_zero = false) {
  auto impl = std::make_shared<detail::RkImpl>();
  impl->index_rule = std::make_shared<SetOracle>(indices);
  impl->include_zero = include_zero;
  return SetOracle(impl, "R(" + indices.label() + ")");
}

/// ⋃_{b_i = 1} R_i for the binary expansion .b_0 b_1 ... of r ∈ (0,1); density r.
inline SetOracle rk_union_binary(const Rational& r, bool include_zero = false) {
  if (r <= 0 || r >= 1) throw InvalidArgument("rk_union_binary: r must lie in (0,1)");
  auto impl = std::make_shared<detail::RkImpl>();
  for (unsigned i = 0; i < 64; ++i)
    if (binary_digit(r, i)) impl->mask |= (std::uint64_t{1} << i);
  impl->include_zero = include_zero;
  return SetOracle(impl, "R[binary " + to_string(r) + "]");
}

inline SetOracle at_least(std::uint64_t k) {
  return rule(">=" + std::to_string(k), [k](std::uint64_t n, StepMeter& m) { m.charge(); return n >= k; });
}

inline SetOracle below(std::uint64_t k) {
  return rule("<" + std::to_string(k), [k](std::uint64_t n, StepMeter& m) { m.charge(); return n < k; });
}

inline SetOracle powers_of_two() {
  return rule("powers of two", [](std::uint64_t n, StepMeter& m) {
    m.charge();
    return n != 0 && (n & (n - 1)) == 0;
  });
}

inline SetOracle complement(const SetOracle& a) {
  return rule("~" + a.label(), [a](std::uint64_t n, StepMeter& m) { return !a.contains(n, m); },
              a.step_budget());
}

inline SetOracle union_of(const SetOracle& a, const SetOracle& b) {
  return rule("(" + a.label() + " | " + b.label() + ")",
              [a, b](std::uint64_t n, StepMeter& m) { return a.contains(n, m) || b.contains(n, m); },
              std::max(a.step_budget(), b.step_budget()));
}

inline SetOracle intersection(const SetOracle& a, const SetOracle& b) {
  return rule("(" + a.label() + " & " + b.label() + ")",
              [a, b](std::uint64_t n, StepMeter& m) { return a.contains(n, m) && b.contains(n, m); },
              std::max(a.step_budget(), b.step_budget()));
}

inline SetOracle difference(const SetOracle& a, const SetOracle& b) {
  return rule("(" + a.label() + " \\ " + b.label() + ")",
              [a, b](std::uint64_t n, StepMeter& m) { return a.contains(n, m) && !b.contains(n, m); },
              std::max(a.step_budget(), b.step_budget()));
}

inline SetOracle symmetric_difference(const SetOracle& a, const SetOracle& b) {
  return rule("(" + a.label() + " ^ " + b.label() + ")",
              [a, b](std::uint64_t n, StepMeter& m) { return a.contains(n, m) != b.contains(n, m); },
              std::max(a.step_budget(), b.step_budget()));
}

}  // namespace sets

/// Membership of [0, n) materialized as bits.
inline std::vector<bool> materialize(const SetOracle& s, std::uint64_t n) {
  std::vector<bool> bits(n);
  for (std::uint64_t x = 0; x < n; ++x) bits[x] = s.contains(x);
  return bits;
}

}  // namespace density
