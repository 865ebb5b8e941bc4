#pragma once

// Generic, coarse and density-r computability evaluated on a finite window,
// plus the canonical-index constructions: D_n, the hitting set
// C = {n : D_n ∩ X ≠ ∅}, the avoiding sets T = {n : D_n ∩ D = ∅}, and
// strong-array extraction from an enumeration of hitting indices.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "density/ce_stream.hpp"
#include "density/errors.hpp"
#include "density/partial_decider.hpp"
#include "density/profile.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"
#include "density/set_oracle.hpp"

namespace density {

// ---------------------------------------------------------------------------
// partial deciders against a set

struct GenericityReport {
  std::uint64_t n_max = 0, stage_budget = 0, from = 1;
  /// Exact profile of the domain {n : d(n) converges by stage_budget}.
  DensityProfile domain;
  /// n where the decider converged to a value different from A(n).
  std::vector<std::uint64_t> errors;
  /// Points still undefined at the budget; never counted as domain.
  std::uint64_t undefined = 0;
  /// min/max of domain ρ_n over [from, n_max].
  WindowBounds domain_window;
  Rational r{1};
  bool agrees = true;
  bool domain_ge_r = false;
};

/// Flags recomputed from the raw fields, for auditing a stored report.
inline std::pair<bool, bool> genericity_flags(const GenericityReport& g) {
  auto w = window_bounds(g.domain, g.from, g.n_max);
  return {g.errors.empty(), w.min >= g.r};
}

/// Resolves d(n, stage_budget) for n < n_max and compares every defined value with A(n).
/// The flag domain_ge_r compares the window minimum of the domain with r (1 by default: generic
/// computability on the window).
inline GenericityReport evaluate_partial(const PartialDecider& d, const SetOracle& a, std::uint64_t n_max,
                                         std::uint64_t stage_budget, const Rational& r = Rational(1),
                                         std::uint64_t from = 1) {
  if (n_max < 1) throw InvalidArgument("evaluate_partial: n_max must be >= 1");
  if (from < 1 || from > n_max) throw InvalidWindow("evaluate_partial: from must lie in [1, n_max]");
  GenericityReport g;
  g.n_max = n_max;
  g.stage_budget = stage_budget;
  g.from = from;
  g.r = r;
  std::vector<bool> dom(n_max);
  for (std::uint64_t n = 0; n < n_max; ++n) {
    Tri v = d.eval(n, stage_budget);
    if (v == Tri::Undefined) {
      ++g.undefined;
      continue;
    }
    dom[n] = true;
    if ((v == Tri::One) != a.contains(n)) g.errors.push_back(n);
  }
  g.domain = DensityProfile::from_bits(dom, "dom(" + d.label() + ")");
  g.domain_window = window_bounds(g.domain, from, n_max);
  g.agrees = g.errors.empty();
  g.domain_ge_r = g.domain_window.min >= r;
  return g;
}

struct CoarseReport {
  /// Profile of {k : f(k) = A(k)}.
  DensityProfile agreement;
  WindowBounds window;
};

/// f is a total rule; a rule out of steps raises BudgetExceeded from the oracle.
inline CoarseReport coarse_report(const SetOracle& f, const SetOracle& a, std::uint64_t n_max) {
  if (n_max < 1) throw InvalidArgument("coarse_report: n_max must be >= 1");
  std::vector<bool> agree(n_max);
  for (std::uint64_t k = 0; k < n_max; ++k) agree[k] = f.contains(k) == a.contains(k);
  CoarseReport c{DensityProfile::from_bits(agree, "agree(" + f.label() + "," + a.label() + ")"), {}};
  c.window = window_bounds(c.agreement, 1, n_max);
  return c;
}

struct AtDensityVerdict {
  bool verdict = false;
  /// min over n ∈ [from, n_max] of the domain density: a finite-window estimate of α, not α itself.
  Rational alpha_estimate;
  std::uint64_t argmin = 0;
  GenericityReport report;
  static constexpr const char* kind = "window estimator";
};

inline AtDensityVerdict at_density_report(const PartialDecider& d, const SetOracle& a, const Rational& r,
                                          std::uint64_t n_max, std::uint64_t from, std::uint64_t stage_budget) {
  if (r < 0 || r > 1) throw InvalidArgument("at_density_report: r must lie in [0,1]");
  if (from < 1) throw InvalidArgument("at_density_report: from must be >= 1");
  AtDensityVerdict v;
  v.report = evaluate_partial(d, a, n_max, stage_budget, r, from);
  v.alpha_estimate = v.report.domain_window.min;
  v.argmin = v.report.domain_window.argmin;
  v.verdict = v.report.agrees && v.report.domain_ge_r;
  return v;
}

/// Columns n, domain_count, domain_rho, errors_below_n.
inline void write_genericity_csv(std::ostream& os, const GenericityReport& g) {
  os << "n,domain_count,domain_rho,errors_below_n\n";
  std::size_t e = 0;
  for (std::uint64_t n = 1; n <= g.n_max; ++n) {
    while (e < g.errors.size() && g.errors[e] < n) ++e;
    os << n << ',' << g.domain.count(n) << ',' << to_string(g.domain.rho(n)) << ',' << e << '\n';
  }
}

inline void write_coarse_csv(std::ostream& os, const CoarseReport& c) {
  os << "n,agree_count,agree_rho\n";
  for (std::uint64_t n = 1; n <= c.agreement.n_max(); ++n)
    os << n << ',' << c.agreement.count(n) << ',' << to_string(c.agreement.rho(n)) << '\n';
}

// ---------------------------------------------------------------------------
// canonical indices: n = Σ 2^{n_i} ↔ D_n = {n_1, ..., n_k}

inline constexpr unsigned kCanonicalWidth = 63;

inline std::vector<std::uint64_t> canonical_set(std::uint64_t n) {
  if (n >> kCanonicalWidth) throw CapExceeded("canonical index " + std::to_string(n) + " needs bit 63; use the big variant");
  std::vector<std::uint64_t> d;
  for (unsigned i = 0; n; ++i, n >>= 1)
    if (n & 1) d.push_back(i);
  return d;
}

inline std::uint64_t canonical_index(const std::vector<std::uint64_t>& d) {
  std::uint64_t n = 0;
  for (auto x : d) {
    if (x >= kCanonicalWidth) throw CapExceeded("element " + std::to_string(x) + " exceeds the canonical width cap");
    std::uint64_t bit = std::uint64_t{1} << x;
    if (n & bit) throw InvalidArgument("canonical_index: repeated element " + std::to_string(x));
    n |= bit;
  }
  return n;
}

inline std::vector<std::uint64_t> canonical_set_big(BigInt n) {
  if (n < 0) throw InvalidArgument("canonical_set_big: negative index");
  std::vector<std::uint64_t> d;
  for (std::uint64_t i = 0; n != 0; ++i, n >>= 1)
    if ((n & 1) != 0) d.push_back(i);
  return d;
}

inline BigInt canonical_index_big(const std::vector<std::uint64_t>& d) {
  BigInt n = 0;
  for (auto x : d) {
    BigInt bit = BigInt(1) << static_cast<unsigned>(x);
    if ((n & bit) != 0) throw InvalidArgument("canonical_index_big: repeated element " + std::to_string(x));
    n |= bit;
  }
  return n;
}

struct CanonicalIndex {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> set;

  static CanonicalIndex of_index(std::uint64_t n) { return {n, canonical_set(n)}; }
  static CanonicalIndex of_set(std::vector<std::uint64_t> d) {
    std::sort(d.begin(), d.end());
    auto n = canonical_index(d);
    return {n, std::move(d)};
  }
};

// ---------------------------------------------------------------------------
// hitting set and its ψ

struct HitSet {
  /// C = {n : D_n ∩ X ≠ ∅}.
  SetOracle c;
  /// ψ(n) = 1 when D_n ∩ X ≠ ∅, undefined otherwise.
  PartialDecider psi;
};

inline bool hits(std::uint64_t n, const SetOracle& x, StepMeter& m) {
  for (unsigned i = 0; n; ++i, n >>= 1)
    if ((n & 1) && x.contains(i, m)) return true;
  return false;
}

inline HitSet hitset_build(const SetOracle& x) {
  auto c = sets::rule("hit(" + x.label() + ")", [x](std::uint64_t n, StepMeter& m) { return hits(n, x, m); },
                      x.step_budget());
  PartialDecider psi(
      [c](std::uint64_t n, std::uint64_t) { return c.contains(n) ? Tri::One : Tri::Undefined; },
      "psi(" + x.label() + ")");
  return {c, psi};
}

/// T = {n : D_n ∩ X = ∅}, the pointwise complement of the hitting set.
inline SetOracle avoid_set(const SetOracle& x) {
  return sets::rule("avoid(" + x.label() + ")", [x](std::uint64_t n, StepMeter& m) { return !hits(n, x, m); },
                    x.step_budget());
}

// ---------------------------------------------------------------------------
// T = {n : D_n ∩ D = ∅} as residues modulo 2^{m+1}

struct AvoidDensity {
  Rational density;
  std::uint64_t modulus = 1;
  /// r < modulus with bit i of r clear for every i ∈ D.
  std::vector<std::uint64_t> residues;
};

/// Residue listings up to modulus 2^25.
inline constexpr std::uint64_t kAvoidMaxElement = 24;

inline AvoidDensity avoid_density(const std::vector<std::uint64_t>& d) {
  std::uint64_t mask = 0;
  for (auto x : d) {
    if (x > kAvoidMaxElement) throw CapExceeded("avoid_density: element " + std::to_string(x) + " exceeds the residue cap");
    mask |= std::uint64_t{1} << x;
  }
  AvoidDensity out;
  unsigned size = static_cast<unsigned>(__builtin_popcountll(mask));
  out.density = pow2_inv(size);
  out.modulus = mask == 0 ? 1 : std::uint64_t{2} << floor_log2(mask);
  for (std::uint64_t r = 0; r < out.modulus; ++r)
    if ((r & mask) == 0) out.residues.push_back(r);
  if (residue_union_density(out.modulus, out.residues) != out.density)
    throw ContractViolated("avoid_density: residue listing disagrees with 2^-|D|");
  return out;
}

// ---------------------------------------------------------------------------
// strong arrays

struct StrongArray {
  std::vector<std::vector<std::uint64_t>> sets;
  /// Canonical index and stage of each F_j as found in T.
  std::vector<std::uint64_t> indices, stages;
  std::vector<Certificate> certificates;
};

/// Search ran out of stages while looking for F_j; partial() holds F_0..F_{j-1}.
class StrongArrayExhausted : public BudgetExceeded {
 public:
  StrongArrayExhausted(std::uint64_t j, StrongArray partial)
      : BudgetExceeded(j, "no index in T avoids [0,m) for F_" + std::to_string(j)), partial_(std::move(partial)) {}
  const StrongArray& partial() const noexcept { return partial_; }

 private:
  StrongArray partial_;
};

inline std::vector<Certificate> strong_array_certificates(const StrongArray& a, const SetOracle& x) {
  std::vector<Certificate> certs;
  for (std::size_t j = 0; j < a.sets.size(); ++j) {
    std::uint64_t hit = 0;
    for (auto v : a.sets[j]) hit += x.contains(v);
    certs.push_back(Certificate::make("strong:meets_X", j, a.indices[j], Rational(BigInt(hit)), Rel::Gt, Rational(0)));
    for (std::size_t i = 0; i < j; ++i) {
      std::vector<std::uint64_t> both;
      std::set_intersection(a.sets[i].begin(), a.sets[i].end(), a.sets[j].begin(), a.sets[j].end(),
                            std::back_inserter(both));
      certs.push_back(Certificate::make("strong:disjoint", i * a.sets.size() + j, a.indices[j],
                                        Rational(BigInt(both.size())), Rel::Eq, Rational(0)));
    }
  }
  return certs;
}

/// F_j = D_n for the first n enumerated by T (stage order, then increasing n) with
/// D_n ∩ [0, m) = ∅, where m = 1 + max ⋃_{i<j} F_i and m = 0 for j = 0.
inline StrongArray strong_array_extract(const CEStream& t, const SetOracle& x, std::uint64_t count,
                                        std::uint64_t stage_budget) {
  StrongArray out;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seen;  // (n, stage) in enumeration order
  std::vector<bool> used;
  std::uint64_t next_stage = 0, m = 0;
  for (std::uint64_t j = 0; j < count; ++j) {
    auto avoids = [&](std::uint64_t n) { return m >= 64 ? n == 0 : (n & ((std::uint64_t{1} << m) - 1)) == 0; };
    std::optional<std::size_t> found;
    for (std::size_t q = 0; q < seen.size() && !found; ++q)
      if (!used[q] && avoids(seen[q].first)) found = q;
    while (!found && next_stage <= stage_budget) {
      auto xs = t.enumerate(next_stage);
      std::sort(xs.begin(), xs.end());
      for (auto n : xs) {
        if (!found && avoids(n)) found = seen.size();
        seen.emplace_back(n, next_stage);
        used.push_back(false);
      }
      ++next_stage;
    }
    if (!found) {
      out.certificates = strong_array_certificates(out, x);
      throw StrongArrayExhausted(j, std::move(out));
    }
    std::size_t pick = *found;
    used[pick] = true;
    auto [n, stage] = seen[pick];
    std::vector<std::uint64_t> f = n >> kCanonicalWidth ? canonical_set_big(BigInt(n)) : canonical_set(n);
    bool meets = std::any_of(f.begin(), f.end(), [&](std::uint64_t v) { return x.contains(v); });
    if (!meets)
      throw ContractViolated("strong_array_extract: T enumerated " + std::to_string(n) + " whose D_n misses X");
    m = f.back() + 1;
    out.sets.push_back(std::move(f));
    out.indices.push_back(n);
    out.stages.push_back(stage);
  }
  out.certificates = strong_array_certificates(out, x);
  return out;
}

}  // namespace density
