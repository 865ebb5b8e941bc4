#pragma once

// Symmetric-difference profiles: the window estimators of d(A,B) = lower ρ(A △ B)
// and D(A,B) = upper ρ(A △ B).
//
// D satisfies the triangle inequality pointwise in n, and so do window minima
// taken over a common window.  The failure of the triangle inequality for d is
// a statement about limits only; no finite window exhibits it, so nothing here
// asserts it.

#include <cstdint>
#include <numeric>
#include <ostream>

#include "density/profile.hpp"

namespace density {

struct SymDiffProfile {
  DensityProfile a, b, sym;
  /// B ⊆ A verified by scan over [0, n_max).
  bool b_subset_a = false;
  /// Largest n with B ∩ [0,n) ⊆ A ∩ [0,n).
  std::uint64_t subset_prefix = 0;

  std::uint64_t n_max() const { return sym.n_max(); }

  /// ρ_n(A △ B) = ρ_n(A) − ρ_n(B) whenever inclusion holds below n.
  bool diff_identity_holds(std::uint64_t n) const {
    if (n > subset_prefix) return false;
    return sym.count(n) == a.count(n) - b.count(n);
  }
};

inline SymDiffProfile symdiff_profile(const SetOracle& a, const SetOracle& b, std::uint64_t n_max) {
  if (n_max < 1) throw InvalidArgument("symdiff_profile: n_max must be >= 1");
  std::vector<bool> ba(n_max), bb(n_max), bs(n_max);
  std::uint64_t prefix = n_max;
  for (std::uint64_t x = 0; x < n_max; ++x) {
    ba[x] = a.contains(x);
    bb[x] = b.contains(x);
    bs[x] = ba[x] != bb[x];
    if (prefix == n_max && bb[x] && !ba[x]) prefix = x;
  }
  SymDiffProfile r{DensityProfile::from_bits(ba, a.label()), DensityProfile::from_bits(bb, b.label()),
                   DensityProfile::from_bits(bs, a.label() + " ^ " + b.label()), prefix == n_max, prefix};
  return r;
}

struct DDWindow {
  Rational d_est, D_est;
  std::uint64_t from = 0, to = 0;
  static constexpr const char* kind = "window estimator";
};

inline DDWindow dD_window(const SetOracle& a, const SetOracle& b, std::uint64_t from, std::uint64_t to) {
  if (from < 1 || from > to) throw InvalidWindow("dD_window: empty window");
  auto p = symdiff_profile(a, b, to);
  auto w = window_bounds(p.sym, from, to);
  return {w.min, w.max, from, to};
}

/// CSV columns n,rhoA,rhoB,rhoSym (exact "p/q") then the float renderings.
inline void write_metrics_csv(std::ostream& os, const SymDiffProfile& p) {
  os << "n,rhoA,rhoB,rhoSym,rhoA_float,rhoB_float,rhoSym_float\n";
  auto frac = [](std::uint64_t c, std::uint64_t n) {
    std::uint64_t g = std::gcd(c, n);
    return std::to_string(c / g) + "/" + std::to_string(n / g);
  };
  for (std::uint64_t n = 1; n <= p.n_max(); ++n) {
    os << n << ',' << frac(p.a.count(n), n) << ',' << frac(p.b.count(n), n) << ',' << frac(p.sym.count(n), n) << ','
       << format_double(p.a.rho_double(n)) << ',' << format_double(p.b.rho_double(n)) << ','
       << format_double(p.sym.rho_double(n)) << '\n';
  }
}

}  // namespace density
