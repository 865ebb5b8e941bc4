#pragma once

// Exact density profiles ρ_n(S) = |S ∩ [0,n)|/n and finite-window estimators.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "density/errors.hpp"
#include "density/rational.hpp"
#include "density/set_oracle.hpp"

namespace density {

inline std::uint64_t prefix_count(const SetOracle& s, std::uint64_t n) {
  if (n < 1) throw InvalidArgument("prefix_count: n must be >= 1");
  std::uint64_t c = 0;
  for (std::uint64_t x = 0; x < n; ++x) c += s.contains(x) ? 1 : 0;
  return c;
}

inline Rational rho(const SetOracle& s, std::uint64_t n) { return ratio(prefix_count(s, n), n); }

/// counts()[n] = |S ∩ [0,n)| for 0 ≤ n ≤ n_max (counts()[0] = 0 is a sentinel; ρ_0 is undefined).
class DensityProfile {
 public:
  DensityProfile() : counts_(1, 0) {}
  explicit DensityProfile(std::vector<std::uint64_t> counts, std::string label = "")
      : counts_(std::move(counts)), label_(std::move(label)) {
    if (counts_.empty() || counts_[0] != 0) throw InvalidArgument("profile must start with counts[0] = 0");
  }

  static DensityProfile from_bits(const std::vector<bool>& bits, std::string label = "") {
    std::vector<std::uint64_t> c(bits.size() + 1, 0);
    for (std::size_t x = 0; x < bits.size(); ++x) c[x + 1] = c[x] + (bits[x] ? 1 : 0);
    return DensityProfile(std::move(c), std::move(label));
  }

  std::uint64_t n_max() const noexcept { return counts_.size() - 1; }
  std::uint64_t count(std::uint64_t n) const {
    if (n > n_max()) throw InvalidWindow("profile index " + std::to_string(n) + " beyond n_max");
    return counts_[n];
  }
  bool member(std::uint64_t x) const { return count(x + 1) != count(x); }
  Rational rho(std::uint64_t n) const {
    if (n < 1) throw InvalidWindow("rho_0 is undefined");
    return ratio(count(n), n);
  }
  double rho_double(std::uint64_t n) const { return to_double(count(n), n); }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::string label_;
};

/// Single-pass profile; with threads > 1 the window is scanned in chunks whose
/// counts are merged in order, giving the same result as the sequential scan.
inline DensityProfile density_profile(const SetOracle& s, std::uint64_t n_max, unsigned threads = 1) {
  if (n_max < 1) throw InvalidArgument("density_profile: n_max must be >= 1");
  std::vector<std::uint64_t> c(n_max + 1, 0);
  if (threads <= 1 || n_max < 4096) {
    for (std::uint64_t x = 0; x < n_max; ++x) c[x + 1] = c[x] + (s.contains(x) ? 1 : 0);
    return DensityProfile(std::move(c), s.label());
  }
  std::vector<std::uint8_t> hit(n_max, 0);
  std::uint64_t chunk = (n_max + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        std::uint64_t lo = t * chunk, hi = std::min(n_max, lo + chunk);
        for (std::uint64_t x = lo; x < hi; ++x) hit[x] = s.contains(x) ? 1 : 0;
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  // Lowest chunk wins so the reported offender matches the sequential scan.
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  for (std::uint64_t x = 0; x < n_max; ++x) c[x + 1] = c[x] + hit[x];
  return DensityProfile(std::move(c), s.label());
}

/// Extrema of ρ_n over n ∈ [from, to]: a finite-window estimator, not a limit.
struct WindowBounds {
  Rational min, max;
  std::uint64_t argmin = 0, argmax = 0;
  std::uint64_t from = 0, to = 0;
  static constexpr const char* kind = "window estimator";
};

inline WindowBounds window_bounds(const DensityProfile& p, std::uint64_t from, std::uint64_t to) {
  if (from < 1 || from > to || to > p.n_max())
    throw InvalidWindow("window [" + std::to_string(from) + "," + std::to_string(to) + "] is empty or outside [1," +
                        std::to_string(p.n_max()) + "]");
  std::uint64_t lo = from, hi = from;
  for (std::uint64_t n = from + 1; n <= to; ++n) {
    if (frac_cmp(p.count(n), n, p.count(lo), lo) < 0) lo = n;
    if (frac_cmp(p.count(n), n, p.count(hi), hi) > 0) hi = n;
  }
  return {p.rho(lo), p.rho(hi), lo, hi, from, to};
}

/// Exact density |residues|/m of a union of residue classes modulo m.
inline Rational residue_union_density(std::uint64_t m, const std::vector<std::uint64_t>& residues) {
  if (m < 1) throw InvalidArgument("residue_union_density: m must be >= 1");
  std::vector<bool> seen(m, false);
  std::uint64_t distinct = 0;
  for (auto r : residues) {
    if (r >= m) throw InvalidResidue("residue " + std::to_string(r) + " >= modulus " + std::to_string(m));
    if (!seen[r]) ++distinct, seen[r] = true;
  }
  return ratio(distinct, m);
}

/// ρ_{km} of the residue union equals its density for every k with km ≤ p.n_max().
inline bool residue_period_check(const DensityProfile& p, std::uint64_t m, const std::vector<std::uint64_t>& residues) {
  Rational d = residue_union_density(m, residues);
  for (std::uint64_t n = m; n <= p.n_max(); n += m)
    if (p.rho(n) != d) return false;
  return true;
}

/// CSV with header n,count,rho_num,rho_den,rho_float; ρ in lowest terms.
inline void write_profile_csv(std::ostream& os, const DensityProfile& p) {
  os << "n,count,rho_num,rho_den,rho_float\n";
  for (std::uint64_t n = 1; n <= p.n_max(); ++n) {
    std::uint64_t c = p.count(n), g = std::gcd(c, n);
    os << n << ',' << c << ',' << c / g << ',' << n / g << ',' << format_double(p.rho_double(n)) << '\n';
  }
}

}  // namespace density
