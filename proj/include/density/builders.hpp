#pragma once

// Sets with prescribed density behaviour, built from rational sequences or
// monotone stage functions:
//   infsup_build        computable A with ρ oscillating along a sequence q_n
//   rat_adjust          one-shot extension F ∪ [a,b) with ρ_c = r exactly
//   sigma3_transfer     c.e. A with ρ_{t(n)}(A) = ρ_n(B) for a Δ2-approximated B
//   double_build        c.e. A with block densities h(n) = lim_s g(n,s)
//   pi2_density_build   the g of a limsup sequence, fed to double_build
//   sparse_simple_build a sparse Post-style set meeting every roster stream
//
// Each build certifies its exact finite-window inequalities; verify_* recomputes
// them from the artifact and the inputs alone.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "density/ce_stream.hpp"
#include "density/construction.hpp"
#include "density/errors.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"
#include "density/sequences.hpp"
#include "density/set_oracle.hpp"

namespace density {

namespace detail {

inline std::uint64_t to_u64_or_never(const BigInt& v) {
  if (v < 0) return 0;
  if (v >= BigInt(kNever)) return kNever;
  return static_cast<std::uint64_t>(v);
}

/// a/b vs c/d for counts and positions.
inline int cmp_ratio(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) { return frac_cmp(a, b, c, d); }

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// infsup

/// q_s moved into (0,1): 1/(s+1) when q_s ≤ 0, 1 − 1/(s+1) when q_s ≥ 1.
inline Rational clamp_open(const Rational& q, std::uint64_t s) {
  if (q <= 0) return ratio(1, s + 1);
  if (q >= 1) return Rational(1) - ratio(1, s + 1);
  return q;
}

namespace seqs {

/// s_{2n} = min(q_n, q*), s_{2n+1} = max(r_n, q*): liminf from q, limsup from r.
inline RationalSequence lsp_interleave(const RationalSequence& q, const RationalSequence& r, const Rational& pivot) {
  RationalSequence lo([q, pivot](std::uint64_t n) { return std::min(q(n), pivot); }, q.label());
  RationalSequence hi([r, pivot](std::uint64_t n) { return std::max(r(n), pivot); }, r.label());
  auto s = interleave(lo, hi);
  return RationalSequence([s](std::uint64_t n) { return s(n); }, "lsp(" + q.label() + "," + r.label() + ";" + to_string(pivot) + ")");
}

}  // namespace seqs

namespace detail {

/// Next checkpoint from (s_n, c = |A↾s_n|) toward q; `include` says whether the block joins A.
inline std::pair<BigInt, bool> infsup_step(std::uint64_t sn, std::uint64_t c, const Rational& q) {
  BigInt floor_t(sn + 1);
  if (ratio(c, sn) > q) {
    BigInt t = ceil_of(Rational(BigInt(c)) / q);
    return {std::max(floor_t, t), false};
  }
  if (sn <= c) return {floor_t, true};
  BigInt t = ceil_of(Rational(BigInt(sn - c)) / (Rational(1) - q));
  return {std::max(floor_t, t), true};
}

/// Betweenness of ρ_k on (lo, hi), by scan; returns (min, max) of ρ_k as ratios, or nullopt if empty.
inline std::optional<std::pair<Rational, Rational>> interior_extrema(const std::vector<std::uint64_t>& counts,
                                                                     std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo + 1) return std::nullopt;
  std::uint64_t kmin = lo + 1, kmax = lo + 1;
  for (std::uint64_t k = lo + 2; k < hi; ++k) {
    if (cmp_ratio(counts[k], k, counts[kmin], kmin) < 0) kmin = k;
    if (cmp_ratio(counts[k], k, counts[kmax], kmax) > 0) kmax = k;
  }
  return std::make_pair(ratio(counts[kmin], kmin), ratio(counts[kmax], kmax));
}

}  // namespace detail

/// Re-checks an infsup artifact against q: the checkpoints follow the two-case recursion,
/// blocks are wholly in or out, |ρ_{s_n}(A) − q_n| ≤ 1/(n+1), and ρ_k is between the
/// checkpoint densities inside every block.
inline VerifyReport verify_infsup(const BuildArtifact& art, const RationalSequence& q) {
  VerifyReport rep;
  const auto& s = art.marks;
  if (art.entry.size() != art.n_max || s.empty() || s[0] != 1 || art.n_max < 1 || !art.in(0)) {
    rep.fail("infsup: artifact must start with s_0 = 1 and 0 ∈ A");
    return rep;
  }
  auto counts = art.counts();
  for (std::size_t n = 0; n < s.size(); ++n) {
    if (s[n] > art.n_max) {
      rep.fail("infsup: checkpoint " + std::to_string(n) + " lies beyond the window");
      return rep;
    }
    Rational qn = clamp_open(q(n), n);
    Rational r = ratio(counts[s[n]], s[n]);
    Rational gap = r > qn ? r - qn : qn - r;
    rep.add(Certificate::make("infsup:i", n, s[n], gap, Rel::Le, ratio(1, n + 1)));
  }
  // Blocks: recursion, uniformity, betweenness.
  for (std::size_t n = 0; n < s.size(); ++n) {
    const std::uint64_t lo = s[n];
    const bool last = n + 1 == s.size();
    const std::uint64_t hi = last ? art.n_max : s[n + 1];
    if (lo >= art.n_max && last) break;
    auto [t, include] = detail::infsup_step(lo, counts[lo], clamp_open(q(n + 1), n + 1));
    if (!last && BigInt(hi) != t) {
      rep.fail("infsup: checkpoint " + std::to_string(n + 1) + " is " + std::to_string(hi) + ", recursion gives " +
               t.str());
      continue;
    }
    if (last && BigInt(hi) >= t) {
      rep.fail("infsup: trailing block reaches the next checkpoint");
      continue;
    }
    for (std::uint64_t x = lo; x < hi; ++x)
      if (art.in(x) != include) {
        rep.fail("infsup: block " + std::to_string(n) + " is not uniform at " + std::to_string(x));
        break;
      }
    if (last) break;
    if (auto ext = detail::interior_extrema(counts, lo, hi)) {
      Rational a = ratio(counts[lo], lo), b = ratio(counts[hi], hi);
      rep.add(Certificate::make("infsup:ii", n, lo, ext->first, Rel::Ge, std::min(a, b)));
      rep.add(Certificate::make("infsup:ii", n, hi, ext->second, Rel::Le, std::max(a, b)));
    }
  }
  return rep;
}

/// Computable A and checkpoints s_0 = 1 < s_1 < ... with |ρ_{s_n}(A) − q_n| ≤ 1/(n+1),
/// for n ≤ n_checkpoints while the checkpoints fit below n_max.  When they all fit the window
/// shrinks to s_last; otherwise the last block is cut at n_max with a "Truncated" diagnostic.
inline BuildArtifact infsup_build(const RationalSequence& q, std::uint64_t n_checkpoints, std::uint64_t n_max) {
  if (n_max < 1) throw InvalidArgument("infsup_build: n_max must be >= 1");
  BuildArtifact art;
  art.construction = "infsup";
  art.n_max = n_max;
  art.stage_max = 0;
  art.entry.assign(n_max, kNever);
  art.entry[0] = 0;
  art.marks.push_back(1);
  art.targets.push_back(clamp_open(q(0), 0));
  std::uint64_t sn = 1, c = 1;
  for (std::uint64_t n = 0; n < n_checkpoints; ++n) {
    Rational qn = clamp_open(q(n + 1), n + 1);
    auto [tb, include] = detail::infsup_step(sn, c, qn);
    std::uint64_t t = detail::to_u64_or_never(tb);
    const std::uint64_t hi = std::min(t, n_max);
    if (include)
      for (std::uint64_t x = sn; x < hi; ++x) art.entry[x] = 0;
    art.trace.push_back(TraceEvent{n + 1, "checkpoint", {}}
                            .set("case", include ? 2 : 1)
                            .set("q", qn)
                            .set("s", t == kNever ? tb.str() : std::to_string(t)));
    if (t > n_max) {
      art.diagnostics.push_back({"Truncated", n + 1, "checkpoint s_" + std::to_string(n + 1) + " = " + tb.str() +
                                                         " exceeds n_max"});
      break;
    }
    if (include) c += t - sn;
    sn = t;
    art.marks.push_back(t);
    art.targets.push_back(qn);
  }
  if (!art.has_diagnostic("Truncated")) {
    // All checkpoints fit: the artifact is exactly A↾s_last.
    art.n_max = sn;
    art.entry.resize(sn);
  }
  auto rep = verify_infsup(art, q);
  if (!rep.ok) throw ContractViolated("infsup_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------------------------
// rat_adjust

struct RatAdjust {
  /// G = F ∪ [a, b), sorted.
  std::vector<std::uint64_t> G;
  std::uint64_t b = 0, c = 0;
};

/// The search bound den(r)·(d + a + m + 2), m = max F + 1 (0 for F = ∅): the least
/// admissible b never exceeds it.
inline BigInt rat_adjust_bound(const std::vector<std::uint64_t>& F, std::uint64_t a, std::uint64_t d,
                               const Rational& r) {
  BigInt m = F.empty() ? BigInt(0) : BigInt(*std::max_element(F.begin(), F.end())) + 1;
  return den_of(r) * (BigInt(d) + BigInt(a) + m + 2);
}

namespace detail {

/// Least b for the shape of F: k = a − |F ∩ [0,a)|, so |G_b| = b − k once b > max F.
/// Constraints: b > a, b > max F, p | (b − k), c = (b − k)q/p > d, and c ≥ b so that G_b ⊆ [0, c).
inline std::pair<BigInt, BigInt> rat_adjust_bc(std::uint64_t k, std::optional<std::uint64_t> max_f, std::uint64_t a,
                                               std::uint64_t d, const Rational& r) {
  if (r <= 0 || r >= 1) throw InvalidArgument("rat_adjust: r must lie in (0,1), got " + to_string(r));
  const BigInt p = num_of(r), q = den_of(r);
  BigInt lo = BigInt(a) + 1;
  if (max_f) lo = std::max(lo, BigInt(*max_f) + 1);
  lo = std::max(lo, ceil_of(Rational(BigInt(k) * q, q - p)));
  lo = std::max(lo, BigInt(d) * p / q + BigInt(k) + 1);
  BigInt rem = (lo - BigInt(k)) % p;
  BigInt b = rem == 0 ? lo : lo + (p - rem);
  return {b, (b - BigInt(k)) * q / p};
}

}  // namespace detail

/// G ⊇ F with G↾a = F↾a, G ∩ [a,∞) an initial segment of [a,∞), and ρ_c(G) = r for some c > d;
/// b is the least admissible right end.
inline RatAdjust rat_adjust(std::vector<std::uint64_t> F, std::uint64_t a, std::uint64_t d, const Rational& r) {
  std::sort(F.begin(), F.end());
  F.erase(std::unique(F.begin(), F.end()), F.end());
  std::uint64_t below_a = static_cast<std::uint64_t>(std::lower_bound(F.begin(), F.end(), a) - F.begin());
  std::optional<std::uint64_t> max_f;
  if (!F.empty()) max_f = F.back();
  auto [bb, cc] = detail::rat_adjust_bc(a - below_a, max_f, a, d, r);
  if (bb > BigInt(std::uint64_t{1} << 40) || cc > BigInt(std::uint64_t{1} << 62))
    throw CapExceeded("rat_adjust: result b = " + bb.str() + " exceeds the materialization cap");
  RatAdjust out;
  out.b = static_cast<std::uint64_t>(bb);
  out.c = static_cast<std::uint64_t>(cc);
  out.G.assign(F.begin(), F.begin() + static_cast<std::ptrdiff_t>(below_a));
  for (std::uint64_t x = a; x < out.b; ++x) out.G.push_back(x);
  return out;
}

// ---------------------------------------------------------------------------------------------
// sigma3_transfer

/// B_s(x) for x < window: a computable approximation whose columns are eventually constant.
struct Delta2Approx {
  std::function<bool(std::uint64_t x, std::uint64_t s)> member;
  std::uint64_t window = 0;
  std::string label = "B";

  bool at(std::uint64_t s, std::uint64_t x) const { return x < window && member(x, s); }

  static Delta2Approx constant(const SetOracle& b, std::uint64_t window) {
    return {[b](std::uint64_t x, std::uint64_t) { return b.contains(x); }, window, b.label()};
  }
  /// base with membership of x inverted from stage `from` on.
  static Delta2Approx flip(Delta2Approx base, std::uint64_t x, std::uint64_t from) {
    auto m = base.member;
    std::string label = base.label + " flip " + std::to_string(x) + "@" + std::to_string(from);
    return {[m, x, from](std::uint64_t y, std::uint64_t s) { return y == x && s >= from ? !m(y, s) : m(y, s); },
            base.window, std::move(label)};
  }
  /// x enters B at stage entry(x) (a c.e. approximation).
  static Delta2Approx from_table(const StageTable& t) {
    return {[t](std::uint64_t x, std::uint64_t s) { return t.in(x, s); }, t.n_max(), "table"};
  }
};

namespace detail {

/// ρ_n(B_s) moved into (0,1): 0 ↦ 1/(n+1), 1 ↦ 1 − 1/(n+1).
inline std::pair<Rational, bool> sigma3_target(const Delta2Approx& b, std::uint64_t s, std::uint64_t n) {
  std::uint64_t cnt = 0;
  for (std::uint64_t x = 0; x < n; ++x) cnt += b.at(s, x) ? 1 : 0;
  if (cnt == 0) return {ratio(1, n + 1), true};
  if (cnt == n) return {Rational(1) - ratio(1, n + 1), true};
  return {ratio(cnt, n), false};
}

}  // namespace detail

/// Re-checks a sigma3 artifact: t strictly increasing, A initial on every [t(k), t(k+1)), and
/// ρ_{t(n)}(A) equal to the (clamped) ρ_n(B_final) for every n the artifact marks settled.
inline VerifyReport verify_sigma3(const BuildArtifact& art, const Delta2Approx& b, std::uint64_t final_stage) {
  VerifyReport rep;
  const auto& t = art.marks;  // t(0) .. t(N+1)
  if (t.size() < 2) {
    rep.fail("sigma3: missing t row");
    return rep;
  }
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) rep.fail("sigma3: t is not strictly increasing at " + std::to_string(i));
  if (t.back() > art.n_max) rep.fail("sigma3: t row exceeds the window");
  if (!rep.ok) return rep;
  auto counts = art.counts();
  for (std::size_t k = 0; k < t.size(); ++k) {
    std::uint64_t lo = k == 0 ? 0 : t[k - 1], hi = t[k];
    std::uint64_t run = 0;
    while (lo + run < hi && art.in(lo + run)) ++run;
    rep.add(Certificate::make("sigma3:initial_segment", k, lo, Rational(BigInt(counts[hi] - counts[lo])), Rel::Eq,
                              Rational(BigInt(run))));
  }
  // Every adjustment ends below its c, and c ≤ t(N+1), so A is empty past the row.
  rep.add(Certificate::make("sigma3:beyond_row", t.size(), t.back(),
                            Rational(BigInt(counts[art.n_max] - counts[t.back()])), Rel::Eq, Rational(0)));
  std::uint64_t settled = art.series.count("settled") ? art.series.at("settled").at(0) : 0;
  if (settled + 1 >= t.size() && settled > 0) rep.fail("sigma3: settled prefix exceeds the t row");
  for (std::uint64_t n = 1; n <= settled && n + 1 < t.size(); ++n) {
    auto [target, clamped] = detail::sigma3_target(b, final_stage, n);
    rep.add(Certificate::make(clamped ? "sigma3:identity_clamped" : "sigma3:identity", n, t[n],
                              ratio(counts[t[n]], t[n]), Rel::Eq, target));
  }
  return rep;
}

/// c.e. A and Δ2 t with ρ_{t(n)}(A) = ρ_n(B) for settled n ∈ [1, n_checkpoints].  The artifact's
/// marks hold the final row t(0..N+1); series "settled" holds the largest settled n.
inline BuildArtifact sigma3_transfer(const Delta2Approx& b, std::uint64_t n_checkpoints, std::uint64_t stage_budget,
                                     std::uint64_t n_max) {
  const std::uint64_t N = n_checkpoints;
  if (N < 1) throw InvalidArgument("sigma3_transfer: n_checkpoints must be >= 1");
  if (b.window < N) throw InvalidArgument("sigma3_transfer: B's window does not cover n_checkpoints");
  if (n_max < N + 2) throw InvalidArgument("sigma3_transfer: n_max too small for the initial t row");
  BuildArtifact art;
  art.construction = "sigma3_transfer";
  art.n_max = n_max;
  art.stage_max = stage_budget;
  art.entry.assign(n_max, kNever);
  std::vector<std::uint64_t> t(N + 2);
  for (std::uint64_t n = 0; n <= N + 1; ++n) t[n] = n + 1;
  detail::PositionCounter a(n_max);
  std::optional<std::uint64_t> max_a;
  std::uint64_t last = 0;
  for (std::uint64_t s = 0; s < stage_budget; ++s) {
    std::uint64_t ns = 0;
    Rational r;
    bool clamped = false;
    for (std::uint64_t n = 1; n <= std::min(s, N); ++n) {
      auto [target, cl] = detail::sigma3_target(b, s, n);
      if (ratio(a.below(t[n]), t[n]) != target) {
        ns = n, r = target, clamped = cl;
        break;
      }
    }
    if (ns == 0) continue;
    const std::uint64_t lo = t[ns - 1];
    const std::uint64_t d = std::max(max_a.value_or(0), t[ns]);
    auto [bb, cc] = detail::rat_adjust_bc(lo - a.below(lo), max_a, lo, d, r);
    if (bb > BigInt(n_max) || cc + BigInt(N + 1 - ns) >= BigInt(n_max)) {
      art.diagnostics.push_back({"Truncated", s + 1, "adjustment for n=" + std::to_string(ns) + " needs c = " +
                                                        cc.str() + " beyond n_max"});
      break;
    }
    const auto hi = static_cast<std::uint64_t>(bb);
    const auto c = static_cast<std::uint64_t>(cc);
    for (std::uint64_t x = lo; x < hi; ++x)
      if (art.entry[x] == kNever) {
        art.entry[x] = s + 1;
        a.add(x);
      }
    if (hi > lo) max_a = std::max(max_a.value_or(0), hi - 1);
    t[ns] = c;
    for (std::uint64_t m = ns + 1; m <= N + 1; ++m) t[m] = c + m - ns;
    last = s + 1;
    art.trace.push_back(TraceEvent{s + 1, "adjust", {}}
                            .set("n_s", ns)
                            .set("a", lo)
                            .set("b", hi)
                            .set("c", c)
                            .set("r", r)
                            .set("clamped", clamped)
                            .set("t", t));
  }
  art.marks = t;
  // Settled prefix: every n ≤ settled matches its clamped target at the final stage.
  std::uint64_t settled = 0;
  for (std::uint64_t n = 1; n <= N; ++n) {
    auto [target, cl] = detail::sigma3_target(b, stage_budget, n);
    if (ratio(a.below(t[n]), t[n]) != target) break;
    settled = n;
    art.outcomes.push_back({"n=" + std::to_string(n), cl ? "settled (clamped target)" : "settled", kNever,
                            "t=" + std::to_string(t[n])});
    art.targets.push_back(target);
  }
  for (std::uint64_t n = settled + 1; n <= N; ++n)
    art.outcomes.push_back({"n=" + std::to_string(n), "unsettled on window", kNever, "t=" + std::to_string(t[n])});
  art.series["settled"] = {settled};
  art.series["last_action_stage"] = {last};
  auto rep = verify_sigma3(art, b, stage_budget);
  if (!rep.ok) throw ContractViolated("sigma3_transfer produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------------------------
// double_build / pi2_density_build

/// g(n, s) ∈ [0,1], nondecreasing and eventually constant in s.
struct StableMonotoneG {
  std::function<Rational(std::uint64_t n, std::uint64_t s)> eval;
  std::string label = "g";

  static StableMonotoneG constant(Rational v) {
    std::string label = "const " + to_string(v);
    return {[v](std::uint64_t, std::uint64_t) { return v; }, std::move(label)};
  }
  /// g(n, s) = h(n) from stage settle(n) on, `before` earlier.
  static StableMonotoneG settling(std::function<Rational(std::uint64_t)> h,
                                  std::function<std::uint64_t(std::uint64_t)> settle, Rational before,
                                  std::string label) {
    return {[h, settle, before](std::uint64_t n, std::uint64_t s) { return s >= settle(n) ? h(n) : before; },
            std::move(label)};
  }
};

/// Factorial blocks [n!, (n+1)!) as in the construction; Geometric blocks of length n·2^n are a
/// desk-scale alternative only, with a weaker sandwich.
enum class BlockScheme { Factorial, Geometric };

inline const char* to_string(BlockScheme b) { return b == BlockScheme::Factorial ? "factorial" : "geometric (non-standard)"; }

struct DoubleParams {
  std::uint64_t n_blocks = 8;
  std::uint64_t stages = 64;
  BlockScheme scheme = BlockScheme::Factorial;
  /// Blocks beyond n = 9 (a universe past 10!) only with this set.
  bool allow_large = false;
};

inline constexpr std::uint64_t kDefaultBlockCap = 9;

/// L_1 < L_2 < ... < L_{n_blocks+1}; block n is [L_n, L_{n+1}), a union of subintervals of size n.
inline std::vector<std::uint64_t> block_starts(const DoubleParams& p) {
  if (p.n_blocks < 1) throw InvalidArgument("double_build: n_blocks must be >= 1");
  if (!p.allow_large && p.n_blocks > kDefaultBlockCap)
    throw InvalidArgument("double_build: n_blocks > 9 needs the allow_large override");
  if (p.n_blocks > 19) throw CapExceeded("double_build: n_blocks > 19 does not fit the window representation");
  std::vector<std::uint64_t> L{0, 1};
  for (std::uint64_t n = 1; n <= p.n_blocks; ++n)
    L.push_back(p.scheme == BlockScheme::Factorial ? L[n] * (n + 1) : L[n] + n * (std::uint64_t{1} << n));
  if (L.back() > (std::uint64_t{1} << 32)) throw CapExceeded("double_build: universe exceeds 2^32");
  return L;
}

/// Nearest multiple of 1/n, ties down, as a count k with value k/n.
inline std::uint64_t round_to_nth(const Rational& g, std::uint64_t n) {
  Rational v = g * Rational(BigInt(n));
  BigInt k = floor_of(v);
  if (v - Rational(k) > ratio(1, 2)) k += 1;
  return static_cast<std::uint64_t>(k);
}

/// Re-checks a double_build artifact: every subinterval of block n holds exactly k_n = n·h(n)
/// elements (its least ones), block density h(n), and the sandwich at L_{n+1}.
inline VerifyReport verify_double(const BuildArtifact& art) {
  VerifyReport rep;
  const auto& L = art.marks;  // L_1 .. L_{nb+1}
  if (L.size() < 2 || !art.series.count("k") || art.series.at("k").size() + 1 != L.size() || L.back() != art.n_max) {
    rep.fail("double: malformed block layout");
    return rep;
  }
  const auto& K = art.series.at("k");
  auto counts = art.counts();
  if (counts[L[0]] != 0) rep.fail("double: elements below the first block");
  for (std::size_t i = 0; i + 1 < L.size(); ++i) {
    const std::uint64_t n = i + 1, lo = L[i], hi = L[i + 1], k = K[i];
    if (k > n || (hi - lo) % n != 0) {
      rep.fail("double: block " + std::to_string(n) + " has an invalid count or length");
      continue;
    }
    for (std::uint64_t base = lo; base < hi; base += n)
      for (std::uint64_t j = 0; j < n; ++j)
        if (art.in(base + j) != (j < k)) {
          rep.fail("double: subinterval at " + std::to_string(base) + " of block " + std::to_string(n) +
                   " does not hold exactly its least " + std::to_string(k) + " elements");
          base = hi;
          break;
        }
    const Rational h = ratio(k, n), lambda = ratio(lo, hi);
    rep.add(Certificate::make("double:block", n, hi, ratio(counts[hi] - counts[lo], hi - lo), Rel::Eq, h));
    const Rational dev = ratio(counts[hi], hi) - h;
    rep.add(Certificate::make("double:sandwich_lo", n, hi, dev, Rel::Ge, -h * lambda));
    rep.add(Certificate::make("double:sandwich_hi", n, hi, dev, Rel::Le, lambda - h * lambda));
  }
  return rep;
}

/// c.e. A whose every size-n subinterval of block n receives n·h(n) elements, h(n) the rounded
/// value of g(n, stages).  Elements enter at the stage the rounded g first covers them.
inline BuildArtifact double_build(const StableMonotoneG& g, const DoubleParams& p) {
  auto L = block_starts(p);
  BuildArtifact art;
  art.construction = "double";
  art.n_max = L.back();
  art.stage_max = p.stages;
  art.entry.assign(art.n_max, kNever);
  art.marks.assign(L.begin() + 1, L.end());
  std::vector<std::uint64_t> K;
  for (std::uint64_t n = 1; n <= p.n_blocks; ++n) {
    // step[j]: first stage with rounded count > j.
    std::vector<std::uint64_t> step(n, kNever);
    Rational prev;
    std::uint64_t k_prev = 0;
    for (std::uint64_t s = 0; s <= p.stages; ++s) {
      Rational v = g.eval(n, s);
      if (v < 0 || v > 1) throw InvalidArgument("double_build: g(" + std::to_string(n) + "," + std::to_string(s) + ") = " + to_string(v) + " is outside [0,1]");
      if (s > 0 && v < prev)
        throw ContractViolated("double_build: g(" + std::to_string(n) + ",·) decreases at stage " + std::to_string(s));
      prev = v;
      std::uint64_t k = round_to_nth(v, n);
      if (k > k_prev) {
        for (std::uint64_t j = k_prev; j < k; ++j) step[j] = s;
        art.trace.push_back(TraceEvent{s, "step", {}}.set("n", n).set("g", v).set("k", k));
      }
      k_prev = k;
    }
    K.push_back(k_prev);
    art.targets.push_back(ratio(k_prev, n));
    for (std::uint64_t base = L[n]; base < L[n + 1]; base += n)
      for (std::uint64_t j = 0; j < k_prev; ++j) art.entry[base + j] = step[j];
  }
  std::stable_sort(art.trace.begin(), art.trace.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.stage < b.stage; });
  art.series["k"] = K;
  if (p.scheme == BlockScheme::Geometric)
    art.diagnostics.push_back({"NonStandardScheme", 0, "geometric blocks: the sandwich uses lambda = L_n/L_{n+1}"});
  auto rep = verify_double(art);
  if (!rep.ok) throw ContractViolated("double_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

/// g(n,0) = 0; g(n,s+1) = q_s if q_s ≥ g(n,s) + 1/(n+1) and s ≥ n, else g(n,s).
/// Materialized for n ≤ n_blocks, s ≤ stages.
inline StableMonotoneG pi2_g(const RationalSequence& q, std::uint64_t n_blocks, std::uint64_t stages) {
  auto tab = std::make_shared<std::vector<std::vector<Rational>>>(n_blocks + 1);
  std::vector<Rational> qs(stages);
  for (std::uint64_t s = 0; s < stages; ++s) {
    qs[s] = q(s);
    if (qs[s] < 0 || qs[s] > 1) throw InvalidArgument("pi2_density_build: q_" + std::to_string(s) + " outside [0,1]");
  }
  for (std::uint64_t n = 0; n <= n_blocks; ++n) {
    auto& row = (*tab)[n];
    row.assign(stages + 1, Rational(0));
    for (std::uint64_t s = 0; s < stages; ++s)
      row[s + 1] = (s >= n && qs[s] >= row[s] + ratio(1, n + 1)) ? qs[s] : row[s];
  }
  return {[tab, stages](std::uint64_t n, std::uint64_t s) { return (*tab)[n][std::min(s, stages)]; },
          "pi2(" + q.label() + ")"};
}

/// The surrogate b(n) = max_{n ≤ s < S} q_s and the bound b(n) − 1/(n+1) ≤ g(n,S) ≤ b(n).
inline VerifyReport verify_pi2(const RationalSequence& q, const DoubleParams& p) {
  VerifyReport rep;
  auto g = pi2_g(q, p.n_blocks, p.stages);
  for (std::uint64_t n = 1; n <= p.n_blocks; ++n) {
    if (n >= p.stages) break;
    Rational b = q(n);
    for (std::uint64_t s = n + 1; s < p.stages; ++s) b = std::max(b, q(s));
    Rational h = g.eval(n, p.stages);
    rep.add(Certificate::make("pi2:lower", n, p.stages, h, Rel::Ge, b - ratio(1, n + 1)));
    rep.add(Certificate::make("pi2:upper", n, p.stages, h, Rel::Le, b));
  }
  return rep;
}

inline BuildArtifact pi2_density_build(const RationalSequence& q, const DoubleParams& p) {
  auto art = double_build(pi2_g(q, p.n_blocks, p.stages), p);
  art.construction = "pi2_density";
  auto rep = verify_pi2(q, p);
  if (!rep.ok) throw ContractViolated("pi2_density_build: " + rep.failures.front());
  for (auto& c : rep.certificates) art.certificates.push_back(std::move(c));
  if (p.n_blocks >= p.stages)
    art.diagnostics.push_back({"WindowTooShort", p.stages, "b(n) undefined for n >= stages"});
  return art;
}

// ---------------------------------------------------------------------------------------------
// sparse_simple_build

/// Re-checks |S ∩ [0, x+1)| ≤ ⌊log₂(x+1)⌋ + 1 at every element x, and each recorded hit.
inline VerifyReport verify_sparse(const BuildArtifact& art, const std::vector<StageTable>& roster) {
  VerifyReport rep;
  std::uint64_t count = 0;
  for (std::uint64_t x = 0; x < art.n_max; ++x) {
    if (!art.in(x)) continue;
    ++count;
    rep.add(Certificate::make("sparse:count", count - 1, x + 1, Rational(BigInt(count)), Rel::Le,
                              Rational(BigInt(floor_log2(x + 1) + 1))));
  }
  for (std::size_t e = 0; e < art.outcomes.size() && e < roster.size(); ++e) {
    const auto& o = art.outcomes[e];
    if (o.witness == kNever) continue;
    bool ok = art.in(o.witness) && roster[e].in_final(o.witness) && e < 64 && o.witness > (std::uint64_t{1} << e);
    rep.add(Certificate::make("sparse:hit", e, o.witness, Rational(ok ? 1 : 0), Rel::Eq, Rational(1)));
  }
  return rep;
}

/// S receives, for each roster index e, the least element > 2^e of the earliest stage at which
/// W_e enumerates one.  Each e contributes at most one element, so |S ∩ [0,n)| ≤ ⌊log₂ n⌋ + 1.
inline BuildArtifact sparse_simple_build(const std::vector<CEStream>& roster, const Universe& u) {
  BuildArtifact art;
  art.construction = "sparse_simple";
  art.n_max = u.n_max;
  art.stage_max = u.stage_max;
  art.entry.assign(u.n_max, kNever);
  std::vector<StageTable> tables;
  for (const auto& w : roster) tables.push_back(w.materialize(u.n_max, u.stage_max));
  for (std::size_t e = 0; e < tables.size(); ++e) {
    std::uint64_t best = kNever, best_s = kNever;
    if (e < 63) {
      for (std::uint64_t x = (std::uint64_t{1} << e) + 1; x < u.n_max; ++x) {
        std::uint64_t s = tables[e].entry(x);
        if (s < best_s) best_s = s, best = x;
      }
    }
    if (best == kNever) {
      art.outcomes.push_back({"P_" + std::to_string(e), "no element > 2^e on window", kNever, ""});
      continue;
    }
    art.entry[best] = std::min(art.entry[best], best_s);
    art.outcomes.push_back({"P_" + std::to_string(e), "met", best, "stage " + std::to_string(best_s)});
    art.trace.push_back(TraceEvent{best_s, "enumerate", {}}.set("e", static_cast<std::uint64_t>(e)).set("x", best));
  }
  std::stable_sort(art.trace.begin(), art.trace.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.stage < b.stage; });
  auto rep = verify_sparse(art, tables);
  if (!rep.ok) throw ContractViolated("sparse_simple_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

}  // namespace density
