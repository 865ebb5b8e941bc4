#pragma once

// Computable subsets B ⊆ A of a c.e. set A with certified density bounds.
//
// Two families:
//  * checkpoint constructions (barzdin_subset, d2_upper_subset): pairs (s_n, t_n)
//    found by a first-pair search, B copied from A_{t_{n+1}} on [s_n, s_{n+1});
//  * look-ahead constructions (lookahead_subset, effective_density1_subset,
//    limit_witness_subset, delta2_lower_subset): a stage s(n) per n, then
//    t(k) = max{s(n) : n ≤ k²} and B = {k : k ∈ A_{t(k)}}.
//
// Every artifact is re-checkable from its bits and the stream alone (verify_*).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "density/ce_stream.hpp"
#include "density/errors.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"
#include "density/sequences.hpp"
#include "density/set_oracle.hpp"

namespace density {

struct Checkpoint {
  std::uint64_t s = 0, t = 0;
  /// d2 only: whether ρ_s(B) ≥ q_t also holds without the 2^{-n} slack.
  bool strong = true;
  /// d2 only: A_t already agrees with the final stage on the block.
  bool settled = true;
};

struct SubsetArtifact {
  std::string construction;
  std::uint64_t n_max = 0, stage_max = 0;
  std::vector<bool> bits;
  /// Membership of [0, determined_prefix) is decided; beyond it bits are 0 (undetermined).
  std::uint64_t determined_prefix = 0;
  std::vector<Checkpoint> checkpoints;
  /// Look-ahead family: s(n) for n ≤ n_max (kNever below n_lo) and t(k) for k < n_max.
  std::uint64_t n_lo = 0, horizon = 0;
  std::vector<std::uint64_t> s_of_n, t_of_k;
  std::string guarantee;
  std::vector<Diagnostic> diagnostics;
  std::vector<Certificate> certificates;

  bool has_diagnostic(const std::string& kind) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [&](const Diagnostic& d) { return d.kind == kind; });
  }
};

namespace detail {

inline std::vector<std::uint64_t> prefix_counts(const std::vector<bool>& bits) {
  std::vector<std::uint64_t> c(bits.size() + 1, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) c[i + 1] = c[i] + (bits[i] ? 1 : 0);
  return c;
}

inline void check_subset_of_final(const std::vector<bool>& bits, const StageTable& a, VerifyReport& rep) {
  for (std::uint64_t x = 0; x < bits.size(); ++x)
    if (bits[x] && !a.in_final(x)) {
      rep.fail("subset: " + std::to_string(x) + " is in B but not in A");
      return;
    }
}

inline void check_shape(const SubsetArtifact& art, const StageTable& a, VerifyReport& rep) {
  if (art.bits.size() != art.n_max || a.n_max() < art.n_max) rep.fail("artifact window does not match stream window");
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// First-pair search shared by the checkpoint constructions.

inline constexpr std::uint64_t kDefaultPairWork = 200'000'000;

/// Re-checks a checkpoint artifact: blockwise definition of B, subset property, and the
/// inequality ρ_{s_{n+1}}(B) ≥ threshold(n, t_{n+1}) at every completed checkpoint.
inline VerifyReport verify_checkpoints(const SubsetArtifact& art, const StageTable& a,
                                       const std::function<Rational(std::uint64_t, std::uint64_t)>& threshold,
                                       bool require_t_above_n, const std::string& family) {
  VerifyReport rep;
  detail::check_shape(art, a, rep);
  if (!rep.ok) return rep;
  const auto& cp = art.checkpoints;
  if (cp.empty() || cp[0].s != 0 || cp[0].t != 0) {
    rep.fail("checkpoint 0 must be (0,0)");
    return rep;
  }
  auto counts = detail::prefix_counts(art.bits);
  for (std::size_t i = 1; i < cp.size(); ++i) {
    std::uint64_t lo = cp[i - 1].s, s = cp[i].s, t = cp[i].t;
    if (s <= lo || s > art.n_max || t > art.stage_max) {
      rep.fail("checkpoint " + std::to_string(i) + " out of order or outside the window");
      return rep;
    }
    if (require_t_above_n && t <= i - 1) rep.fail("checkpoint " + std::to_string(i) + ": t must exceed n");
    std::uint64_t block = 0;
    for (std::uint64_t x = lo; x < s; ++x) {
      bool want = a.in(x, t);
      block += want ? 1 : 0;
      if (art.bits[x] != want) {
        rep.fail("checkpoint " + std::to_string(i) + ": bit " + std::to_string(x) +
                 " disagrees with A_t on its block");
        break;
      }
    }
    Rational thr = threshold(i - 1, t);
    rep.add(Certificate::make(family + ":block", i, s, ratio(block, s), Rel::Ge, thr));
    rep.add(Certificate::make(family, i, s, ratio(counts[s], s), Rel::Ge, thr));
  }
  std::uint64_t end = cp.back().s;
  if (art.determined_prefix != end) rep.fail("determined prefix does not match last checkpoint");
  for (std::uint64_t x = end; x < art.n_max; ++x)
    if (art.bits[x]) {
      rep.fail("bit " + std::to_string(x) + " set beyond the determined prefix");
      break;
    }
  detail::check_subset_of_final(art.bits, a, rep);
  return rep;
}

/// Also certifies that each checkpoint is the first admissible pair in the order (s+t, s).
inline VerifyReport verify_barzdin(const SubsetArtifact& art, const StageTable& a, const Rational& q) {
  auto rep = verify_checkpoints(art, a, [&](std::uint64_t, std::uint64_t) { return q; }, false, "barzdin");
  if (!rep.ok || q <= 0 || q >= 1) return rep;
  const SmallFrac qf = SmallFrac::from(q);
  detail::StageRank rank(a.entries());
  const auto& cp = art.checkpoints;
  for (std::size_t i = 1; i < cp.size(); ++i) {
    std::uint64_t lo = cp[i - 1].s, d_star = cp[i].s + cp[i].t, s = lo;
    while (s < art.n_max && s < d_star) {
      ++s;
      rank.insert(a.entry(s - 1));
      std::uint64_t t = rank.kth(ceil_mul(qf, s));
      if (t == kNever || t > art.stage_max) continue;
      if (s + t < d_star || (s + t == d_star && s < cp[i].s)) {
        rep.fail("checkpoint " + std::to_string(i) + " is not the first admissible pair: (" + std::to_string(s) + "," +
                 std::to_string(t) + ") precedes it");
        break;
      }
    }
    for (std::uint64_t x = lo; x < s; ++x) rank.erase(a.entry(x));
  }
  return rep;
}

inline VerifyReport verify_d2_upper(const SubsetArtifact& art, const StageTable& a, const RationalSequence& q) {
  return verify_checkpoints(
      art, a, [&](std::uint64_t n, std::uint64_t t) { return q(t) - pow2_inv(static_cast<unsigned>(n)); }, true,
      "d2_upper");
}

namespace detail {
inline void fill_block(SubsetArtifact& art, const StageTable& a, std::uint64_t lo, std::uint64_t s, std::uint64_t t) {
  for (std::uint64_t x = lo; x < s; ++x) art.bits[x] = a.in(x, t);
}
}  // namespace detail

/// (s_{n+1}, t_{n+1}) = the first pair in the order (s+t, s) with s > s_n and
/// ρ_s(A_t ∖ [0,s_n)) ≥ q.  For fixed s the least admissible t is the ⌈qs⌉-th
/// smallest entry stage in [s_n, s), so one sweep over s finds the first pair.
inline SubsetArtifact barzdin_subset(const StageTable& a, const Rational& q) {
  if (q <= 0 || q >= 1) throw InvalidArgument("barzdin_subset: q must lie in (0,1)");
  const SmallFrac qf = SmallFrac::from(q);
  const std::uint64_t N = a.n_max(), S = a.stage_max();
  SubsetArtifact art;
  art.construction = "barzdin";
  art.n_max = N;
  art.stage_max = S;
  art.bits.assign(N, false);
  art.guarantee = "rho_{s_{n+1}}(B) >= " + to_string(q) + " at every completed checkpoint";
  art.checkpoints.push_back({0, 0});
  detail::StageRank rank(a.entries());
  std::uint64_t sn = 0;
  while (sn < N) {
    std::uint64_t best_s = 0, best_t = 0, best_d = kNever, s = sn;
    while (s < N && s + 1 < best_d) {
      ++s;
      rank.insert(a.entry(s - 1));
      std::uint64_t t = rank.kth(ceil_mul(qf, s));
      if (t != kNever && t <= S && s + t < best_d) best_s = s, best_t = t, best_d = s + t;
    }
    for (std::uint64_t x = sn; x < s; ++x) rank.erase(a.entry(x));
    if (best_d == kNever) {
      art.diagnostics.push_back({"BudgetExceeded", art.checkpoints.size(),
                                 "no pair (s,t) with s <= n_max and t <= stage_max satisfies the checkpoint condition"});
      break;
    }
    detail::fill_block(art, a, sn, best_s, best_t);
    art.checkpoints.push_back({best_s, best_t});
    sn = best_s;
  }
  art.determined_prefix = sn;
  auto rep = verify_barzdin(art, a, q);
  if (!rep.ok) throw ContractViolated("barzdin_subset produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

inline SubsetArtifact barzdin_subset(const CEStream& s, const Universe& u, const Rational& q) {
  return barzdin_subset(s.materialize(u.n_max, u.stage_max), q);
}

/// First pair (s,t) in the order (s+t, s) with s > s_n, t > n and
/// ρ_s(A_t ∖ [0,s_n)) ≥ q_t − 2^{-n}.  q_t varies with t, so candidate t are
/// scanned per s, bounded by the best diagonal found so far and a work budget.
inline SubsetArtifact d2_upper_subset(const StageTable& a, const RationalSequence& q,
                                      std::uint64_t work_budget = kDefaultPairWork) {
  const std::uint64_t N = a.n_max(), S = a.stage_max();
  SeqCache qv(q, S + 1);
  SubsetArtifact art;
  art.construction = "d2_upper";
  art.n_max = N;
  art.stage_max = S;
  art.bits.assign(N, false);
  art.guarantee = "rho_{s_{n+1}}(B) >= q_{t_{n+1}} - 2^-n at every completed checkpoint";
  art.checkpoints.push_back({0, 0});
  detail::StageRank rank(a.entries());
  std::uint64_t sn = 0, work = 0;
  bool out_of_work = false;
  while (sn < N && !out_of_work) {
    const std::uint64_t n = art.checkpoints.size() - 1;
    const unsigned k = static_cast<unsigned>(std::min<std::uint64_t>(n, 4096));
    if (n + 1 > S) {
      art.diagnostics.push_back({"BudgetExceeded", n + 1, "t > n is impossible within stage_max"});
      break;
    }
    // Smallest q_t over the admissible t prunes s whose final count cannot reach any threshold.
    const std::uint64_t qmin = qv.argmin_from(n + 1);
    std::uint64_t best_s = 0, best_t = 0, best_d = kNever, s = sn;
    while (s < N && s + 1 + (n + 1) < best_d) {
      ++s;
      rank.insert(a.entry(s - 1));
      std::uint64_t c_final = rank.count_le(S);
      if (c_final < qv.need(qmin, s, k)) continue;
      std::uint64_t t_hi = std::min<std::uint64_t>(S, best_d == kNever ? S : best_d - s - 1);
      for (std::uint64_t t = n + 1; t <= t_hi; ++t) {
        if (++work > work_budget) {
          out_of_work = true;
          break;
        }
        if (rank.count_le(t) >= qv.need(t, s, k)) {
          best_s = s, best_t = t, best_d = s + t;
          break;
        }
      }
      if (out_of_work) break;
    }
    for (std::uint64_t x = sn; x < s; ++x) rank.erase(a.entry(x));
    if (best_d == kNever || out_of_work) {
      art.diagnostics.push_back({"BudgetExceeded", n + 1,
                                 out_of_work ? "pair-search work budget exhausted"
                                             : "no admissible pair (s,t) within the window"});
      break;
    }
    detail::fill_block(art, a, sn, best_s, best_t);
    Checkpoint c{best_s, best_t, true, true};
    for (std::uint64_t x = sn; x < best_s; ++x)
      if (a.in_final(x) && !a.in(x, best_t)) c.settled = false;
    art.checkpoints.push_back(c);
    sn = best_s;
  }
  art.determined_prefix = sn;
  auto counts = detail::prefix_counts(art.bits);
  for (std::size_t i = 1; i < art.checkpoints.size(); ++i) {
    auto& c = art.checkpoints[i];
    c.strong = qv.ge(c.t, counts[c.s], c.s);
  }
  auto rep = verify_d2_upper(art, a, q);
  if (!rep.ok) throw ContractViolated("d2_upper_subset produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

inline SubsetArtifact d2_upper_subset(const CEStream& s, const Universe& u, const RationalSequence& q) {
  return d2_upper_subset(s.materialize(u.n_max, u.stage_max), q);
}

// ---------------------------------------------------------------------------------------------
// Look-ahead family.

enum class LookaheadMode { Fixed, Witness, Limit, LimitSeq };

inline const char* to_string(LookaheadMode m) {
  switch (m) {
    case LookaheadMode::Fixed: return "lookahead";
    case LookaheadMode::Witness: return "effective_density1";
    case LookaheadMode::Limit: return "limit_witness";
    case LookaheadMode::LimitSeq: return "delta2_lower";
  }
  return "?";
}

inline constexpr std::uint64_t kDefaultHorizonCap = std::uint64_t{1} << 20;

struct LookaheadParams {
  LookaheadMode mode = LookaheadMode::Fixed;
  Rational q = 0;                                    // Fixed
  std::uint64_t n0 = 1;                              // Fixed
  std::function<std::uint64_t(std::uint64_t)> w;     // Witness
  LimitApprox g;                                     // Limit, LimitSeq
  std::optional<RationalSequence> q_seq;             // LimitSeq
  std::uint64_t horizon_cap = kDefaultHorizonCap;    // s(n) is computed for n ≤ min(n_max², cap)
  std::uint64_t work_budget = kDefaultPairWork;      // μ-search steps (Limit modes)
};

/// Guards g(k,s) ≤ n are evaluated for k ≤ min(n, kGuardMax).  Every k above
/// ⌊log₂ n⌋ already demands A_s ⊇ [0,n), so only witnesses claiming that from
/// some k > kGuardMax all of [0,n) is enumerated are not consulted.
inline constexpr unsigned kGuardMax = 63;

namespace detail {

struct LookaheadEngine {
  const StageTable& a;
  const LookaheadParams& p;
  std::uint64_t N, S;
  SeqCache qseq;
  std::vector<std::uint64_t> w_cache;
  SmallFrac qf;

  LookaheadEngine(const StageTable& table, const LookaheadParams& params, std::uint64_t n_max)
      : a(table), p(params), N(n_max), S(table.stage_max()) {
    if (p.mode == LookaheadMode::Fixed) qf = SmallFrac::from(p.q);
    if (p.mode == LookaheadMode::LimitSeq) {
      if (!p.q_seq) throw InvalidArgument("delta2_lower_subset: q_seq is required");
      qseq = SeqCache(*p.q_seq, table.n_max() + 1);
    }
    if (p.mode == LookaheadMode::Witness) {
      if (!p.w) throw InvalidArgument("effective_density1_subset: witness w is required");
      for (unsigned z = 0; z <= 64; ++z) w_cache.push_back(z == 0 ? 0 : p.w(z));
    }
    if ((p.mode == LookaheadMode::Limit || p.mode == LookaheadMode::LimitSeq) && !p.g.eval)
      throw InvalidArgument("limit approximation g is required");
  }

  std::uint64_t lo() const { return p.mode == LookaheadMode::Fixed ? p.n0 : 1; }

  /// Greatest z ≤ min(n, 64) with w(z) ≤ n (w(0) = 0 by convention).
  unsigned h(std::uint64_t n) const {
    unsigned best = 0;
    for (unsigned z = 1; z <= 64 && z <= n; ++z)
      if (w_cache[z] <= n) best = z;
    return best;
  }

  /// Count that A_s ∩ [0,n) must reach in the Limit modes, given the active guards at s.
  std::uint64_t limit_need(std::uint64_t n, std::uint64_t s) const {
    std::uint64_t kmax = std::min<std::uint64_t>(n, kGuardMax);
    for (std::uint64_t k = kmax + 1; k-- > 0;) {
      if (p.g.eval(k, s) <= n) {
        auto kk = static_cast<unsigned>(k);
        return p.mode == LookaheadMode::Limit ? one_minus_pow2_need(n, kk) : qseq.need(n, n, kk);
      }
    }
    return 0;
  }

  std::uint64_t fixed_need(std::uint64_t n) const { return ceil_mul(qf, n); }
};

}  // namespace detail

/// Re-checks a look-ahead artifact against the stream table on the window:
/// B = {k : k ∈ A_{t(k)}}, t nondecreasing and dominating s on [n_lo, min(k², n_max)],
/// each s(n) satisfying its defining condition, and the certified integer inequality
/// counts_B[n] ≥ counts_{A_{s(n)}}[n] − ⌈√n⌉ for n ∈ [n_lo, n_max].
inline VerifyReport verify_lookahead(const SubsetArtifact& art, const StageTable& a, const LookaheadParams& p) {
  VerifyReport rep;
  detail::check_shape(art, a, rep);
  const std::uint64_t N = art.n_max;
  if (art.s_of_n.size() != N + 1 || art.t_of_k.size() != N) rep.fail("look-ahead tables have the wrong length");
  if (!rep.ok) return rep;
  detail::LookaheadEngine eng(a, p, N);
  const std::uint64_t lo = eng.lo();
  if (art.n_lo != lo) rep.fail("n_lo does not match the construction parameters");

  // t(k) ≥ max{s(n) : lo ≤ n ≤ min(k², N)} and t nondecreasing; B defined from t.
  std::uint64_t run = 0, prev_t = 0;
  std::uint64_t n_done = lo - 1;
  for (std::uint64_t k = 0; k < N; ++k) {
    std::uint64_t top = static_cast<u128>(k) * k > N ? N : k * k;
    while (n_done < top) {
      ++n_done;
      run = std::max(run, art.s_of_n[n_done]);
    }
    std::uint64_t tk = art.t_of_k[k];
    if (top >= lo && tk < run) rep.fail("t(" + std::to_string(k) + ") below s(n) for some n <= k^2");
    if (tk < prev_t) rep.fail("t is not nondecreasing at k=" + std::to_string(k));
    prev_t = tk;
    if (art.bits[k] != a.in(k, tk)) {
      rep.fail("bit " + std::to_string(k) + " disagrees with A_{t(k)}");
      break;
    }
  }
  detail::check_subset_of_final(art.bits, a, rep);

  // s(n) conditions and the pointwise inequality.
  detail::StageRank rank(a.entries());
  auto counts = detail::prefix_counts(art.bits);
  for (std::uint64_t n = 1; n <= N; ++n) {
    rank.insert(a.entry(n - 1));
    if (n < lo) continue;
    std::uint64_t s = art.s_of_n[n];
    if (s == kNever || s > a.stage_max()) {
      rep.fail("s(" + std::to_string(n) + ") undefined inside the window");
      continue;
    }
    std::uint64_t c_as = rank.count_le(s);
    std::uint64_t need = 0;
    bool minimal = true;
    switch (p.mode) {
      case LookaheadMode::Fixed:
        need = eng.fixed_need(n);
        minimal = s == 0 || rank.count_le(s - 1) < need;
        break;
      case LookaheadMode::Witness:
        need = one_minus_pow2_need(n, eng.h(n));
        minimal = s == 0 || rank.count_le(s - 1) < need;
        break;
      case LookaheadMode::Limit:
      case LookaheadMode::LimitSeq:
        if (s < n) rep.fail("s(" + std::to_string(n) + ") < n");
        need = eng.limit_need(n, s);
        minimal = s == n || rank.count_le(s - 1) < eng.limit_need(n, s - 1);
        break;
    }
    if (c_as < need) rep.fail("s(" + std::to_string(n) + ") does not satisfy its defining condition");
    if (!minimal) rep.fail("s(" + std::to_string(n) + ") is not least");
    std::uint64_t root = isqrt_ceil(n);
    rep.add(Certificate::make("lookahead", n, n, Rational(BigInt(counts[n])), Rel::Ge,
                              Rational(BigInt(c_as)) - Rational(BigInt(root))));
    if (p.mode == LookaheadMode::Fixed || p.mode == LookaheadMode::Witness)
      rep.add(Certificate::make("lookahead:bound", n, n, Rational(BigInt(counts[n])), Rel::Ge,
                                Rational(BigInt(need)) - Rational(BigInt(root))));
  }
  return rep;
}

/// Shared engine: s(n) on the horizon, t(k) as prefix maxima, B = {k : k ∈ A_{t(k)}}.
/// `a` must cover the horizon min(n_max², horizon_cap) (or more); the window is [0, n_max).
inline SubsetArtifact lookahead_engine(const StageTable& a, std::uint64_t n_max, const LookaheadParams& p) {
  if (a.n_max() < n_max) throw InvalidArgument("stage table does not cover the window");
  if (p.mode == LookaheadMode::Fixed && (p.q <= 0 || p.q >= 1)) throw InvalidArgument("q must lie in (0,1)");
  if (p.mode == LookaheadMode::Fixed && p.n0 < 1) throw InvalidArgument("n0 must be >= 1");
  detail::LookaheadEngine eng(a, p, n_max);
  const std::uint64_t N = n_max, S = a.stage_max(), lo = eng.lo();
  std::uint64_t H = a.n_max();
  SubsetArtifact art;
  art.construction = to_string(p.mode);
  art.n_max = N;
  art.stage_max = S;
  art.n_lo = lo;
  art.guarantee = "counts_B[n] >= counts_{A_{s(n)}}[n] - ceil(sqrt(n)) for n in [n_lo, n_max]";

  // Hypothesis on the window, checked against the final stage.
  auto final_counts = a.counts_at(S);
  if (p.mode == LookaheadMode::Fixed) {
    for (std::uint64_t n = lo; n <= N; ++n)
      if (final_counts[n] < eng.fixed_need(n))
        throw PreconditionViolated(n, "rho_n(A) < " + to_string(p.q));
  } else if (p.mode == LookaheadMode::Witness) {
    if (p.w(0) != 0)
      art.diagnostics.push_back({"Convention", 0, "w(0) taken as 0"});
    for (std::uint64_t n = 1; n <= N; ++n)
      for (unsigned k = 0; k <= 64; ++k)
        if (eng.w_cache[k] <= n && final_counts[n] < one_minus_pow2_need(n, k))
          throw PreconditionViolated(n, "witness violated for k=" + std::to_string(k) + ": rho_n(A) < 1 - 2^-" +
                                            std::to_string(k));
  }

  std::vector<std::uint64_t> s_of(H + 1, kNever);
  detail::StageRank rank(a.entries());
  std::uint64_t work = 0;
  for (std::uint64_t n = 1; n <= H; ++n) {
    rank.insert(a.entry(n - 1));
    if (n < lo) continue;
    std::uint64_t s = kNever;
    if (p.mode == LookaheadMode::Fixed) {
      s = rank.kth(eng.fixed_need(n));
    } else if (p.mode == LookaheadMode::Witness) {
      s = rank.kth(one_minus_pow2_need(n, eng.h(n)));
    } else {
      for (std::uint64_t c = n; c <= S; ++c) {
        if (++work > p.work_budget) break;
        if (rank.count_le(c) >= eng.limit_need(n, c)) {
          s = c;
          break;
        }
      }
    }
    if (s == kNever || s > S) {
      if (n <= N) throw BudgetExceeded(n, "no stage <= stage_max satisfies the defining condition of s(n)");
      art.diagnostics.push_back({"HorizonShrunk", n, "s(n) undefined within stage_max or work budget; horizon set to " +
                                                         std::to_string(n - 1)});
      H = n - 1;
      break;
    }
    s_of[n] = s;
  }
  art.horizon = H;

  // t(k) = max{s(n) : lo ≤ n ≤ min(k², H)}, 0 when the range is empty.
  art.t_of_k.assign(N, 0);
  art.bits.assign(N, false);
  std::uint64_t run = 0, n_done = lo - 1;
  for (std::uint64_t k = 0; k < N; ++k) {
    u128 k2 = static_cast<u128>(k) * k;
    std::uint64_t top = k2 > H ? H : static_cast<std::uint64_t>(k2);
    while (n_done < top) run = std::max(run, s_of[++n_done]);
    art.t_of_k[k] = top >= lo ? run : 0;
    art.bits[k] = a.in(k, art.t_of_k[k]);
  }
  art.determined_prefix = N;
  art.s_of_n.assign(s_of.begin(), s_of.begin() + static_cast<std::ptrdiff_t>(N + 1));

  StageTable window(N, S, std::vector<std::uint64_t>(a.entries().begin(), a.entries().begin() + static_cast<std::ptrdiff_t>(N)));
  auto rep = verify_lookahead(art, window, p);
  if (!rep.ok) throw ContractViolated(art.construction + " produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

/// Horizon used by the look-ahead family for a window of n_max.
inline std::uint64_t lookahead_horizon(std::uint64_t n_max, std::uint64_t cap) {
  u128 sq = static_cast<u128>(n_max) * n_max;
  return std::max<std::uint64_t>(n_max, sq > cap ? cap : static_cast<std::uint64_t>(sq));
}

inline SubsetArtifact lookahead_run(const CEStream& s, const Universe& u, const LookaheadParams& p) {
  auto table = s.materialize(lookahead_horizon(u.n_max, p.horizon_cap), u.stage_max);
  return lookahead_engine(table, u.n_max, p);
}

inline SubsetArtifact lookahead_subset(const CEStream& s, const Universe& u, const Rational& q, std::uint64_t n0,
                                       std::uint64_t horizon_cap = kDefaultHorizonCap) {
  LookaheadParams p;
  p.mode = LookaheadMode::Fixed;
  p.q = q;
  p.n0 = n0;
  p.horizon_cap = horizon_cap;
  return lookahead_run(s, u, p);
}

inline SubsetArtifact effective_density1_subset(const CEStream& s, const Universe& u,
                                                std::function<std::uint64_t(std::uint64_t)> w,
                                                std::uint64_t horizon_cap = kDefaultHorizonCap) {
  LookaheadParams p;
  p.mode = LookaheadMode::Witness;
  p.w = std::move(w);
  p.horizon_cap = horizon_cap;
  return lookahead_run(s, u, p);
}

inline SubsetArtifact limit_witness_subset(const CEStream& s, const Universe& u, LimitApprox g,
                                           std::uint64_t horizon_cap = kDefaultHorizonCap) {
  LookaheadParams p;
  p.mode = LookaheadMode::Limit;
  p.g = std::move(g);
  p.horizon_cap = horizon_cap;
  return lookahead_run(s, u, p);
}

inline SubsetArtifact delta2_lower_subset(const CEStream& s, const Universe& u, RationalSequence q, LimitApprox g,
                                          std::uint64_t horizon_cap = kDefaultHorizonCap) {
  LookaheadParams p;
  p.mode = LookaheadMode::LimitSeq;
  p.q_seq = std::move(q);
  p.g = std::move(g);
  p.horizon_cap = horizon_cap;
  return lookahead_run(s, u, p);
}

}  // namespace density
