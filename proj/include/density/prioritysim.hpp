#pragma once

// Stage engines for the injury-free requirement constructions, run against a
// finite roster of machines (streams W_e, partial deciders φ_e):
//   diagonal_union_build      A = ⋃ W_e ∩ [(e+1)!, (e+2)!)
//   nonapprox_build           x ∈ R_e enters once every y ≤ x in R_e is in W_e
//   nononzero_build           interval strategy killing computable subsets of positive density
//   high_build                n-large restrained intervals in R_n, dumped when W_n passes them
//   nonlow_build              permitted intervals in R_⟨e,i⟩ against a jump approximation
//   generic_not_coarse_build  disjoint A0, A1 splitting permitted intervals against S_e
//
// Everything an engine does is written to the trace; the verify_* functions
// rebuild the construction's claims from the trace, the entry stages and the
// inputs alone.  Outcomes describe the finite window only.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "density/builders.hpp"
#include "density/ce_stream.hpp"
#include "density/construction.hpp"
#include "density/errors.hpp"
#include "density/partial_decider.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"
#include "density/set_oracle.hpp"

namespace density {

struct Roster {
  std::vector<PartialDecider> deciders;
  std::vector<CEStream> streams;
};

namespace detail {

/// Least element of R_k that is ≥ lo; kNever past 2^63.
inline std::uint64_t rk_first_at_least(unsigned k, std::uint64_t lo) {
  if (k >= 63) return kNever;
  std::uint64_t p = std::uint64_t{1} << k;
  std::uint64_t q = lo / p + (lo % p != 0 ? 1 : 0);
  if (q % 2 == 0) ++q;
  if (q > (kNever >> k)) return kNever;
  return q * p;
}

/// |R_k ∩ [0, n)|.
inline std::uint64_t rk_count_below(unsigned k, std::uint64_t n) {
  if (k >= 63) return 0;
  std::uint64_t p = std::uint64_t{1} << k;
  std::uint64_t t = n / p + (n % p != 0 ? 1 : 0);
  return t / 2;
}

/// R_k ∩ [lo, hi].
inline std::vector<std::uint64_t> rk_range(unsigned k, std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> v;
  if (k >= 63) return v;
  std::uint64_t step = std::uint64_t{1} << (k + 1);
  for (std::uint64_t x = rk_first_at_least(k, lo); x != kNever && x <= hi; x += step) {
    v.push_back(x);
    if (x > kNever - step) break;
  }
  return v;
}

/// Cantor pairing ⟨e,i⟩.
inline std::uint64_t pair_code(std::uint64_t e, std::uint64_t i) { return (e + i) * (e + i + 1) / 2 + i; }

inline bool in_region(std::uint64_t x, std::uint64_t k) { return k < 63 && in_rk(x, static_cast<unsigned>(k)); }

/// The stage-s arrivals of a table, visited in increasing s.
class Arrivals {
 public:
  explicit Arrivals(const StageTable& t) {
    for (std::uint64_t x = 0; x < t.n_max(); ++x)
      if (t.entry(x) != kNever) pairs_.emplace_back(t.entry(x), x);
    std::sort(pairs_.begin(), pairs_.end());
  }
  /// Elements entering at stage s; s must not decrease between calls.
  std::vector<std::uint64_t> at(std::uint64_t s) {
    while (pos_ < pairs_.size() && pairs_[pos_].first < s) ++pos_;
    std::vector<std::uint64_t> out;
    for (std::size_t i = pos_; i < pairs_.size() && pairs_[i].first == s; ++i) out.push_back(pairs_[i].second);
    return out;
  }

 private:
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs_;
  std::size_t pos_ = 0;
};

inline BuildArtifact blank_artifact(std::string name, const Universe& u) {
  BuildArtifact art;
  art.construction = std::move(name);
  art.n_max = u.n_max;
  art.stage_max = u.stage_max;
  art.entry.assign(u.n_max, kNever);
  return art;
}

inline void sort_trace(std::vector<TraceEvent>& trace) {
  std::stable_sort(trace.begin(), trace.end(), [](const TraceEvent& a, const TraceEvent& b) { return a.stage < b.stage; });
}

/// Elements carried by an event: an explicit "xs" list or an inclusive lo..hi range.
inline std::vector<std::uint64_t> event_elements(const TraceEvent& ev) {
  if (auto* v = ev.get("xs"); v && std::holds_alternative<std::vector<std::uint64_t>>(*v))
    return std::get<std::vector<std::uint64_t>>(*v);
  std::vector<std::uint64_t> out;
  std::uint64_t lo = ev.num("lo"), hi = ev.num("hi");
  if (lo != kNever && hi != kNever)
    for (std::uint64_t x = lo; x <= hi; ++x) out.push_back(x);
  return out;
}

inline std::vector<std::uint64_t> materialize_values(const PartialDecider& d, std::uint64_t n, std::uint64_t s) {
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::uint64_t x = 0; x < n; ++x) prefix[x + 1] = prefix[x] + (d.eval(x, s) == Tri::One ? 1 : 0);
  return prefix;
}

inline Rational count_rational(std::uint64_t v) { return Rational(BigInt(v)); }

inline std::string req_name(const char* prefix, std::uint64_t e) { return prefix + std::to_string(e); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Trace audits shared by every engine

/// Every element of `target` enters exactly once, through an "enumerate" event into `set_name`
/// whose stage equals its entry stage.
inline VerifyReport verify_enumerations(const std::vector<TraceEvent>& trace, const BuildArtifact& target,
                                        const std::string& set_name = "A") {
  VerifyReport rep;
  std::vector<std::uint8_t> seen(target.n_max, 0);
  std::uint64_t bad = 0;
  for (const auto& ev : trace) {
    if (ev.kind != "enumerate" || ev.str("set") != set_name) continue;
    for (auto x : detail::event_elements(ev)) {
      if (x >= target.n_max) {
        ++bad;
        rep.fail("enumeration of " + std::to_string(x) + " outside the window");
        continue;
      }
      if (seen[x]++) {
        ++bad;
        rep.fail(set_name + ": element " + std::to_string(x) + " enumerated twice");
      }
      if (target.entry[x] != ev.stage) {
        ++bad;
        rep.fail(set_name + ": element " + std::to_string(x) + " recorded at stage " + std::to_string(ev.stage) +
                 " but enters at " + (target.entry[x] == kNever ? std::string("never") : std::to_string(target.entry[x])));
      }
    }
  }
  for (std::uint64_t x = 0; x < target.n_max; ++x)
    if (target.entry[x] != kNever && !seen[x]) {
      ++bad;
      rep.fail(set_name + ": element " + std::to_string(x) + " enters without a recorded enumeration");
    }
  rep.add(Certificate::make("trace:exactly_once", 0, target.n_max, detail::count_rational(bad), Rel::Eq, Rational(0)));
  return rep;
}

inline VerifyReport verify_enumerations(const BuildArtifact& art, const std::string& set_name = "A") {
  return verify_enumerations(art.trace, art, set_name);
}

/// Each event tagged with a region touches only elements of that R-region.
inline VerifyReport verify_regions(const std::vector<TraceEvent>& trace) {
  VerifyReport rep;
  std::uint64_t bad = 0;
  for (const auto& ev : trace) {
    std::uint64_t k = ev.num("region");
    if (k == kNever) continue;
    for (auto x : detail::event_elements(ev))
      if (!detail::in_region(x, k)) {
        ++bad;
        rep.fail(ev.kind + " at stage " + std::to_string(ev.stage) + " touches " + std::to_string(x) +
                 " outside R_" + std::to_string(k));
      }
  }
  rep.add(Certificate::make("region:discipline", 0, 0, detail::count_rational(bad), Rel::Eq, Rational(0)));
  return rep;
}

/// Every enumeration into `set_name` at stage s carries its permission: "self" (x = s), or
/// "stream" with a recorded y ≤ x entering the permitting table at s.  A "flush" is accepted when the
/// same stage holds a stream-permitted enumeration for a later interval of the same region.
inline VerifyReport verify_permissions(const std::vector<TraceEvent>& trace, const StageTable& permit,
                                       const std::string& set_name) {
  VerifyReport rep;
  std::uint64_t bad = 0;
  auto violation = [&](const TraceEvent& ev, const std::string& why) {
    ++bad;
    rep.fail(set_name + " enumeration at stage " + std::to_string(ev.stage) + ": " + why);
  };
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& ev = trace[i];
    if (ev.kind != "enumerate" || ev.str("set") != set_name) continue;
    auto xs = detail::event_elements(ev);
    std::string kind = ev.str("permit");
    if (kind == "self") {
      for (auto x : xs)
        if (x != ev.stage) violation(ev, "self-permission for " + std::to_string(x) + " != stage");
    } else if (kind == "stream") {
      std::uint64_t y = ev.num("y");
      if (y == kNever || permit.entry(y) != ev.stage) {
        violation(ev, "recorded y does not enter the permitting set at this stage");
        continue;
      }
      for (auto x : xs)
        if (y > x) violation(ev, "y = " + std::to_string(y) + " exceeds " + std::to_string(x));
    } else if (kind == "flush") {
      bool justified = false;
      for (const auto& other : trace)
        if (other.stage == ev.stage && other.kind == "enumerate" && other.str("permit") == "stream" &&
            other.num("region") == ev.num("region") && other.num("j") != kNever && ev.num("j") != kNever &&
            other.num("j") > ev.num("j"))
          justified = true;
      if (!justified) violation(ev, "flush without a permitted later interval");
    } else {
      violation(ev, "no permission recorded");
    }
  }
  rep.add(Certificate::make("permission:sound", 0, 0, detail::count_rational(bad), Rel::Eq, Rational(0)));
  return rep;
}

// ---------------------------------------------------------------------------
// diagonal union

/// Roster index e owns the block [(e+1)!, (e+2)!).
inline std::vector<std::uint64_t> diagonal_blocks(std::size_t roster_size, bool allow_large = false) {
  std::size_t cap = allow_large ? 19 : kDefaultBlockCap;
  std::size_t n = std::min(roster_size, cap);
  std::vector<std::uint64_t> L{1};  // L[e] = (e+1)!
  for (std::size_t e = 0; e < n; ++e) L.push_back(L.back() * (e + 2));
  return L;
}

inline VerifyReport verify_diagonal_union(const BuildArtifact& art, const std::vector<StageTable>& w) {
  VerifyReport rep = verify_enumerations(art);
  const auto& L = art.marks;
  std::uint64_t outside = 0;
  for (std::uint64_t x = 0; x < std::min(art.n_max, L.empty() ? art.n_max : L.front()); ++x) outside += art.in(x);
  if (!L.empty())
    for (std::uint64_t x = L.back(); x < art.n_max; ++x) outside += art.in(x);
  for (std::size_t e = 0; e + 1 < L.size() && e < w.size(); ++e) {
    std::uint64_t mismatch = 0;
    for (std::uint64_t x = L[e]; x < std::min(L[e + 1], art.n_max); ++x)
      mismatch += art.entry[x] != w[e].entry(x);
    rep.add(Certificate::make("diag:block", e, std::min(L[e + 1], art.n_max), detail::count_rational(mismatch), Rel::Eq,
                              Rational(0)));
  }
  rep.add(Certificate::make("diag:outside", 0, art.n_max, detail::count_rational(outside), Rel::Eq, Rational(0)));
  return rep;
}

inline BuildArtifact diagonal_union_build(const std::vector<CEStream>& streams, const Universe& u,
                                          bool allow_large = false) {
  if (streams.empty()) throw InvalidArgument("diagonal_union_build: roster is empty");
  auto art = detail::blank_artifact("diagonal_union", u);
  auto L = diagonal_blocks(streams.size(), allow_large);
  if (L.size() - 1 < streams.size())
    art.diagnostics.push_back({"RosterTruncated", L.size() - 1,
                               "indices from " + std::to_string(L.size() - 1) + " on lie beyond the factorial cap"});
  art.marks = L;
  std::vector<StageTable> w;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint64_t>> events;  // (stage, e) -> xs
  for (std::size_t e = 0; e + 1 < L.size(); ++e) {
    w.push_back(streams[e].materialize(u.n_max, u.stage_max));
    for (std::uint64_t x = L[e]; x < std::min(L[e + 1], u.n_max); ++x) {
      std::uint64_t s = w[e].entry(x);
      if (s == kNever) continue;
      art.entry[x] = s;
      events[{s, e}].push_back(x);
    }
  }
  for (auto& [key, xs] : events)
    art.trace.push_back(TraceEvent{key.first, "enumerate", {}}
                            .set("req", detail::req_name("W_", key.second))
                            .set("block", key.second)
                            .set("set", "A")
                            .set("xs", TraceValue(std::move(xs))));
  detail::sort_trace(art.trace);
  auto rep = verify_diagonal_union(art, w);
  if (!rep.ok) throw ContractViolated("diagonal_union_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------
// nonapprox: A ∩ R_e is R_e or a finite initial part of it

inline VerifyReport verify_nonapprox(const BuildArtifact& art, const std::vector<StageTable>& w) {
  VerifyReport rep = verify_enumerations(art);
  rep.merge(verify_regions(art.trace));
  std::uint64_t stray = 0;
  for (std::uint64_t x = 0; x < art.n_max; ++x)
    if (art.in(x) && (x == 0 || rk_index(x) >= w.size())) ++stray;
  rep.add(Certificate::make("nonapprox:outside_roster", 0, art.n_max, detail::count_rational(stray), Rel::Eq, Rational(0)));
  for (std::size_t e = 0; e < w.size() && e < art.outcomes.size(); ++e) {
    auto k = static_cast<unsigned>(e);
    std::uint64_t running = 0, mismatch = 0, in_a = 0, size = 0, witness = kNever;
    for (auto x : detail::rk_range(k, 0, art.n_max == 0 ? 0 : art.n_max - 1)) {
      std::uint64_t ew = w[e].entry(x);
      if (ew == kNever && witness == kNever) witness = x;
      running = (running == kNever || ew == kNever) ? kNever : std::max(running, ew);
      mismatch += art.entry[x] != running;
      in_a += art.in(x);
      ++size;
    }
    rep.add(Certificate::make("nonapprox:rule", e, art.n_max, detail::count_rational(mismatch), Rel::Eq, Rational(0)));
    const auto& o = art.outcomes[e];
    if (witness == kNever) {
      if (o.witness != kNever) rep.fail("nonapprox: R_" + std::to_string(e) + " is covered but a witness is recorded");
      rep.add(Certificate::make("nonapprox:case1", e, art.n_max, detail::count_rational(in_a), Rel::Eq,
                                detail::count_rational(size)));
    } else {
      if (o.witness != witness) rep.fail("nonapprox: recorded witness for R_" + std::to_string(e) + " is not the least");
      rep.add(Certificate::make("nonapprox:case2", e, witness, detail::count_rational(in_a), Rel::Eq,
                                detail::count_rational(detail::rk_count_below(k, witness))));
    }
  }
  return rep;
}

/// For x ∈ R_e (e below the roster size): x enters A at the stage by which every y ≤ x in R_e has
/// entered W_e.  Regions beyond the roster stay out of A.
inline BuildArtifact nonapprox_build(const std::vector<CEStream>& streams, const Universe& u) {
  if (streams.size() > 63) throw CapExceeded("nonapprox_build: roster exceeds the R_e index cap of 63");
  auto art = detail::blank_artifact("nonapprox", u);
  std::vector<StageTable> w;
  for (std::size_t e = 0; e < streams.size(); ++e) {
    w.push_back(streams[e].materialize(u.n_max, u.stage_max));
    auto k = static_cast<unsigned>(e);
    std::uint64_t running = 0, witness = kNever;
    std::map<std::uint64_t, std::vector<std::uint64_t>> by_stage;
    for (auto x : detail::rk_range(k, 0, u.n_max - 1)) {
      std::uint64_t ew = w[e].entry(x);
      if (ew == kNever) {
        witness = x;
        break;
      }
      running = std::max(running, ew);
      art.entry[x] = running;
      by_stage[running].push_back(x);
    }
    for (auto& [s, xs] : by_stage)
      art.trace.push_back(TraceEvent{s, "enumerate", {}}
                              .set("req", detail::req_name("R_", e))
                              .set("region", static_cast<std::uint64_t>(e))
                              .set("set", "A")
                              .set("xs", TraceValue(std::move(xs))));
    if (witness == kNever)
      art.outcomes.push_back({detail::req_name("N_", e), "Case 1: R_e covered by W_e on window", kNever, ""});
    else
      art.outcomes.push_back({detail::req_name("N_", e), "Case 2: witness outside W_e", witness,
                              std::to_string(detail::rk_count_below(k, witness)) + " elements of R_e enter A"});
  }
  detail::sort_trace(art.trace);
  auto rep = verify_nonapprox(art, w);
  if (!rep.ok) throw ContractViolated("nonapprox_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------
// nononzero

/// Smallest j ≥ 1 giving I = [a, c], J = [a, b] with c = 2^{e+1} j, b = (2^{e+1} − 1) j, b ≥ a and
/// (b−a+1)/(c−a+1) ≥ 1 − 2^{-e}; the last condition reduces to j·2^e ≥ a − 1.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> nononzero_bc(unsigned e, std::uint64_t a) {
  if (e >= 62) return std::nullopt;
  std::uint64_t K = std::uint64_t{1} << (e + 1), half = std::uint64_t{1} << e;
  std::uint64_t j = 1;
  j = std::max(j, (a + (K - 1) - 1) / (K - 1));
  if (a >= 1) j = std::max(j, (a - 1 + half - 1) / half);
  if (j > kNever / K) return std::nullopt;
  return std::make_pair((K - 1) * j, K * j);
}

inline VerifyReport verify_nononzero(const BuildArtifact& art, const std::vector<PartialDecider>& deciders) {
  VerifyReport rep = verify_enumerations(art);
  struct Iv {
    std::uint64_t e, j, a, b, c;
    bool completed = false;
  };
  std::vector<Iv> ivs;
  std::uint64_t next_a = 0;
  for (const auto& ev : art.trace) {
    if (ev.kind == "appoint") {
      Iv iv{ev.num("e"), ev.num("j"), ev.num("a"), ev.num("b"), ev.num("c")};
      if (iv.e >= deciders.size()) {
        rep.fail("nononzero: interval for unknown requirement");
        continue;
      }
      if (iv.a != next_a) rep.fail("nononzero: interval " + std::to_string(ivs.size()) + " does not start at the least free number");
      next_a = iv.c + 1;
      auto want = nononzero_bc(static_cast<unsigned>(iv.e), iv.a);
      rep.add(Certificate::make("nononzero:choice", ivs.size(), iv.c, detail::count_rational(iv.b), Rel::Eq,
                                detail::count_rational(want ? want->first : kNever)));
      rep.add(Certificate::make("nononzero:ratio", ivs.size(), iv.c, ratio(iv.b, iv.c), Rel::Eq,
                                Rational(1) - pow2_inv(static_cast<unsigned>(iv.e + 1))));
      ivs.push_back(iv);
    } else if (ev.kind == "complete") {
      for (auto& iv : ivs)
        if (iv.e == ev.num("e") && iv.j == ev.num("j")) iv.completed = true;
    }
  }
  const std::uint64_t S = art.stage_max;
  std::vector<std::vector<std::uint64_t>> s_prefix;
  for (const auto& d : deciders) s_prefix.push_back(detail::materialize_values(d, art.n_max, S));
  auto counts = art.counts();
  std::vector<std::uint64_t> not_full(deciders.size(), 0);
  for (std::size_t idx = 0; idx < ivs.size(); ++idx) {
    const auto& iv = ivs[idx];
    if (iv.c >= art.n_max) {
      rep.fail("nononzero: interval beyond the window");
      continue;
    }
    std::uint64_t inA = counts[iv.c + 1] - counts[iv.a];
    Rational dens = ratio(inA, iv.c - iv.a + 1);
    rep.add(Certificate::make("nononzero:floor", idx, iv.c, dens, Rel::Ge,
                              Rational(1) - pow2_inv(static_cast<unsigned>(iv.e))));
    if (dens != 1) ++not_full[iv.e];
    if (!iv.completed) continue;
    const auto& pre = s_prefix[iv.e];
    std::uint64_t r = pre[iv.b + 1], rc = pre[iv.c + 1];
    if (rc != r) {
      rep.fail("nononzero: completed interval " + std::to_string(idx) + " meets S_e beyond J");
      continue;
    }
    Rational rb = ratio(r, iv.b);
    rep.add(Certificate::make("nononzero:identity", idx, iv.c, rb - ratio(rc, iv.c), Rel::Eq,
                              rb * pow2_inv(static_cast<unsigned>(iv.e + 1))));
  }
  for (std::size_t e = 0; e < deciders.size(); ++e)
    rep.add(Certificate::make("nononzero:non_full", e, art.n_max, detail::count_rational(not_full[e]), Rel::Le, Rational(1)));
  for (const auto& ev : art.trace) {
    if (ev.kind != "finalize") continue;
    std::uint64_t e = ev.num("e"), x = ev.num("x");
    bool ok = e < deciders.size() && x < art.n_max && deciders[e].eval(x, S) == Tri::One && !art.in(x);
    for (const auto& iv : ivs)
      if (iv.e == e && iv.j == ev.num("j") && (x <= iv.b || x > iv.c)) ok = false;
    rep.add(Certificate::make("nononzero:witness", e, x, Rational(ok ? 1 : 0), Rel::Eq, Rational(1)));
  }
  return rep;
}

/// Stage s is devoted to N_{s mod E}.  An idle requirement appoints I = [a, c] ⊇ J = [a, b] with a the
/// least number in no interval, puts J into A at once, waits until φ_e converges on all of I, and then
/// either finalizes (least x ∈ (b, c] with φ_e(x) = 1, kept out of A) or fills (b, c] at the next stage.
inline BuildArtifact nononzero_build(const std::vector<PartialDecider>& deciders, const Universe& u) {
  auto art = detail::blank_artifact("nononzero", u);
  enum class St { Idle, Waiting, Completing, Finalized, Unrealizable };
  struct Req {
    St st = St::Idle;
    std::uint64_t a = 0, b = 0, c = 0, j = 0, ptr = 0, witness = kNever, completed = 0;
  };
  const std::size_t E = deciders.size();
  std::vector<Req> rq(E);
  std::uint64_t next_a = 0;
  auto enumerate = [&](std::uint64_t s, std::uint64_t e, std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t x = lo; x <= hi; ++x) art.entry[x] = s;
    art.trace.push_back(TraceEvent{s, "enumerate", {}}
                            .set("req", detail::req_name("N_", e))
                            .set("set", "A")
                            .set("lo", lo)
                            .set("hi", hi));
  };
  for (std::uint64_t s = 0; E > 0 && s <= u.stage_max; ++s) {
    for (std::size_t e = 0; e < E; ++e) {
      auto& r = rq[e];
      if (r.st != St::Completing) continue;
      if (r.c > r.b) enumerate(s, e, r.b + 1, r.c);
      art.trace.push_back(TraceEvent{s, "complete", {}}.set("e", static_cast<std::uint64_t>(e)).set("j", r.j));
      ++r.completed;
      ++r.j;
      r.st = St::Idle;
    }
    std::size_t e = s % E;
    if (rq[e].st == St::Idle) {
      auto& r = rq[e];
      auto bc = nononzero_bc(static_cast<unsigned>(e), next_a);
      if (!bc || bc->second >= u.n_max) {
        r.st = St::Unrealizable;
        art.diagnostics.push_back({"RatioUnrealizable", e,
                                   "no interval with b/c = 1 - 2^-(e+1) starting at " + std::to_string(next_a) +
                                       " fits below n_max"});
        art.trace.push_back(TraceEvent{s, "unrealizable", {}}.set("e", static_cast<std::uint64_t>(e)).set("a", next_a));
      } else {
        r.a = next_a;
        r.b = bc->first;
        r.c = bc->second;
        r.ptr = r.a;
        next_a = r.c + 1;
        r.st = St::Waiting;
        art.marks.push_back(r.a);
        art.trace.push_back(TraceEvent{s, "appoint", {}}
                                .set("e", static_cast<std::uint64_t>(e))
                                .set("j", r.j)
                                .set("a", r.a)
                                .set("b", r.b)
                                .set("c", r.c));
        enumerate(s, e, r.a, r.b);
      }
    }
    for (std::size_t i = 0; i < E; ++i) {
      auto& r = rq[i];
      if (r.st != St::Waiting) continue;
      while (r.ptr <= r.c && deciders[i].defined(r.ptr, s)) ++r.ptr;
      if (r.ptr <= r.c) continue;
      art.trace.push_back(TraceEvent{s, "realized", {}}.set("e", static_cast<std::uint64_t>(i)).set("j", r.j));
      for (std::uint64_t x = r.b + 1; x <= r.c; ++x)
        if (deciders[i].eval(x, s) == Tri::One) {
          r.witness = x;
          break;
        }
      if (r.witness != kNever) {
        r.st = St::Finalized;
        art.trace.push_back(TraceEvent{s, "finalize", {}}
                                .set("e", static_cast<std::uint64_t>(i))
                                .set("j", r.j)
                                .set("x", r.witness));
      } else {
        r.st = St::Completing;
      }
    }
  }
  if (!art.marks.empty()) art.marks.push_back(next_a);
  for (std::size_t e = 0; e < E; ++e) {
    const auto& r = rq[e];
    std::string what;
    switch (r.st) {
      case St::Finalized: what = "finalized: witness in S_e outside A"; break;
      case St::Waiting: what = "phi_e partial on window"; break;
      case St::Completing: what = "realized; completion beyond the stage budget"; break;
      case St::Unrealizable: what = "RatioUnrealizable"; break;
      case St::Idle: what = "intervals completing on window"; break;
    }
    art.outcomes.push_back({detail::req_name("N_", e), what, r.witness,
                            std::to_string(r.completed) + " completed interval(s)"});
  }
  auto rep = verify_nononzero(art, deciders);
  if (!rep.ok) throw ContractViolated("nononzero_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------
// high: n-large restrained intervals

namespace detail {

/// I = R_n ∩ [lo, m] with the least m that is beyond `floor_max` and makes I n-large:
/// |I ∩ [0,m)|·2^{n+2} > m.  kNever when no such m lies below n_max.
inline std::uint64_t high_interval_end(unsigned n, std::uint64_t lo, std::uint64_t floor_max, std::uint64_t n_max) {
  if (n + 2 >= 64) return kNever;
  std::uint64_t step = std::uint64_t{1} << (n + 1);
  std::uint64_t below = 0;
  for (std::uint64_t m = lo; m < n_max; m += step, ++below)
    if (m > floor_max && static_cast<u128>(below) << (n + 2) > m) return m;
  return kNever;
}

/// I = R_k ∩ [lo, m] with the least m making I large: at least half of R_k below m lies in I.
inline std::uint64_t half_interval_end(unsigned k, std::uint64_t lo, std::uint64_t n_max) {
  if (k >= 62) return kNever;
  std::uint64_t step = std::uint64_t{1} << (k + 1);
  std::uint64_t below = 0;
  for (std::uint64_t m = lo; m < n_max; m += step, ++below)
    if (2 * below >= rk_count_below(k, m)) return m;
  return kNever;
}

}  // namespace detail

inline VerifyReport verify_high(const BuildArtifact& art, const std::vector<StageTable>& w) {
  VerifyReport rep = verify_enumerations(art);
  rep.merge(verify_regions(art.trace));
  struct Iv {
    std::uint64_t stage, k;
    std::vector<std::uint64_t> xs;
    std::uint64_t dumped = kNever;
  };
  std::vector<std::vector<Iv>> ivs(w.size());
  auto wmax_at = [&](std::uint64_t n, std::uint64_t s) {
    std::uint64_t m = 0;
    for (std::uint64_t x = 0; x < w[n].n_max(); ++x)
      if (w[n].in(x, s)) m = x;
    return m;
  };
  for (const auto& ev : art.trace) {
    std::uint64_t n = ev.num("region");
    if (n >= w.size()) continue;
    if (ev.kind == "appoint") {
      ivs[n].push_back({ev.stage, ev.num("k"), detail::event_elements(ev)});
    } else if (ev.kind == "dump") {
      for (auto& iv : ivs[n])
        if (iv.k == ev.num("k")) iv.dumped = ev.stage;
    }
  }
  auto counts = art.counts();
  for (std::size_t n = 0; n < w.size(); ++n) {
    for (std::size_t k = 0; k < ivs[n].size(); ++k) {
      const auto& iv = ivs[n][k];
      if (iv.xs.empty()) {
        rep.fail("high: empty interval");
        continue;
      }
      std::uint64_t m = iv.xs.back();
      bool run = iv.xs == detail::rk_range(static_cast<unsigned>(n), iv.xs.front(), m);
      if (!run) rep.fail("high: interval " + std::to_string(k) + " of R_" + std::to_string(n) + " is not an R-run");
      // ρ_m(I) > 2^{-(n+2)} and max I beyond W_n at appointment
      rep.add(Certificate::make("high:large", n, m, ratio(iv.xs.size() - 1, m), Rel::Gt,
                                pow2_inv(static_cast<unsigned>(n + 2))));
      rep.add(Certificate::make("high:beyond_W", n, iv.stage, detail::count_rational(m), Rel::Gt,
                                detail::count_rational(wmax_at(n, iv.stage))));
      if (iv.dumped != kNever) {
        std::uint64_t in = 0;
        for (auto x : iv.xs) in += art.in(x);
        rep.add(Certificate::make("high:dumped", n, iv.dumped, detail::count_rational(in), Rel::Eq,
                                  detail::count_rational(iv.xs.size())));
        if (wmax_at(n, iv.dumped) <= m) rep.fail("high: interval dumped before W_n passed it");
      } else {
        if (k + 1 != ivs[n].size()) rep.fail("high: an interval other than the last was never dumped");
        std::uint64_t hit = 0;
        for (auto x : iv.xs) hit += art.in(x);
        if (hit) rep.fail("high: restrained interval meets A");
        if (wmax_at(n, art.stage_max) > m) rep.fail("high: W_n passes the final interval but it was kept");
        Rational rm = ratio(counts[m], m), ri = ratio(iv.xs.size() - 1, m);
        rep.add(Certificate::make("high:restrained", n, m, rm, Rel::Le, Rational(1) - ri));
        rep.add(Certificate::make("high:bound", n, m, rm, Rel::Lt, Rational(1) - pow2_inv(static_cast<unsigned>(n + 2))));
      }
    }
  }
  for (std::uint64_t x = 1; x < art.n_max && x <= art.stage_max; ++x) {
    std::uint64_t n = rk_index(x);
    bool restrained_at_x = false;
    if (n < w.size())
      for (const auto& iv : ivs[n])
        if (iv.stage <= x && (iv.dumped == kNever || iv.dumped > x) && std::binary_search(iv.xs.begin(), iv.xs.end(), x))
          restrained_at_x = true;
    if (!restrained_at_x && art.entry[x] > x) rep.fail("high: unrestrained " + std::to_string(x) + " did not enter at its own stage");
  }
  return rep;
}

/// Per stage, each N_n (n below the roster size): if W_n has passed max I, dump I into A; with no
/// interval, appoint an n-large I ⊆ R_n disjoint from A, beyond the previous one and beyond max W_n.
/// Then x = s enters A unless restrained.
inline BuildArtifact high_build(const std::vector<CEStream>& streams, const Universe& u) {
  if (streams.size() > 60) throw CapExceeded("high_build: roster exceeds the R_n index cap");
  auto art = detail::blank_artifact("high", u);
  const std::size_t E = streams.size();
  std::vector<StageTable> w;
  std::vector<detail::Arrivals> arr;
  for (const auto& st : streams) {
    w.push_back(st.materialize(u.n_max, u.stage_max));
    arr.emplace_back(w.back());
  }
  struct Req {
    bool active = false, exhausted = false;
    std::vector<std::uint64_t> xs;
    std::uint64_t k = 0, wmax = 0, last_max = 0, dumps = 0;
  };
  std::vector<Req> rq(E);
  for (std::uint64_t s = 0; s <= u.stage_max; ++s) {
    for (std::size_t n = 0; n < E; ++n) {
      auto& r = rq[n];
      for (auto x : arr[n].at(s)) r.wmax = std::max(r.wmax, x);
      if (r.active && r.wmax > r.xs.back()) {
        for (auto x : r.xs) art.entry[x] = s;
        art.trace.push_back(TraceEvent{s, "enumerate", {}}
                                .set("req", detail::req_name("N_", n))
                                .set("region", static_cast<std::uint64_t>(n))
                                .set("set", "A")
                                .set("permit", "dump")
                                .set("xs", TraceValue(r.xs)));
        art.trace.push_back(TraceEvent{s, "dump", {}}.set("region", static_cast<std::uint64_t>(n)).set("k", r.k));
        r.active = false;
        ++r.k;
        ++r.dumps;
      }
      if (!r.active && !r.exhausted) {
        auto nn = static_cast<unsigned>(n);
        std::uint64_t lo = detail::rk_first_at_least(nn, std::max(s, r.last_max + 1));
        std::uint64_t m = lo == kNever ? kNever : detail::high_interval_end(nn, lo, r.wmax, u.n_max);
        if (m == kNever) {
          r.exhausted = true;
          art.diagnostics.push_back({"WindowExhausted", n, "no n-large interval of R_" + std::to_string(n) + " fits below n_max"});
          art.trace.push_back(TraceEvent{s, "exhausted", {}}.set("region", static_cast<std::uint64_t>(n)));
        } else {
          r.xs = detail::rk_range(nn, lo, m);
          r.active = true;
          r.last_max = m;
          art.trace.push_back(TraceEvent{s, "appoint", {}}
                                  .set("req", detail::req_name("N_", n))
                                  .set("region", static_cast<std::uint64_t>(n))
                                  .set("k", r.k)
                                  .set("xs", TraceValue(r.xs)));
        }
      }
    }
    if (s == 0 || s >= u.n_max) continue;
    std::uint64_t n = rk_index(s);
    if (n < E && rq[n].active && s >= rq[n].xs.front() && s <= rq[n].xs.back()) continue;
    if (art.entry[s] != kNever) continue;
    art.entry[s] = s;
    art.trace.push_back(TraceEvent{s, "enumerate", {}}
                            .set("req", detail::req_name("P_", n))
                            .set("region", n)
                            .set("set", "A")
                            .set("permit", "self")
                            .set("xs", TraceValue(std::vector<std::uint64_t>{s})));
  }
  for (std::size_t n = 0; n < E; ++n) {
    const auto& r = rq[n];
    if (r.active) {
      art.marks.push_back(r.xs.back());
      art.outcomes.push_back({detail::req_name("N_", n), "restrained interval holds on window", r.xs.back(),
                              std::to_string(r.dumps) + " interval(s) dumped"});
    } else {
      art.marks.push_back(kNever);
      art.outcomes.push_back({detail::req_name("N_", n), "WindowExhausted", kNever,
                              std::to_string(r.dumps) + " interval(s) dumped"});
    }
  }
  auto rep = verify_high(art, w);
  if (!rep.ok) throw ContractViolated("high_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------
// nonlow: permitted intervals against a jump approximation

struct NonlowParams {
  /// Jump indices i handled for each stream index e.
  std::uint64_t n_jump = 1;
};

inline std::string g_row_key(std::uint64_t e, std::uint64_t i) { return "g:" + std::to_string(e) + "," + std::to_string(i); }

namespace detail {

struct NonlowPairStats {
  std::uint64_t intervals = 0, cancels = 0, successes = 0;
  bool active = false, covered = false, last_cancel_successful = false;
};

/// The four-way case split, read off the finite window.
inline std::string nonlow_case(const NonlowPairStats& p) {
  if (p.intervals == 0) return "Case 1";
  if (p.cancels <= 1) {
    if (!p.active) return "Case 1";
    return p.covered ? "Case 2 (W_e covers I)" : "Case 2 (W_e misses I)";
  }
  return p.successes >= 2 && p.last_cancel_successful ? "Case 3" : "Case 4";
}

}  // namespace detail

inline VerifyReport verify_nonlow(const BuildArtifact& art, const StageTable& c, const std::vector<StageTable>& w,
                                  const JumpApprox& jump, const NonlowParams& p) {
  VerifyReport rep = verify_enumerations(art);
  rep.merge(verify_regions(art.trace));
  rep.merge(verify_permissions(art.trace, c, "A"));
  const std::uint64_t S = art.stage_max;
  struct Iv {
    std::uint64_t stage, use;
    std::vector<std::uint64_t> xs;
    std::uint64_t cancelled = kNever;
    bool successful = false;
  };
  std::map<std::uint64_t, std::vector<Iv>> by_region;
  for (const auto& ev : art.trace) {
    std::uint64_t k = ev.num("region");
    if (ev.kind == "appoint") {
      by_region[k].push_back({ev.stage, ev.num("use"), detail::event_elements(ev)});
    } else if (ev.kind == "cancel") {
      auto& v = by_region[k];
      if (v.empty() || v.back().cancelled != kNever) {
        rep.fail("nonlow: cancel without an active interval");
        continue;
      }
      v.back().cancelled = ev.stage;
      auto* flag = ev.get("successful");
      v.back().successful = flag && std::holds_alternative<bool>(*flag) && std::get<bool>(*flag);
    }
  }
  std::size_t idx = 0;
  for (std::uint64_t e = 0; e < w.size(); ++e)
    for (std::uint64_t i = 0; i < p.n_jump; ++i, ++idx) {
      std::uint64_t k = detail::pair_code(e, i);
      auto& ivs = by_region[k];
      detail::NonlowPairStats st;
      std::vector<std::uint64_t> g(S + 1, 0);
      for (std::size_t j = 0; j < ivs.size(); ++j) {
        const auto& iv = ivs[j];
        if (iv.xs.empty()) {
          rep.fail("nonlow: empty interval");
          continue;
        }
        ++st.intervals;
        auto use = jump.use(i, iv.stage);
        if (!jump.guess(i, iv.stage) || !use || *use != iv.use)
          rep.fail("nonlow: appointment at stage " + std::to_string(iv.stage) + " does not match the jump approximation");
        if (iv.stage < k) rep.fail("nonlow: pair acted before stage <e,i>");
        if (iv.xs.front() <= iv.use) rep.fail("nonlow: min I does not exceed the use");
        if (iv.xs != detail::rk_range(static_cast<unsigned>(k), iv.xs.front(), iv.xs.back()))
          rep.fail("nonlow: interval is not an R-run");
        std::uint64_t m = iv.xs.back();
        rep.add(Certificate::make("nonlow:large", k, m, detail::count_rational(2 * (iv.xs.size() - 1)), Rel::Ge,
                                  detail::count_rational(detail::rk_count_below(static_cast<unsigned>(k), m))));
        std::uint64_t cover = 0;
        for (auto x : iv.xs) {
          std::uint64_t ew = w[e].entry(x);
          cover = (cover == kNever || ew == kNever) ? kNever : std::max(cover, ew);
          if (art.entry[x] != iv.cancelled) rep.fail("nonlow: interval element " + std::to_string(x) + " not restrained until cancellation");
        }
        std::uint64_t end = iv.cancelled == kNever ? S + 1 : iv.cancelled;
        for (std::uint64_t s = std::max(iv.stage, cover == kNever ? kNever : cover); s < end && s <= S; ++s) g[s] = 1;
        if (iv.cancelled != kNever) {
          ++st.cancels;
          bool succ = cover != kNever && cover <= iv.cancelled;
          if (succ != iv.successful) rep.fail("nonlow: success designation disagrees with W_e");
          st.successes += succ;
          st.last_cancel_successful = succ;
        } else {
          st.active = true;
          st.covered = cover != kNever && cover <= S;
        }
      }
      const auto it = art.series.find(g_row_key(e, i));
      std::uint64_t mismatch = 0;
      if (it == art.series.end() || it->second.size() != g.size()) {
        ++mismatch;
        rep.fail("nonlow: g row " + g_row_key(e, i) + " missing or of the wrong length");
      } else {
        for (std::uint64_t s = 0; s <= S; ++s) mismatch += it->second[s] != g[s];
      }
      rep.add(Certificate::make("nonlow:g_row", idx, S, detail::count_rational(mismatch), Rel::Eq, Rational(0)));
      std::string want = detail::nonlow_case(st);
      bool ok = idx < art.outcomes.size() && art.outcomes[idx].outcome == want;
      if (!ok) rep.fail("nonlow: pair " + g_row_key(e, i) + " classified differently from " + want);
      rep.add(Certificate::make("nonlow:case", idx, S, Rational(ok ? 1 : 0), Rel::Eq, Rational(1)));
    }
  // g changes only at recorded events
  std::uint64_t unexplained = 0;
  for (const auto& [key, row] : art.series) {
    if (key.rfind("g:", 0) != 0) continue;
    for (std::uint64_t s = 1; s < row.size(); ++s) {
      if (row[s] == row[s - 1]) continue;
      const char* kind = row[s] ? "covered" : "cancel";
      bool found = std::any_of(art.trace.begin(), art.trace.end(), [&](const TraceEvent& ev) {
        return ev.stage == s && ev.kind == kind && ev.str("pair") == key.substr(2);
      });
      unexplained += !found;
    }
  }
  rep.add(Certificate::make("nonlow:g_events", 0, S, detail::count_rational(unexplained), Rel::Eq, Rational(0)));
  return rep;
}

/// The (e,i)-strategy works in R_⟨e,i⟩ and acts from stage ⟨e,i⟩ on.  Without an interval and with
/// guess(i,s) = 1 it appoints a large I ⊆ R_⟨e,i⟩ with min I above the use, above s and above earlier
/// intervals.  A C-change y ≤ use at stage s cancels I and dumps it into A at that same stage (permitted
/// by y).  g(e,i,s) = 1 iff the current interval is covered by W_{e,s}.  Finally x = s enters A unless
/// restrained.
inline BuildArtifact nonlow_build(const CEStream& c_stream, const JumpApprox& jump, const std::vector<CEStream>& streams,
                                  const NonlowParams& p, const Universe& u) {
  auto art = detail::blank_artifact("nonlow", u);
  const std::uint64_t S = u.stage_max;
  auto c = c_stream.materialize(u.n_max, S);
  detail::Arrivals c_arr(c);
  std::vector<StageTable> w;
  for (const auto& st : streams) w.push_back(st.materialize(u.n_max, S));
  struct Pair {
    std::uint64_t e = 0, i = 0, k = 0;
    bool active = false, exhausted = false, g = false;
    std::vector<std::uint64_t> xs;
    std::uint64_t use = 0, cover = kNever, last_max = 0, j = 0;
    detail::NonlowPairStats st;
    std::vector<std::uint64_t> row;
  };
  std::vector<Pair> pairs;
  for (std::uint64_t e = 0; e < w.size(); ++e)
    for (std::uint64_t i = 0; i < p.n_jump; ++i) {
      std::uint64_t k = detail::pair_code(e, i);
      if (k >= 62) throw CapExceeded("nonlow_build: pair code <" + std::to_string(e) + "," + std::to_string(i) + "> exceeds the region cap");
      Pair pr;
      pr.e = e;
      pr.i = i;
      pr.k = k;
      pr.row.assign(S + 1, 0);
      pairs.push_back(std::move(pr));
    }
  std::vector<int> region_owner(64, -1);
  for (std::size_t q = 0; q < pairs.size(); ++q) region_owner[pairs[q].k] = static_cast<int>(q);
  for (std::uint64_t s = 0; s <= S; ++s) {
    auto changes = c_arr.at(s);
    std::uint64_t cmin = changes.empty() ? kNever : changes.front();
    for (auto& pr : pairs) {
      if (pr.k > s) continue;
      std::string name = std::to_string(pr.e) + "," + std::to_string(pr.i);
      if (!pr.active && !pr.exhausted && jump.guess(pr.i, s)) {
        auto use = jump.use(pr.i, s);
        if (!use)
          throw ContractViolated("jump '" + jump.label + "': use undefined while guess(" + std::to_string(pr.i) +
                                 ", " + std::to_string(s) + ") = 1");
        auto kk = static_cast<unsigned>(pr.k);
        std::uint64_t lo = detail::rk_first_at_least(kk, std::max({*use, s, pr.last_max}) + 1);
        std::uint64_t m = lo == kNever ? kNever : detail::half_interval_end(kk, lo, u.n_max);
        if (m == kNever) {
          pr.exhausted = true;
          art.diagnostics.push_back({"WindowExhausted", pr.k, "no large interval of R_<" + name + "> fits below n_max"});
          art.trace.push_back(TraceEvent{s, "exhausted", {}}.set("pair", name).set("region", pr.k));
        } else {
          pr.xs = detail::rk_range(kk, lo, m);
          pr.active = true;
          pr.use = *use;
          pr.last_max = m;
          pr.cover = 0;
          for (auto x : pr.xs) {
            std::uint64_t ew = w[pr.e].entry(x);
            pr.cover = (pr.cover == kNever || ew == kNever) ? kNever : std::max(pr.cover, ew);
          }
          ++pr.st.intervals;
          art.trace.push_back(TraceEvent{s, "appoint", {}}
                                  .set("req", "N_" + name)
                                  .set("pair", name)
                                  .set("region", pr.k)
                                  .set("j", pr.j)
                                  .set("use", pr.use)
                                  .set("xs", TraceValue(pr.xs)));
        }
      } else if (pr.active && cmin <= pr.use) {
        bool successful = pr.cover <= s;
        for (auto x : pr.xs) art.entry[x] = s;
        art.trace.push_back(TraceEvent{s, "enumerate", {}}
                                .set("req", "N_" + name)
                                .set("region", pr.k)
                                .set("set", "A")
                                .set("permit", "stream")
                                .set("y", cmin)
                                .set("j", pr.j)
                                .set("xs", TraceValue(pr.xs)));
        art.trace.push_back(TraceEvent{s, "cancel", {}}
                                .set("pair", name)
                                .set("region", pr.k)
                                .set("j", pr.j)
                                .set("successful", successful));
        pr.active = false;
        ++pr.j;
        ++pr.st.cancels;
        pr.st.successes += successful;
        pr.st.last_cancel_successful = successful;
      }
      bool g = pr.active && pr.cover <= s;
      if (g && !pr.g) art.trace.push_back(TraceEvent{s, "covered", {}}.set("pair", name).set("region", pr.k).set("j", pr.j));
      pr.g = g;
      pr.row[s] = g;
    }
    if (s == 0 || s >= u.n_max) continue;
    std::uint64_t k = rk_index(s);
    if (k < 64 && region_owner[k] >= 0) {
      const auto& pr = pairs[static_cast<std::size_t>(region_owner[k])];
      if (pr.active && s >= pr.xs.front() && s <= pr.xs.back()) continue;
    }
    if (art.entry[s] != kNever) continue;
    art.entry[s] = s;
    art.trace.push_back(TraceEvent{s, "enumerate", {}}
                            .set("req", detail::req_name("P_", k))
                            .set("region", k)
                            .set("set", "A")
                            .set("permit", "self")
                            .set("xs", TraceValue(std::vector<std::uint64_t>{s})));
  }
  for (auto& pr : pairs) {
    pr.st.active = pr.active;
    pr.st.covered = pr.active && pr.cover <= S;
    art.series[g_row_key(pr.e, pr.i)] = std::move(pr.row);
    art.outcomes.push_back({"N_" + std::to_string(pr.e) + "," + std::to_string(pr.i), detail::nonlow_case(pr.st),
                            pr.active ? pr.xs.back() : kNever,
                            std::to_string(pr.st.intervals) + " interval(s), " + std::to_string(pr.st.successes) +
                                " successful, on window"});
  }
  auto rep = verify_nonlow(art, c, w, jump, p);
  if (!rep.ok) throw ContractViolated("nonlow_build produced an uncertified artifact: " + rep.failures.front());
  art.certificates = std::move(rep.certificates);
  return art;
}

// ---------------------------------------------------------------------------
// generic but not coarse: A0, A1 split against S_e on permitted intervals

struct SplitArtifact {
  /// a1 carries the shared trace, outcomes and certificates; a0 only its entry stages.
  BuildArtifact a0, a1;
};

inline VerifyReport verify_generic_not_coarse(const SplitArtifact& r, const StageTable& b,
                                              const std::vector<PartialDecider>& deciders) {
  const auto& tr = r.a1.trace;
  VerifyReport rep = verify_enumerations(tr, r.a0, "A0");
  rep.merge(verify_enumerations(tr, r.a1, "A1"));
  rep.merge(verify_regions(tr));
  rep.merge(verify_permissions(tr, b, "A1"));
  std::uint64_t both = 0;
  for (std::uint64_t x = 0; x < r.a1.n_max; ++x) both += r.a0.in(x) && r.a1.in(x);
  rep.add(Certificate::make("gnc:disjoint", 0, r.a1.n_max, detail::count_rational(both), Rel::Eq, Rational(0)));
  const std::uint64_t S = r.a1.stage_max;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint64_t>> ivs;  // (region, j) -> I
  for (const auto& ev : tr)
    if (ev.kind == "appoint") ivs[{ev.num("region"), ev.num("j")}] = detail::event_elements(ev);
  for (const auto& ev : tr) {
    if (ev.kind != "split" && ev.kind != "flush") continue;
    std::uint64_t e = ev.num("region");
    auto it = ivs.find({e, ev.num("j")});
    if (it == ivs.end() || e >= deciders.size()) {
      rep.fail("gnc: " + ev.kind + " of an unknown interval");
      continue;
    }
    if (ev.kind == "split") {
      // I_j ⊆ S_e △ A1: x ∈ S_e xor x ∈ A1
      std::uint64_t outside = 0;
      for (auto x : it->second) outside += (deciders[e].eval(x, S) == Tri::One) == r.a1.in(x);
      rep.add(Certificate::make("gnc:split", e, ev.stage, detail::count_rational(outside), Rel::Eq, Rational(0)));
    } else {
      std::uint64_t in = 0;
      for (auto x : it->second) in += r.a1.entry[x] == ev.stage;
      rep.add(Certificate::make("gnc:flush", e, ev.stage, detail::count_rational(in), Rel::Eq,
                                detail::count_rational(it->second.size())));
    }
  }
  return rep;
}

/// Per e < E, in R_e: keep one unrealized large interval at a time (a new one, above s and above the
/// previous one, once the last is realized).  At stage s let y be the least element entering B.  Every
/// realized, untouched I_j with min I_j ≥ y is split (I_j ∩ S_e → A0, the rest → A1), and untouched
/// intervals older than a split one are flushed into A1.  Then x = s enters A1 unless restrained.
inline SplitArtifact generic_not_coarse_build(const CEStream& b_stream, const std::vector<PartialDecider>& deciders,
                                              const Universe& u) {
  if (deciders.size() > 60) throw CapExceeded("generic_not_coarse_build: roster exceeds the R_e index cap");
  SplitArtifact out{detail::blank_artifact("generic_not_coarse:A0", u), detail::blank_artifact("generic_not_coarse", u)};
  auto& a0 = out.a0;
  auto& a1 = out.a1;
  const std::uint64_t S = u.stage_max;
  auto b = b_stream.materialize(u.n_max, S);
  detail::Arrivals b_arr(b);
  struct Iv {
    std::vector<std::uint64_t> xs;
    std::uint64_t j = 0, ptr = 0;
    bool realized = false, touched = false;
  };
  struct Req {
    std::vector<Iv> ivs;
    std::uint64_t last_max = 0, splits = 0, flushes = 0;
    bool exhausted = false;
  };
  const std::size_t E = deciders.size();
  std::vector<Req> rq(E);
  auto enumerate = [&](std::uint64_t s, std::uint64_t e, const char* set, const char* permit, std::uint64_t y,
                       std::uint64_t j, std::vector<std::uint64_t> xs) {
    if (xs.empty()) return;
    auto& target = std::string(set) == "A0" ? a0 : a1;
    for (auto x : xs) target.entry[x] = s;
    TraceEvent ev{s, "enumerate", {}};
    ev.set("req", detail::req_name("N_", e)).set("region", e).set("set", set).set("permit", permit);
    if (y != kNever) ev.set("y", y);
    if (j != kNever) ev.set("j", j);
    ev.set("xs", TraceValue(std::move(xs)));
    a1.trace.push_back(std::move(ev));
  };
  for (std::uint64_t s = 0; s <= S; ++s) {
    auto arrivals = b_arr.at(s);
    std::uint64_t y = arrivals.empty() ? kNever : arrivals.front();
    for (std::size_t e = 0; e < E; ++e) {
      auto& r = rq[e];
      auto ee = static_cast<std::uint64_t>(e);
      auto k = static_cast<unsigned>(e);
      // realization
      for (auto& iv : r.ivs) {
        if (iv.realized) continue;
        while (iv.ptr < iv.xs.size() && deciders[e].defined(iv.xs[iv.ptr], s)) ++iv.ptr;
        if (iv.ptr == iv.xs.size()) {
          iv.realized = true;
          a1.trace.push_back(TraceEvent{s, "realized", {}}.set("region", ee).set("j", iv.j));
        }
      }
      // permissions
      if (y != kNever) {
        std::optional<std::size_t> newest;
        for (std::size_t q = 0; q < r.ivs.size(); ++q) {
          auto& iv = r.ivs[q];
          if (!iv.realized || iv.touched || iv.xs.front() < y) continue;
          std::vector<std::uint64_t> in_s, rest;
          for (auto x : iv.xs) (deciders[e].eval(x, s) == Tri::One ? in_s : rest).push_back(x);
          enumerate(s, ee, "A0", "stream", y, iv.j, std::move(in_s));
          enumerate(s, ee, "A1", "stream", y, iv.j, std::move(rest));
          a1.trace.push_back(TraceEvent{s, "split", {}}.set("region", ee).set("j", iv.j).set("y", y));
          iv.touched = true;
          ++r.splits;
          newest = q;
        }
        if (newest)
          for (std::size_t q = 0; q < *newest; ++q) {
            auto& iv = r.ivs[q];
            if (iv.touched) continue;
            enumerate(s, ee, "A1", "flush", kNever, iv.j, iv.xs);
            a1.trace.push_back(TraceEvent{s, "flush", {}}.set("region", ee).set("j", iv.j));
            iv.touched = true;
            ++r.flushes;
          }
      }
      // appointment
      bool waiting = !r.ivs.empty() && !r.ivs.back().realized;
      if (!waiting && !r.exhausted) {
        std::uint64_t lo = detail::rk_first_at_least(k, std::max(s, r.ivs.empty() ? 0 : r.last_max + 1));
        std::uint64_t m = lo == kNever ? kNever : detail::half_interval_end(k, lo, u.n_max);
        if (m == kNever) {
          r.exhausted = true;
          a1.diagnostics.push_back({"WindowExhausted", e, "no large interval of R_" + std::to_string(e) + " fits below n_max"});
          a1.trace.push_back(TraceEvent{s, "exhausted", {}}.set("region", ee));
        } else {
          Iv iv;
          iv.xs = detail::rk_range(k, lo, m);
          iv.j = r.ivs.size();
          r.last_max = m;
          a1.trace.push_back(TraceEvent{s, "appoint", {}}
                                 .set("req", detail::req_name("N_", e))
                                 .set("region", ee)
                                 .set("j", iv.j)
                                 .set("xs", TraceValue(iv.xs)));
          r.ivs.push_back(std::move(iv));
        }
      }
    }
    if (s == 0 || s >= u.n_max) continue;
    std::uint64_t k = rk_index(s);
    bool restrained = false;
    if (k < E)
      for (const auto& iv : rq[k].ivs)
        if (!iv.touched && s >= iv.xs.front() && s <= iv.xs.back()) restrained = true;
    if (restrained) continue;
    if (a0.entry[s] != kNever || a1.entry[s] != kNever) continue;
    enumerate(s, k, "A1", "self", kNever, kNever, {s});
  }
  for (std::size_t e = 0; e < E; ++e) {
    const auto& r = rq[e];
    std::string what;
    if (!r.ivs.empty() && !r.ivs.back().realized)
      what = "phi_e partial on window";
    else if (r.splits == 0)
      what = "no permitted interval on window";
    else
      what = "permitted intervals split on window";
    a1.outcomes.push_back({detail::req_name("N_", e), what, kNever,
                           std::to_string(r.ivs.size()) + " interval(s), " + std::to_string(r.splits) + " split, " +
                               std::to_string(r.flushes) + " flushed"});
  }
  a0.marks = a1.marks;
  auto rep = verify_generic_not_coarse(out, b, deciders);
  if (!rep.ok) throw ContractViolated("generic_not_coarse_build produced an uncertified artifact: " + rep.failures.front());
  a1.certificates = std::move(rep.certificates);
  return out;
}

}  // namespace density
