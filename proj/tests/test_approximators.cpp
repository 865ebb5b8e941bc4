#include <gtest/gtest.h>

#include <random>

#include "density/approximators.hpp"

using namespace density;

namespace {

std::uint64_t naive_count(const StageTable& a, std::uint64_t lo, std::uint64_t hi, std::uint64_t t) {
  std::uint64_t c = 0;
  for (std::uint64_t x = lo; x < hi; ++x) c += a.in(x, t) ? 1 : 0;
  return c;
}

// Pairs enumerated literally in the order (s+t ascending, then s ascending).
std::vector<std::pair<std::uint64_t, std::uint64_t>> naive_barzdin(const StageTable& a, const Rational& q) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cps{{0, 0}};
  const std::uint64_t N = a.n_max(), S = a.stage_max();
  std::uint64_t sn = 0;
  while (sn < N) {
    bool found = false;
    for (std::uint64_t d = 0; d <= N + S && !found; ++d)
      for (std::uint64_t s = sn + 1; s <= std::min(d, N) && !found; ++s) {
        std::uint64_t t = d - s;
        if (t > S) continue;
        if (Rational(naive_count(a, sn, s, t)) >= q * s) {
          cps.push_back({s, t});
          sn = s;
          found = true;
        }
      }
    if (!found) break;
  }
  return cps;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> naive_d2(const StageTable& a, const RationalSequence& q) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cps{{0, 0}};
  const std::uint64_t N = a.n_max(), S = a.stage_max();
  std::uint64_t sn = 0;
  while (sn < N) {
    std::uint64_t n = cps.size() - 1;
    bool found = false;
    for (std::uint64_t d = 0; d <= N + S && !found; ++d)
      for (std::uint64_t s = sn + 1; s <= std::min(d, N) && !found; ++s) {
        std::uint64_t t = d - s;
        if (t > S || t <= n) continue;
        if (Rational(naive_count(a, sn, s, t)) >= (q(t) - pow2_inv(static_cast<unsigned>(n))) * s) {
          cps.push_back({s, t});
          sn = s;
          found = true;
        }
      }
    if (!found) break;
  }
  return cps;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs(const SubsetArtifact& art) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> v;
  for (auto& c : art.checkpoints) v.push_back({c.s, c.t});
  return v;
}

CEStream evens_below_t() { return streams::from_set(sets::evens(), Schedule::linear(1, 1)); }
CEStream interval_stream() { return streams::from_set(sets::omega(), Schedule::linear(1, 1)); }

bool all_hold(const SubsetArtifact& art) {
  for (auto& c : art.certificates)
    if (!c.holds) return false;
  return true;
}

}  // namespace

TEST(Barzdin, HandSimulatedEvens) {
  auto art = barzdin_subset(evens_below_t(), Universe::make(3, 10), ratio(1, 4));
  ASSERT_GE(art.checkpoints.size(), 3u);
  EXPECT_EQ(art.checkpoints[1].s, 1u);
  EXPECT_EQ(art.checkpoints[1].t, 1u);
  EXPECT_EQ(art.checkpoints[2].s, 3u);
  EXPECT_EQ(art.checkpoints[2].t, 3u);
  EXPECT_EQ(art.bits, (std::vector<bool>{true, false, true}));
  EXPECT_TRUE(all_hold(art));
}

TEST(Barzdin, FullSet) {
  auto art = barzdin_subset(interval_stream(), Universe::make(500, 1000), ratio(1, 2));
  ASSERT_GT(art.checkpoints.size(), 1u);
  for (std::size_t i = 1; i < art.checkpoints.size(); ++i) {
    std::uint64_t s = art.checkpoints[i].s;
    std::uint64_t c = 0;
    for (std::uint64_t x = 0; x < s; ++x) c += art.bits[x];
    EXPECT_EQ(c, s) << "checkpoint " << i;
  }
}

TEST(Barzdin, EmptyStreamReportsBudget) {
  auto art = barzdin_subset(streams::empty(), Universe::make(100, 100), ratio(1, 4));
  EXPECT_EQ(art.checkpoints.size(), 1u);
  EXPECT_TRUE(art.has_diagnostic("BudgetExceeded"));
  EXPECT_EQ(art.determined_prefix, 0u);
}

TEST(Barzdin, RejectsBadQ) {
  EXPECT_THROW(barzdin_subset(interval_stream(), Universe::make(10, 10), Rational(0)), InvalidArgument);
  EXPECT_THROW(barzdin_subset(interval_stream(), Universe::make(10, 10), Rational(1)), InvalidArgument);
}

TEST(Barzdin, MatchesNaivePairEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::uint64_t N = 20 + rng() % 40, S = 10 + rng() % 60;
    std::vector<std::uint64_t> entry(N);
    for (auto& e : entry) e = rng() % 3 == 0 ? kNever : rng() % (S + 10);
    for (auto& e : entry)
      if (e != kNever && e > S) e = kNever;
    StageTable a(N, S, entry);
    Rational q = ratio(1 + rng() % 7, 8);
    auto art = barzdin_subset(a, q);
    EXPECT_EQ(pairs(art), naive_barzdin(a, q)) << "trial " << trial;
    EXPECT_TRUE(verify_barzdin(art, a, q).ok);
  }
}

TEST(Barzdin, VerifierCatchesMutations) {
  auto a = evens_below_t().materialize(200, 400);
  auto art = barzdin_subset(a, ratio(1, 4));
  ASSERT_TRUE(verify_barzdin(art, a, ratio(1, 4)).ok);
  auto flipped = art;
  flipped.bits[2] = !flipped.bits[2];
  auto rep = verify_barzdin(flipped, a, ratio(1, 4));
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.failures.front().find("checkpoint"), std::string::npos);
  auto edited = art;
  edited.checkpoints[1].t += 1;
  EXPECT_FALSE(verify_barzdin(edited, a, ratio(1, 4)).ok);
}

TEST(D2Upper, IntervalStreamOneMinusPow2) {
  auto a = interval_stream().materialize(3000, 4000);
  auto art = d2_upper_subset(a, seqs::one_minus_pow2());
  ASSERT_GT(art.checkpoints.size(), 2u);
  EXPECT_TRUE(all_hold(art));
  for (std::size_t i = 1; i < art.checkpoints.size(); ++i) EXPECT_TRUE(art.checkpoints[i].strong);
}

TEST(D2Upper, EvensHalf) {
  auto a = streams::from_set(sets::evens()).materialize(2000, 50);
  auto art = d2_upper_subset(a, seqs::constant(ratio(1, 2)));
  ASSERT_GT(art.checkpoints.size(), 2u);
  EXPECT_TRUE(all_hold(art));
  EXPECT_TRUE(verify_d2_upper(art, a, seqs::constant(ratio(1, 2))).ok);
}

TEST(D2Upper, EmptyStream) {
  auto art = d2_upper_subset(streams::empty().materialize(200, 200), seqs::constant(ratio(1, 2)));
  EXPECT_TRUE(art.has_diagnostic("BudgetExceeded"));
}

TEST(D2Upper, MatchesNaive) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    std::uint64_t N = 20 + rng() % 30, S = 10 + rng() % 40;
    std::vector<std::uint64_t> entry(N);
    for (auto& e : entry) e = rng() % 4 == 0 ? kNever : rng() % (S + 1);
    StageTable a(N, S, entry);
    std::vector<Rational> vals;
    for (std::uint64_t i = 0; i <= S; ++i) vals.push_back(ratio(rng() % 9, 8));
    auto q = seqs::listed(vals);
    auto art = d2_upper_subset(a, q);
    EXPECT_EQ(pairs(art), naive_d2(a, q)) << "trial " << trial;
  }
}

TEST(CeilMinusPow2, MatchesRational) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20000; ++i) {
    SmallFrac q{rng() % 50, 1 + rng() % 50};
    if (q.num > q.den) q.num = q.den;
    std::uint64_t m = rng() % 100000;
    unsigned k = rng() % 70;
    Rational v = Rational(BigInt(m)) * Rational(BigInt(q.num), BigInt(q.den)) - Rational(BigInt(m)) * pow2_inv(k);
    std::uint64_t want = v <= 0 ? 0 : static_cast<std::uint64_t>(ceil_of(v));
    ASSERT_EQ(ceil_minus_pow2(q, m, k), want) << q.num << "/" << q.den << " m=" << m << " k=" << k;
  }
}

namespace {

// Literal transcription of the look-ahead definitions on a small table (horizon = table size).
std::vector<bool> naive_lookahead_bits(const StageTable& a, std::uint64_t N,
                                       const std::function<bool(std::uint64_t n, std::uint64_t s)>& good,
                                       std::uint64_t lo, std::uint64_t s_min_offset_n) {
  std::uint64_t H = a.n_max();
  std::vector<std::uint64_t> s_of(H + 1, 0);
  for (std::uint64_t n = lo; n <= H; ++n) {
    std::uint64_t s = s_min_offset_n ? n : 0;
    while (!good(n, s)) ++s;
    s_of[n] = s;
  }
  std::vector<bool> b(N);
  for (std::uint64_t k = 0; k < N; ++k) {
    std::uint64_t t = 0;
    for (std::uint64_t n = lo; n <= std::min(H, k * k); ++n) t = std::max(t, s_of[n]);
    b[k] = a.in(k, t);
  }
  return b;
}

}  // namespace

TEST(Lookahead, IntervalStreamIsCofinite) {
  auto art = lookahead_subset(interval_stream(), Universe::make(400, 200000), ratio(1, 2), 1);
  EXPECT_EQ(art.horizon, 160000u);
  for (std::uint64_t k = 3; k < 400; ++k) EXPECT_TRUE(art.bits[k]) << k;
  EXPECT_TRUE(all_hold(art));
  // ρ_n(B) ≥ 1/2 − 1/√n in the exact form n·ρ_n(B) ≥ ⌈n/2⌉ − ⌈√n⌉.
  for (auto& c : art.certificates) EXPECT_TRUE(c.holds);
}

TEST(Lookahead, OmegaInstant) {
  auto art = lookahead_subset(streams::from_set(sets::omega(), Schedule::instant(), 1u << 20), Universe::make(300, 5),
                              ratio(9, 10), 1);
  for (std::uint64_t k = 0; k < 300; ++k) EXPECT_TRUE(art.bits[k]);
}

TEST(Lookahead, EvensAndPrecondition) {
  auto art = lookahead_subset(streams::from_set(sets::evens(), Schedule::linear(2, 0)), Universe::make(300, 200000),
                              ratio(1, 2), 2);
  EXPECT_TRUE(all_hold(art));
  for (std::uint64_t k = 0; k < 300; ++k) {
    if (art.bits[k]) { EXPECT_EQ(k % 2, 0u); }
  }
  try {
    lookahead_subset(streams::from_set(sets::evens()), Universe::make(300, 10), ratio(3, 4), 2);
    FAIL();
  } catch (const PreconditionViolated& e) {
    EXPECT_EQ(e.where(), 2u);
  }
}

TEST(Lookahead, MatchesNaiveDefinition) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::uint64_t N = 12, H = 144, S = 60;
    std::vector<std::uint64_t> entry(H);
    for (std::uint64_t x = 0; x < H; ++x) entry[x] = rng() % 5 == 0 ? 40 + rng() % 21 : rng() % 40;
    StageTable a(H, S, entry);
    Rational q = ratio(1 + rng() % 3, 5);
    LookaheadParams p;
    p.q = q;
    p.n0 = 1 + rng() % 5;
    bool valid = true;
    auto fc = a.final_counts();
    for (std::uint64_t n = p.n0; n <= N; ++n)
      if (Rational(fc[n]) < q * n) valid = false;
    if (!valid) {
      EXPECT_THROW(lookahead_engine(a, N, p), PreconditionViolated);
      continue;
    }
    SubsetArtifact art;
    try {
      art = lookahead_engine(a, N, p);
    } catch (const BudgetExceeded&) {
      continue;
    }
    if (art.horizon != H) continue;  // naive oracle assumes the full horizon
    auto want = naive_lookahead_bits(
        a, N, [&](std::uint64_t n, std::uint64_t s) { return Rational(naive_count(a, 0, n, s)) >= q * n || s > 10 * S; },
        p.n0, 0);
    EXPECT_EQ(art.bits, want) << trial;
  }
}

TEST(Lookahead, TIsNondecreasingAndVerifierCatchesFlip) {
  auto s = streams::from_set(sets::residue_union(3, {0, 1}), Schedule::burst(7));
  auto art = lookahead_subset(s, Universe::make(500, 100000), ratio(1, 2), 4);
  for (std::size_t k = 1; k < art.t_of_k.size(); ++k) EXPECT_LE(art.t_of_k[k - 1], art.t_of_k[k]);
  auto a = s.materialize(500, 100000);
  LookaheadParams p;
  p.q = ratio(1, 2);
  p.n0 = 4;
  EXPECT_TRUE(verify_lookahead(art, a, p).ok);
  auto m = art;
  m.bits[100] = !m.bits[100];
  EXPECT_FALSE(verify_lookahead(m, a, p).ok);
}

TEST(EffectiveDensity1, OmegaTrivial) {
  auto art = effective_density1_subset(streams::from_set(sets::omega(), Schedule::instant(), 1u << 20),
                                       Universe::make(200, 5), [](std::uint64_t) { return 0; });
  for (std::uint64_t k = 0; k < 200; ++k) EXPECT_TRUE(art.bits[k]);
  EXPECT_TRUE(all_hold(art));
}

TEST(EffectiveDensity1, OmegaMinusOne) {
  auto a = streams::from_set(sets::complement(sets::from_members({1})), Schedule::instant(), 1u << 20);
  auto w = [](std::uint64_t k) { return k >= 62 ? kNever / 2 : std::uint64_t{1} << (k + 1); };
  auto art = effective_density1_subset(a, Universe::make(1000, 5), w);
  EXPECT_TRUE(all_hold(art));
  // h(n) = greatest z ≤ n with 2^{z+1} ≤ n, i.e. ⌊log₂ n⌋ − 1 for n ≥ 2.
  for (std::uint64_t n = 2; n <= 1000; ++n) {
    unsigned want = floor_log2(n) - 1;
    std::uint64_t need = n - (n >> want);
    std::uint64_t cb = 0;
    for (std::uint64_t x = 0; x < n; ++x) cb += art.bits[x];
    EXPECT_GE(cb + isqrt_ceil(n), need);
  }
}

TEST(EffectiveDensity1, EvensViolatesWitness) {
  try {
    effective_density1_subset(streams::from_set(sets::evens()), Universe::make(100, 5), [](std::uint64_t) { return 0; });
    FAIL();
  } catch (const PreconditionViolated& e) {
    EXPECT_EQ(e.where(), 2u);
    EXPECT_NE(std::string(e.what()).find("k=2"), std::string::npos);
  }
}

TEST(LimitWitness, OmegaConstantZero) {
  auto art = limit_witness_subset(streams::from_set(sets::omega(), Schedule::instant(), 1u << 20),
                                  Universe::make(300, 1u << 20), LimitApprox::constant(0), 1u << 16);
  for (std::uint64_t n = 1; n <= 300; ++n) EXPECT_EQ(art.s_of_n[n], n);
  for (std::uint64_t k = 0; k < 300; ++k) EXPECT_TRUE(art.bits[k]);
}

TEST(LimitWitness, EmptyStreamGuards) {
  // g(k,s) = k+1: at n = 1 only the k = 0 guard is active (vacuous bound 0), so s(1) = 1;
  // at n = 2 the k = 1 guard demands ρ_2 ≥ 1/2, which ∅ never meets.
  try {
    limit_witness_subset(streams::empty(), Universe::make(50, 400),
                         LimitApprox{[](std::uint64_t k, std::uint64_t) { return k + 1; }, "k+1"}, 2500);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.where(), 2u);
  }
  // With every guard vacuous the μ-search stops at s = n and B = ∅.
  auto art = limit_witness_subset(streams::empty(), Universe::make(50, 4000),
                                  LimitApprox{[](std::uint64_t k, std::uint64_t s) { return s + k + 1; }, "s+k+1"},
                                  2500);
  for (std::uint64_t n = 1; n <= 50; ++n) EXPECT_EQ(art.s_of_n[n], n);
  for (bool b : art.bits) EXPECT_FALSE(b);
}

TEST(LimitWitness, AgreesWithSettledWitnessRun) {
  auto a = streams::from_set(sets::omega(), Schedule::linear(1, 100));
  Universe u = Universe::make(200, 1u << 17);
  LimitApprox g{[](std::uint64_t, std::uint64_t s) { return s < 100 ? kNever : 0; }, "settles at 100"};
  auto lim = limit_witness_subset(a, u, g, 1u << 15);
  auto eff = effective_density1_subset(a, u, [](std::uint64_t) { return 0; }, 1u << 15);
  // Once every n ≤ k² has s(n) past the settling stage the two constructions coincide.
  for (std::uint64_t k = 10; k < 200; ++k) EXPECT_EQ(lim.bits[k], eff.bits[k]) << k;
  EXPECT_TRUE(all_hold(lim));
}

TEST(Delta2Lower, Examples) {
  auto om = delta2_lower_subset(streams::from_set(sets::omega(), Schedule::instant(), 1u << 20),
                                Universe::make(200, 1u << 17), seqs::constant(Rational(1)), LimitApprox::constant(0),
                                1u << 15);
  for (bool b : om.bits) EXPECT_TRUE(b);

  auto ev = delta2_lower_subset(streams::from_set(sets::evens(), Schedule::instant(), 1u << 20),
                                Universe::make(300, 1u << 17), seqs::constant(ratio(1, 2)), LimitApprox::constant(0),
                                1u << 15);
  EXPECT_TRUE(all_hold(ev));

  auto delayed = delta2_lower_subset(streams::from_set(sets::evens(), Schedule::linear(2, 0)),
                                     Universe::make(300, 1u << 18), seqs::constant(ratio(1, 2)),
                                     LimitApprox::constant(0), 1u << 12);
  EXPECT_TRUE(all_hold(delayed));
  for (std::uint64_t n = 1; n <= 300; ++n) EXPECT_GE(delayed.s_of_n[n], n);
  for (std::uint64_t k = 0; k < 300; ++k) {
    if (delayed.bits[k]) { EXPECT_EQ(k % 2, 0u); }
  }
}

TEST(Approximators, Deterministic) {
  auto s = streams::from_set(sets::rk_union({0, 2}), Schedule::burst(5));
  Universe u = Universe::make(2000, 4000);
  auto a1 = barzdin_subset(s, u, ratio(1, 3));
  auto a2 = barzdin_subset(s, u, ratio(1, 3));
  EXPECT_EQ(a1.bits, a2.bits);
  EXPECT_EQ(pairs(a1), pairs(a2));
}
