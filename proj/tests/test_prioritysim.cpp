#include <gtest/gtest.h>

#include <random>

#include "density/prioritysim.hpp"

using namespace density;

namespace {

const Universe kSmall = Universe::make(64, 64);

CEStream instant(const SetOracle& s) { return streams::from_set(s); }

std::vector<std::uint64_t> members(const BuildArtifact& a) {
  std::vector<std::uint64_t> v;
  for (std::uint64_t x = 0; x < a.n_max; ++x)
    if (a.in(x)) v.push_back(x);
  return v;
}

const TraceEvent* first_event(const BuildArtifact& a, const std::string& kind) {
  for (const auto& ev : a.trace)
    if (ev.kind == kind) return &ev;
  return nullptr;
}

std::size_t count_events(const std::vector<TraceEvent>& t, const std::string& kind) {
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [&](const TraceEvent& e) { return e.kind == kind; }));
}

std::vector<StageTable> tables(const std::vector<CEStream>& ws, const Universe& u) {
  std::vector<StageTable> t;
  for (const auto& w : ws) t.push_back(w.materialize(u.n_max, u.stage_max));
  return t;
}

JumpApprox jump_from(std::function<bool(std::uint64_t, std::uint64_t)> g,
                     std::function<std::optional<std::uint64_t>(std::uint64_t, std::uint64_t)> use) {
  return {std::move(g), std::move(use), "fixture"};
}

}  // namespace

TEST(Regions, HelpersAgreeWithBruteForce) {
  for (unsigned k = 0; k < 6; ++k)
    for (std::uint64_t n = 0; n < 300; ++n) {
      std::uint64_t below = 0, first = kNever;
      for (std::uint64_t x = 1; x < n; ++x) below += in_rk(x, k);
      for (std::uint64_t x = std::max<std::uint64_t>(n, 1); first == kNever; ++x)
        if (in_rk(x, k)) first = x;
      ASSERT_EQ(detail::rk_count_below(k, n), below) << k << " " << n;
      ASSERT_EQ(detail::rk_first_at_least(k, n), first) << k << " " << n;
    }
  EXPECT_EQ(detail::rk_range(1, 0, 20), (std::vector<std::uint64_t>{2, 6, 10, 14, 18}));
  EXPECT_EQ(detail::pair_code(0, 0), 0u);
  EXPECT_EQ(detail::pair_code(1, 0), 1u);
  EXPECT_EQ(detail::pair_code(0, 1), 2u);
}

TEST(DiagonalUnion, Examples) {
  auto u = Universe::make(30, 4);
  auto a = diagonal_union_build({streams::from_set(sets::omega()), streams::empty()}, u);
  EXPECT_TRUE(a.in(1));
  for (std::uint64_t x = 2; x < 6; ++x) EXPECT_FALSE(a.in(x));
  EXPECT_FALSE(a.in(0));

  auto none = diagonal_union_build({streams::empty(), streams::empty()}, u);
  EXPECT_TRUE(members(none).empty());

  auto b = diagonal_union_build({streams::empty(), instant(sets::omega()), instant(sets::omega())}, u);
  for (std::uint64_t x = 2; x < 24; ++x) EXPECT_TRUE(b.in(x)) << x;
  EXPECT_FALSE(b.in(1));
  EXPECT_FALSE(b.in(24));
  EXPECT_TRUE(b.all_hold());
  EXPECT_THROW(diagonal_union_build({}, u), InvalidArgument);
}

TEST(DiagonalUnion, CapTruncatesRoster) {
  std::vector<CEStream> ws(11, instant(sets::omega()));
  auto a = diagonal_union_build(ws, Universe::make(100, 1));
  EXPECT_TRUE(a.has_diagnostic("RosterTruncated"));
  EXPECT_EQ(a.marks.size(), kDefaultBlockCap + 1);
}

TEST(DiagonalUnion, MutationDetected) {
  auto u = Universe::make(200, 10);
  std::vector<CEStream> ws{instant(sets::evens()), instant(sets::odds()), instant(sets::multiples(3)), instant(sets::omega())};
  auto a = diagonal_union_build(ws, u);
  ASSERT_TRUE(verify_diagonal_union(a, tables(ws, u)).ok);
  auto bad = a;
  bad.entry[10] = bad.entry[10] == kNever ? 0 : kNever;
  EXPECT_FALSE(verify_diagonal_union(bad, tables(ws, u)).ok);
}

TEST(Nonapprox, Examples) {
  auto u = Universe::make(200, 10);
  auto a = nonapprox_build({instant(sets::omega()), streams::empty()}, u);
  for (auto x : detail::rk_range(0, 0, 199)) EXPECT_TRUE(a.in(x));
  for (auto x : detail::rk_range(1, 0, 199)) EXPECT_FALSE(a.in(x));
  EXPECT_EQ(a.outcomes[0].witness, kNever);
  EXPECT_EQ(a.outcomes[1].witness, 2u);
  EXPECT_EQ(a.outcomes[1].outcome.rfind("Case 2", 0), 0u);

  auto ev = nonapprox_build({instant(sets::evens())}, u);
  EXPECT_EQ(ev.outcomes[0].witness, 1u);
  EXPECT_TRUE(members(ev).empty());
}

TEST(Nonapprox, RuleOracleOnRandomStreams) {
  std::mt19937_64 rng(11);
  auto u = Universe::make(500, 40);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CEStream> ws;
    for (int e = 0; e < 4; ++e) {
      // cover a random-length initial run of R_e, then a random tail
      std::uint64_t cut = rng() % 300;
      std::vector<bool> bits(500);
      for (std::uint64_t x = 0; x < 500; ++x) bits[x] = x < cut || rng() % 3 == 0;
      ws.push_back(streams::from_set(sets::explicit_bits(bits), Schedule::linear(1, rng() % 5), 500));
    }
    auto a = nonapprox_build(ws, u);
    ASSERT_TRUE(a.all_hold());
    auto t = tables(ws, u);
    for (std::uint64_t x = 1; x < 500; ++x) {
      unsigned e = rk_index(x);
      bool want = e < 4;
      std::uint64_t stage = 0;
      for (std::uint64_t y = 1; want && y <= x; ++y)
        if (in_rk(y, e)) {
          if (!t[e].in_final(y)) want = false;
          else stage = std::max(stage, t[e].entry(y));
        }
      ASSERT_EQ(a.in(x), want) << x;
      if (want) {
        ASSERT_EQ(a.entry[x], stage);
      }
    }
  }
}

TEST(Nononzero, IntervalChoiceIsTheLeastPair) {
  for (unsigned e = 0; e < 6; ++e)
    for (std::uint64_t a = 0; a < 400; ++a) {
      Rational floor = Rational(1) - pow2_inv(e);
      std::uint64_t K = std::uint64_t{1} << (e + 1);
      std::uint64_t j = 1;
      for (;; ++j) {
        std::uint64_t b = (K - 1) * j, c = K * j;
        if (b >= a && ratio(b - a + 1, c - a + 1) >= floor) break;
      }
      auto bc = nononzero_bc(e, a);
      ASSERT_TRUE(bc);
      ASSERT_EQ(bc->first, (K - 1) * j) << e << " " << a;
      ASSERT_EQ(bc->second, K * j);
      ASSERT_EQ(ratio(bc->first, bc->second), Rational(1) - pow2_inv(e + 1));
    }
}

TEST(Nononzero, AlwaysOneFinalizes) {
  auto a = nononzero_build({deciders::constant(true)}, kSmall);
  const auto* ap = first_event(a, "appoint");
  ASSERT_NE(ap, nullptr);
  EXPECT_EQ(ap->num("a"), 0u);
  EXPECT_EQ(ap->num("b"), 1u);
  EXPECT_EQ(ap->num("c"), 2u);
  const auto* fin = first_event(a, "finalize");
  ASSERT_NE(fin, nullptr);
  EXPECT_EQ(fin->num("x"), 2u);
  EXPECT_FALSE(a.in(2));
  EXPECT_TRUE(a.in(0) && a.in(1));
  EXPECT_EQ(count_events(a.trace, "appoint"), 1u);
  EXPECT_EQ(a.outcomes[0].witness, 2u);
  EXPECT_TRUE(a.all_hold());
}

TEST(Nononzero, AlwaysZeroCompletesWithTrivialIdentity) {
  auto a = nononzero_build({deciders::constant(false), deciders::constant(false)}, Universe::make(400, 200));
  EXPECT_EQ(count_events(a.trace, "finalize"), 0u);
  EXPECT_GT(count_events(a.trace, "complete"), 4u);
  std::size_t identities = 0;
  for (const auto& c : a.certificates)
    if (c.family == "nononzero:identity") {
      ++identities;
      EXPECT_EQ(c.lhs, 0);
      EXPECT_EQ(c.rhs, 0);
    }
  EXPECT_GT(identities, 4u);
  // every completed interval is wholly in A
  for (const auto& ev : a.trace)
    if (ev.kind == "appoint" && a.entry[ev.num("c")] != kNever) {
      for (auto x = ev.num("a"); x <= ev.num("c"); ++x) {
        EXPECT_TRUE(a.in(x));
      }
    }
}

TEST(Nononzero, NeverConverges) {
  auto a = nononzero_build({deciders::never()}, kSmall);
  EXPECT_EQ(count_events(a.trace, "appoint"), 1u);
  EXPECT_EQ(count_events(a.trace, "finalize"), 0u);
  EXPECT_EQ(a.outcomes[0].outcome, "phi_e partial on window");
  EXPECT_TRUE(a.in(0) && a.in(1));
  EXPECT_FALSE(a.in(2));
}

TEST(Nononzero, FiveDeciderRosterIdentityFromBits) {
  std::vector<PartialDecider> roster{deciders::constant(false), deciders::restrict_to(sets::multiples(50)),
                                     deciders::delayed(sets::below(40), 3), deciders::constant(true, 60),
                                     deciders::never()};
  auto u = Universe::make(20000, 3000);
  auto a = nononzero_build(roster, u);
  ASSERT_TRUE(a.all_hold());
  ASSERT_TRUE(verify_nononzero(a, roster).ok);
  // independent recomputation of the identity on each completed interval
  std::size_t checked = 0;
  for (const auto& ev : a.trace) {
    if (ev.kind != "appoint") continue;
    std::uint64_t e = ev.num("e"), b = ev.num("b"), c = ev.num("c");
    bool completed = false;
    for (const auto& f : a.trace)
      if (f.kind == "complete" && f.num("e") == e && f.num("j") == ev.num("j")) completed = true;
    if (!completed) continue;
    std::uint64_t r = 0, rc = 0;
    for (std::uint64_t x = 0; x <= c; ++x) {
      bool in_s = roster[e].eval(x, u.stage_max) == Tri::One;
      rc += in_s;
      if (x <= b) r += in_s;
    }
    ASSERT_EQ(r, rc);
    Rational lhs = ratio(r, b) - ratio(rc, c), rhs = ratio(r, b) * pow2_inv(static_cast<unsigned>(e + 1));
    ASSERT_EQ(lhs, rhs);
    ++checked;
  }
  EXPECT_GT(checked, 3u);
  EXPECT_EQ(a.outcomes[3].outcome.rfind("finalized", 0), 0u);
  EXPECT_EQ(a.outcomes[4].outcome, "phi_e partial on window");
}

TEST(Nononzero, RatioUnrealizable) {
  auto a = nononzero_build({deciders::constant(false), deciders::constant(false), deciders::constant(false)},
                           Universe::make(12, 50));
  EXPECT_TRUE(a.has_diagnostic("RatioUnrealizable"));
}

TEST(Nononzero, MutationsDetected) {
  std::vector<PartialDecider> roster{deciders::constant(false), deciders::constant(true, 5)};
  auto a = nononzero_build(roster, Universe::make(300, 100));
  auto flip = a;
  flip.entry[1] = kNever;
  EXPECT_FALSE(verify_nononzero(flip, roster).ok);
  auto moved = a;
  for (auto& ev : moved.trace)
    if (ev.kind == "appoint" && ev.num("j") == 1) {
      for (auto& [k, v] : ev.fields)
        if (k == "b") v = std::get<std::uint64_t>(v) + 1;
      break;
    }
  EXPECT_FALSE(verify_nononzero(moved, roster).ok);
}

TEST(High, EmptyW0KeepsOneInterval) {
  auto a = high_build({streams::empty()}, kSmall);
  const auto* ap = first_event(a, "appoint");
  ASSERT_NE(ap, nullptr);
  EXPECT_EQ(detail::event_elements(*ap), (std::vector<std::uint64_t>{1, 3}));
  EXPECT_EQ(count_events(a.trace, "appoint"), 1u);
  EXPECT_EQ(count_events(a.trace, "dump"), 0u);
  // A = [1, 64) minus {1, 3}
  for (std::uint64_t x = 0; x < 64; ++x) EXPECT_EQ(a.in(x), x != 0 && x != 1 && x != 3) << x;
  auto counts = a.counts();
  EXPECT_LT(ratio(counts[3], 3), Rational(3, 4));
  EXPECT_TRUE(a.all_hold());
}

TEST(High, CofinalW0DumpsEveryInterval) {
  auto u = Universe::make(5000, 5000);
  std::vector<CEStream> ws{streams::from_set(sets::omega(), Schedule::linear(1, 0), 5000)};
  auto a = high_build(ws, u);
  EXPECT_GT(count_events(a.trace, "dump"), 4u);
  std::map<std::uint64_t, std::vector<std::uint64_t>> intervals;
  for (const auto& ev : a.trace)
    if (ev.kind == "appoint") intervals[ev.num("k")] = detail::event_elements(ev);
  for (const auto& ev : a.trace) {
    if (ev.kind != "dump") continue;
    for (auto x : intervals[ev.num("k")]) EXPECT_TRUE(a.in(x)) << x;
  }
  EXPECT_TRUE(a.all_hold());
  EXPECT_TRUE(verify_high(a, tables(ws, u)).ok);
}

TEST(High, EmptyRosterFillsEveryRegion) {
  auto a = high_build({}, kSmall);
  for (std::uint64_t x = 1; x < 64; ++x) EXPECT_TRUE(a.in(x));
  EXPECT_FALSE(a.in(0));
}

TEST(High, RandomRostersCertifyAndReplay) {
  std::mt19937_64 rng(5);
  auto u = Universe::make(3000, 3000);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<CEStream> ws;
    for (int n = 0; n < 3; ++n) {
      std::map<std::uint64_t, std::vector<std::uint64_t>> script;
      std::uint64_t k = 1 + rng() % 6;
      for (std::uint64_t i = 0; i < k; ++i) script[rng() % 2000].push_back(rng() % 2500 + i * 2500);
      ws.push_back(streams::scripted(script));
    }
    auto a = high_build(ws, u), b = high_build(ws, u);
    ASSERT_TRUE(a.all_hold());
    ASSERT_EQ(a.entry, b.entry);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    ASSERT_TRUE(verify_high(a, tables(ws, u)).ok);
  }
}

TEST(High, MutationDetected) {
  std::vector<CEStream> ws{streams::empty(), instant(sets::below(10))};
  auto u = Universe::make(500, 500);
  auto a = high_build(ws, u);
  auto bad = a;
  bad.entry[5] = kNever;
  EXPECT_FALSE(verify_high(bad, tables(ws, u)).ok);
  bad = a;
  bad.entry[3] = 7;  // a restrained element sneaks in
  EXPECT_FALSE(verify_high(bad, tables(ws, u)).ok);
}

TEST(Nonlow, GuessZeroIsCaseOne) {
  auto jump = jump_from([](std::uint64_t, std::uint64_t) { return false; },
                        [](std::uint64_t, std::uint64_t) { return std::optional<std::uint64_t>(); });
  auto a = nonlow_build(streams::empty(), jump, {instant(sets::omega())}, {}, Universe::make(200, 200));
  EXPECT_EQ(a.outcomes[0].outcome, "Case 1");
  for (auto v : a.series.at(g_row_key(0, 0))) EXPECT_EQ(v, 0u);
  EXPECT_EQ(count_events(a.trace, "appoint"), 0u);
  // no restraint: every positive number entered at its own stage
  for (std::uint64_t x = 1; x < 200; ++x) EXPECT_EQ(a.entry[x], x);
}

TEST(Nonlow, PermanentUncoveredIntervalIsCaseTwo) {
  auto jump = jump_from([](std::uint64_t, std::uint64_t s) { return s >= 5; },
                        [](std::uint64_t, std::uint64_t) { return std::optional<std::uint64_t>(3); });
  auto a = nonlow_build(streams::empty(), jump, {streams::empty()}, {}, Universe::make(400, 400));
  EXPECT_EQ(a.outcomes[0].outcome, "Case 2 (W_e misses I)");
  EXPECT_EQ(count_events(a.trace, "appoint"), 1u);
  EXPECT_EQ(first_event(a, "appoint")->stage, 5u);
  for (auto v : a.series.at(g_row_key(0, 0))) EXPECT_EQ(v, 0u);
  EXPECT_TRUE(a.all_hold());
}

TEST(Nonlow, RepeatedCancellationsAccumulateSuccesses) {
  // guess(0,s) = 1 on the first half of every 40-stage cycle; C enumerates k at stage 40k + 25 < use = s
  auto jump = jump_from([](std::uint64_t, std::uint64_t s) { return s % 40 < 20; },
                        [](std::uint64_t, std::uint64_t s) { return std::optional<std::uint64_t>(s); });
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  for (std::uint64_t k = 0; k < 6; ++k) script[40 * k + 25] = {k};
  auto c = streams::scripted(script, "C");
  std::vector<CEStream> ws{instant(sets::omega())};
  auto u = Universe::make(40000, 240);
  auto a = nonlow_build(c, jump, ws, {}, u);
  EXPECT_EQ(a.outcomes[0].outcome, "Case 3");
  EXPECT_EQ(count_events(a.trace, "cancel"), 6u);
  for (const auto& ev : a.trace) {
    if (ev.kind == "cancel") {
      EXPECT_TRUE(std::get<bool>(*ev.get("successful")));
    }
    if (ev.kind == "enumerate" && ev.str("permit") == "stream") {
      EXPECT_LE(ev.num("y"), detail::event_elements(ev).front());
      for (auto x : detail::event_elements(ev)) EXPECT_TRUE(a.in(x));
    }
  }
  auto rep = verify_nonlow(a, c.materialize(u.n_max, u.stage_max), tables(ws, u), jump, {});
  EXPECT_TRUE(rep.ok);
  auto row = a.series.at(g_row_key(0, 0));
  EXPECT_EQ(row[0], 1u);
  EXPECT_EQ(row[25], 0u);
  EXPECT_EQ(row[40], 1u);
}

TEST(Nonlow, UnsuccessfulCyclesAreCaseFour) {
  auto jump = jump_from([](std::uint64_t, std::uint64_t s) { return s % 40 < 20; },
                        [](std::uint64_t, std::uint64_t s) { return std::optional<std::uint64_t>(s); });
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  for (std::uint64_t k = 0; k < 5; ++k) script[40 * k + 25] = {k};
  auto a = nonlow_build(streams::scripted(script), jump, {streams::empty()}, {}, Universe::make(40000, 230));
  EXPECT_EQ(a.outcomes[0].outcome, "Case 4");
}

TEST(Nonlow, SeveralPairsStayInTheirRegions) {
  auto jump = jump_from([](std::uint64_t i, std::uint64_t s) { return (s + 7 * i) % 30 < 15; },
                        [](std::uint64_t, std::uint64_t s) { return std::optional<std::uint64_t>(s); });
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  for (std::uint64_t k = 0; k < 8; ++k) script[30 * k + 20] = {k};
  auto c = streams::scripted(script);
  std::vector<CEStream> ws{instant(sets::omega()), instant(sets::evens())};
  auto u = Universe::make(60000, 260);
  NonlowParams p;
  p.n_jump = 2;
  auto a = nonlow_build(c, jump, ws, p, u);
  EXPECT_EQ(a.outcomes.size(), 4u);
  EXPECT_TRUE(verify_regions(a.trace).ok);
  EXPECT_TRUE(verify_permissions(a.trace, c.materialize(u.n_max, u.stage_max), "A").ok);
  EXPECT_TRUE(a.all_hold());
}

TEST(Nonlow, ContractAndMutations) {
  auto bad_jump = jump_from([](std::uint64_t, std::uint64_t) { return true; },
                            [](std::uint64_t, std::uint64_t) { return std::optional<std::uint64_t>(); });
  EXPECT_THROW(nonlow_build(streams::empty(), bad_jump, {streams::empty()}, {}, kSmall), ContractViolated);

  auto jump = jump_from([](std::uint64_t, std::uint64_t s) { return s % 40 < 20; },
                        [](std::uint64_t, std::uint64_t s) { return std::optional<std::uint64_t>(s); });
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  for (std::uint64_t k = 0; k < 3; ++k) script[40 * k + 25] = {k};
  auto c = streams::scripted(script);
  std::vector<CEStream> ws{instant(sets::omega())};
  auto u = Universe::make(20000, 120);
  auto a = nonlow_build(c, jump, ws, {}, u);
  auto ct = c.materialize(u.n_max, u.stage_max);
  auto forged = a;
  for (auto& ev : forged.trace)
    if (ev.kind == "enumerate" && ev.str("permit") == "stream") {
      for (auto& [k, v] : ev.fields)
        if (k == "y") v = std::uint64_t{1000};
      break;
    }
  EXPECT_FALSE(verify_nonlow(forged, ct, tables(ws, u), jump, {}).ok);
  auto g = a;
  g.series[g_row_key(0, 0)][50] ^= 1;
  EXPECT_FALSE(verify_nonlow(g, ct, tables(ws, u), jump, {}).ok);
}

TEST(GenericNotCoarse, NoPermissions) {
  auto r = generic_not_coarse_build(streams::empty(), {deciders::constant(false)}, Universe::make(500, 500));
  EXPECT_TRUE(members(r.a0).empty());
  EXPECT_EQ(count_events(r.a1.trace, "split"), 0u);
  EXPECT_GT(count_events(r.a1.trace, "realized"), 0u);
  EXPECT_EQ(r.a1.outcomes[0].outcome, "no permitted interval on window");
  EXPECT_TRUE(r.a1.all_hold());
}

TEST(GenericNotCoarse, ZeroDeciderLandsInA1) {
  auto u = Universe::make(4000, 4000);
  auto b = streams::from_set(sets::omega(), Schedule::linear(1, 0), 4000);
  auto r = generic_not_coarse_build(b, {deciders::constant(false)}, u);
  EXPECT_GT(count_events(r.a1.trace, "split"), 0u);
  EXPECT_TRUE(members(r.a0).empty());
  std::map<std::uint64_t, std::vector<std::uint64_t>> ivs;
  for (const auto& ev : r.a1.trace)
    if (ev.kind == "appoint") ivs[ev.num("j")] = detail::event_elements(ev);
  for (const auto& ev : r.a1.trace)
    if (ev.kind == "split") {
      for (auto x : ivs[ev.num("j")]) {
        EXPECT_TRUE(r.a1.in(x));
      }
    }
  EXPECT_TRUE(verify_generic_not_coarse(r, b.materialize(u.n_max, u.stage_max), {deciders::constant(false)}).ok);
}

TEST(GenericNotCoarse, OneDeciderSinglePermissionLandsInA0) {
  auto u = Universe::make(500, 500);
  auto b = streams::scripted({{3, {0}}});
  auto r = generic_not_coarse_build(b, {deciders::constant(true)}, u);
  // the single B-change at stage 3 permits every interval realized by then
  std::map<std::uint64_t, std::vector<std::uint64_t>> ivs;
  for (const auto& ev : r.a1.trace)
    if (ev.kind == "appoint") ivs[ev.num("j")] = detail::event_elements(ev);
  std::size_t splits = 0;
  for (const auto& ev : r.a1.trace) {
    if (ev.kind != "split") continue;
    EXPECT_EQ(ev.stage, 3u);
    ++splits;
    for (auto x : ivs[ev.num("j")]) {
      EXPECT_TRUE(r.a0.in(x));
      EXPECT_FALSE(r.a1.in(x));
    }
  }
  EXPECT_GE(splits, 1u);
  EXPECT_LT(splits, ivs.size());
  for (std::uint64_t x = 0; x < 500; ++x) EXPECT_FALSE(r.a0.in(x) && r.a1.in(x));
  EXPECT_TRUE(r.a1.all_hold());
}

TEST(GenericNotCoarse, MixedRosterAndMutation) {
  auto u = Universe::make(6000, 3000);
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  for (std::uint64_t k = 0; k < 20; ++k) script[100 * k + 37] = {k * 3};
  auto b = streams::scripted(script);
  std::vector<PartialDecider> roster{deciders::delayed(sets::multiples(3), 2), deciders::restrict_to(sets::evens()),
                                     deciders::never()};
  auto r = generic_not_coarse_build(b, roster, u);
  auto bt = b.materialize(u.n_max, u.stage_max);
  ASSERT_TRUE(verify_generic_not_coarse(r, bt, roster).ok);
  EXPECT_EQ(r.a1.outcomes[2].outcome, "phi_e partial on window");
  auto bad = r;
  for (std::uint64_t x = 0; x < u.n_max; ++x)
    if (bad.a1.in(x)) {
      bad.a0.entry[x] = bad.a1.entry[x];
      break;
    }
  EXPECT_FALSE(verify_generic_not_coarse(bad, bt, roster).ok);
}
