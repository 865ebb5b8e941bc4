#pragma once

// Command layer behind densitytool: a JSON run configuration declaring sets, streams and
// deciders from a fixed vocabulary, construction dispatch, artifact emission, and an
// independent re-verification pass that reads artifacts back from disk.
//
// Exit codes: 0 success, 2 configuration, 3 budget, 4 artifact integrity (including an
// artifact whose certificates fail re-verification).

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "density/approximators.hpp"
#include "density/artifact_io.hpp"
#include "density/builders.hpp"
#include "density/genericity.hpp"
#include "density/metrics.hpp"
#include "density/prioritysim.hpp"
#include "density/profile.hpp"

namespace density::cli {

using io::Json;

enum ExitCode : int { kOk = 0, kConfig = 2, kBudget = 3, kIntegrity = 4 };

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// field access

namespace detail {

inline const Json& need(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing field '" + key + "'");
  return j.at(key);
}

inline std::uint64_t u64(const Json& j, const std::string& key, std::optional<std::uint64_t> def = std::nullopt) {
  if (!j.is_object() || !j.contains(key)) {
    if (def) return *def;
    throw ConfigError("missing field '" + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError("field '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<std::uint64_t> u64s(const Json& j, const std::string& key) {
  const auto& v = need(j, key);
  if (!v.is_array()) throw ConfigError("field '" + key + "' must be an array");
  std::vector<std::uint64_t> out;
  for (const auto& x : v) {
    if (!x.is_number_unsigned()) throw ConfigError("field '" + key + "' must hold non-negative integers");
    out.push_back(x.get<std::uint64_t>());
  }
  return out;
}

inline Rational rational(const Json& v, const std::string& what) {
  if (v.is_number_integer()) return Rational(BigInt(v.get<std::int64_t>()));
  if (!v.is_string()) throw ConfigError(what + " must be a rational string such as \"1/4\"");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline Rational rational(const Json& j, const std::string& key, std::optional<Rational> def) {
  if (!j.is_object() || !j.contains(key)) {
    if (def) return *def;
    throw ConfigError("missing field '" + key + "'");
  }
  return rational(j.at(key), "field '" + key + "'");
}

inline std::string str(const Json& j, const std::string& key, std::optional<std::string> def = std::nullopt) {
  if (!j.is_object() || !j.contains(key)) {
    if (def) return *def;
    throw ConfigError("missing field '" + key + "'");
  }
  if (!j.at(key).is_string()) throw ConfigError("field '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

inline bool flag(const Json& j, const std::string& key, bool def) {
  if (!j.is_object() || !j.contains(key)) return def;
  const auto& v = j.at(key);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_unsigned()) return v.get<std::uint64_t>() != 0;
  throw ConfigError("field '" + key + "' must be a boolean");
}

/// Safe file-name fragment of a label.
inline std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? "_" : s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// configuration

struct RunConfig {
  /// The document as read; embedded verbatim in every artifact.
  Json raw;
  Universe universe{1, 1};
  std::uint64_t seed = 0;
  std::vector<std::string> set_order;
  std::map<std::string, SetOracle> sets;
  std::map<std::string, CEStream> streams;
  std::map<std::string, PartialDecider> deciders;
  std::vector<std::string> roster_streams, roster_deciders;
  std::string out_dir;

  const SetOracle& set(const std::string& label) const {
    auto it = sets.find(label);
    if (it == sets.end()) throw ConfigError("unknown set '" + label + "'");
    return it->second;
  }
  const CEStream& stream(const std::string& label) const {
    auto it = streams.find(label);
    if (it == streams.end()) throw ConfigError("unknown stream '" + label + "'");
    return it->second;
  }
  const PartialDecider& decider(const std::string& label) const {
    auto it = deciders.find(label);
    if (it == deciders.end()) throw ConfigError("unknown decider '" + label + "'");
    return it->second;
  }
  std::vector<CEStream> roster() const {
    std::vector<CEStream> v;
    for (const auto& l : roster_streams) v.push_back(stream(l));
    return v;
  }
  std::vector<PartialDecider> decider_roster() const {
    std::vector<PartialDecider> v;
    for (const auto& l : roster_deciders) v.push_back(decider(l));
    return v;
  }
  const Json& section(const std::string& key) const { return detail::need(raw, key); }
};

namespace detail {

inline SetOracle parity_set(const Json& j) {
  auto p = str(j, "parity", "even");
  if (p == "even") return sets::evens();
  if (p == "odd") return sets::odds();
  throw ConfigError("parity must be \"even\" or \"odd\"");
}

inline SetOracle parse_set(const Json& j, const RunConfig& cfg, std::uint64_t index) {
  auto kind = str(j, "kind");
  auto label = str(j, "label");
  SetOracle s = [&]() -> SetOracle {
    if (kind == "empty") return sets::empty();
    if (kind == "omega") return sets::omega();
    if (kind == "parity") return parity_set(j);
    if (kind == "residue") return sets::residue_union(u64(j, "modulus"), u64s(j, "residues"));
    if (kind == "multiples") return sets::multiples(u64(j, "k"));
    if (kind == "below") return sets::below(u64(j, "k"));
    if (kind == "at_least") return sets::at_least(u64(j, "k"));
    if (kind == "explicit") return sets::from_members(u64s(j, "members"));
    if (kind == "powers_of_two") return sets::powers_of_two();
    if (kind == "rk") {
      auto ks = u64s(j, "indices");
      std::vector<unsigned> idx;
      for (auto k : ks) {
        if (k > 62) throw ConfigError("rk index " + std::to_string(k) + " exceeds 62");
        idx.push_back(static_cast<unsigned>(k));
      }
      return sets::rk_union(idx, flag(j, "include_zero", false));
    }
    if (kind == "complement") return sets::complement(cfg.set(str(j, "of")));
    if (kind == "union" || kind == "intersection" || kind == "difference" || kind == "symmetric_difference") {
      const auto& of = need(j, "of");
      if (!of.is_array() || of.size() != 2) throw ConfigError(kind + " needs \"of\": [label, label]");
      const auto& a = cfg.set(of[0].get<std::string>());
      const auto& b = cfg.set(of[1].get<std::string>());
      if (kind == "union") return sets::union_of(a, b);
      if (kind == "intersection") return sets::intersection(a, b);
      if (kind == "difference") return sets::difference(a, b);
      return sets::symmetric_difference(a, b);
    }
    if (kind == "random") {
      // Bernoulli(p) bits on [0, n_max) from mt19937_64 seeded by (seed, declaration index).
      Rational p = rational(j, "p", std::nullopt);
      if (p < 0 || p > 1 || den_of(p) > (BigInt(1) << 32)) throw ConfigError("random set: p must lie in [0,1] with denominator <= 2^32");
      auto num = static_cast<std::uint64_t>(num_of(p)), den = static_cast<std::uint64_t>(den_of(p));
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(index)};
      std::mt19937_64 rng(seq);
      std::vector<bool> bits(cfg.universe.n_max);
      for (auto&& b : bits) b = rng() % den < num;
      return sets::explicit_bits(std::move(bits));
    }
    if (kind == "metered") {
      // Membership of `set`, charging `steps` rule steps per query against `budget`.
      auto base = cfg.set(str(j, "set"));
      auto steps = u64(j, "steps");
      return sets::rule(label, [base, steps](std::uint64_t n, StepMeter& m) {
        m.charge(steps);
        return base.contains(n);
      }, u64(j, "budget"));
    }
    throw ConfigError("unknown set kind '" + kind + "'");
  }();
  return s.relabeled(label);
}

inline Schedule parse_schedule(const Json& j) {
  if (j.is_null()) return Schedule::instant();
  auto kind = str(j, "kind");
  if (kind == "instant") return Schedule::instant();
  if (kind == "linear") return Schedule::linear(u64(j, "a", 1), u64(j, "b", 0));
  if (kind == "burst") return Schedule::burst(u64(j, "period"));
  if (kind == "threshold-delay") return Schedule::threshold_delay(u64(j, "threshold"), u64(j, "delay"));
  throw ConfigError("unknown schedule kind '" + kind + "'");
}

inline CEStream parse_stream(const Json& j, const RunConfig& cfg) {
  auto kind = str(j, "kind");
  auto label = str(j, "label");
  Schedule sched = parse_schedule(j.contains("schedule") ? j.at("schedule") : Json());
  std::uint64_t cap = u64(j, "cap", std::uint64_t{1} << 40);
  if (kind == "empty") return streams::from_set(sets::empty(), Schedule::instant(), 0, label);
  if (kind == "set") return streams::from_set(cfg.set(str(j, "set")), sched, cap, label);
  if (kind == "constant")
    return streams::from_set(flag(j, "value", true) ? sets::omega() : sets::empty(), sched, cap, label);
  if (kind == "parity") return streams::from_set(parity_set(j), sched, cap, label);
  if (kind == "residue") return streams::from_set(sets::residue_union(u64(j, "modulus"), u64s(j, "residues")), sched, cap, label);
  if (kind == "threshold-delay")
    return streams::from_set(cfg.set(str(j, "set")), Schedule::threshold_delay(u64(j, "threshold"), u64(j, "delay")), cap,
                             label);
  if (kind == "scripted") {
    std::map<std::uint64_t, std::vector<std::uint64_t>> script;
    const auto& sc = need(j, "script");
    if (!sc.is_object()) throw ConfigError("scripted stream needs \"script\": {\"stage\": [elements]}");
    for (const auto& [k, v] : sc.items()) {
      std::uint64_t stage = 0;
      try {
        std::size_t pos = 0;
        stage = std::stoull(k, &pos);
        if (pos != k.size()) throw std::invalid_argument(k);
      } catch (const std::exception&) {
        throw ConfigError("script stage '" + k + "' is not a natural number");
      }
      script[stage] = v.get<std::vector<std::uint64_t>>();
    }
    return streams::scripted(std::move(script), label);
  }
  throw ConfigError("unknown stream kind '" + kind + "'");
}

inline PartialDecider parse_decider(const Json& j, const RunConfig& cfg) {
  auto kind = str(j, "kind");
  std::optional<SetOracle> domain;
  if (j.contains("domain")) domain = cfg.set(str(j, "domain"));
  auto valued = [&](const SetOracle& value) {
    return domain ? deciders::restrict_to(value, domain) : deciders::restrict_to(value);
  };
  if (kind == "constant") return deciders::constant(flag(j, "value", true), u64(j, "halt", 0));
  if (kind == "never") return deciders::never();
  if (kind == "parity") return valued(parity_set(j));
  if (kind == "residue") return valued(sets::residue_union(u64(j, "modulus"), u64s(j, "residues")));
  if (kind == "set") return valued(cfg.set(str(j, "set")));
  if (kind == "threshold-delay") {
    auto t = u64(j, "threshold", 0), d = u64(j, "delay");
    return deciders::from_parts(cfg.set(str(j, "set")), [t, d](std::uint64_t n) { return n < t ? 0 : n + d; },
                                "threshold-delay");
  }
  throw ConfigError("unknown decider kind '" + kind + "'");
}

inline RationalSequence parse_sequence(const Json& j) {
  if (j.is_string() || j.is_number_integer()) return seqs::constant(rational(j, "sequence value"));
  auto kind = str(j, "kind");
  if (kind == "constant") return seqs::constant(rational(j, "q", std::nullopt));
  if (kind == "alternating") return seqs::alternating(rational(j, "a", std::nullopt), rational(j, "b", std::nullopt));
  if (kind == "harmonic") return seqs::harmonic(rational(j, "start", std::nullopt), rational(j, "limit", std::nullopt));
  if (kind == "one_minus_pow2") return seqs::one_minus_pow2();
  if (kind == "listed") {
    std::vector<Rational> v;
    for (const auto& x : need(j, "values")) v.push_back(rational(x, "listed value"));
    if (v.empty()) throw ConfigError("listed sequence needs values");
    return seqs::listed(std::move(v));
  }
  if (kind == "interleave") return seqs::interleave(parse_sequence(need(j, "a")), parse_sequence(need(j, "b")));
  if (kind == "lsp")
    return seqs::lsp_interleave(parse_sequence(need(j, "q")), parse_sequence(need(j, "r")), rational(j, "pivot", std::nullopt));
  throw ConfigError("unknown sequence kind '" + kind + "'");
}

inline StableMonotoneG parse_g(const Json& j) {
  auto kind = str(j, "kind");
  if (kind == "constant") return StableMonotoneG::constant(rational(j, "value", std::nullopt));
  if (kind == "settling") {
    auto h = parse_sequence(need(j, "h"));
    auto delay = u64(j, "delay", 0);
    return StableMonotoneG::settling([h](std::uint64_t n) { return h(n); }, [delay](std::uint64_t n) { return n + delay; },
                                     rational(j, "before", Rational(0)), "settling(" + h.label() + ")");
  }
  throw ConfigError("unknown g kind '" + kind + "'");
}

inline JumpApprox parse_jump(const Json& j) {
  auto kind = str(j, "kind");
  if (kind == "constant") {
    bool g = flag(j, "guess", false);
    auto use = u64(j, "use", 0);
    return {[g](std::uint64_t, std::uint64_t) { return g; },
            [use](std::uint64_t, std::uint64_t) -> std::optional<std::uint64_t> { return use; }, "constant"};
  }
  if (kind == "periodic") {
    // guess(i,s) = [s mod period < on]; use(i,s) = s.
    auto period = u64(j, "period"), on = u64(j, "on");
    if (period == 0) throw ConfigError("periodic jump: period must be >= 1");
    return {[period, on](std::uint64_t, std::uint64_t s) { return s % period < on; },
            [](std::uint64_t, std::uint64_t s) -> std::optional<std::uint64_t> { return s; }, "periodic"};
  }
  if (kind == "settling") {
    // guess(i,s) = [s < flip] xor final; use(i,s) = s.
    auto flip_at = u64(j, "flip"), fin = static_cast<std::uint64_t>(flag(j, "final", true));
    return {[flip_at, fin](std::uint64_t, std::uint64_t s) { return (s < flip_at) != (fin != 0); },
            [](std::uint64_t, std::uint64_t s) -> std::optional<std::uint64_t> { return s; }, "settling"};
  }
  throw ConfigError("unknown jump kind '" + kind + "'");
}

inline Delta2Approx parse_delta2(const Json& j, const RunConfig& cfg) {
  auto b = Delta2Approx::constant(cfg.set(str(j, "set")), u64(j, "window"));
  if (j.contains("flips"))
    for (const auto& f : j.at("flips")) {
      if (!f.is_array() || f.size() != 2) throw ConfigError("flip must be [x, from_stage]");
      b = Delta2Approx::flip(b, f[0].get<std::uint64_t>(), f[1].get<std::uint64_t>());
    }
  return b;
}

inline DoubleParams parse_double_params(const Json& j) {
  DoubleParams p;
  p.n_blocks = u64(j, "n_blocks", 8);
  p.stages = u64(j, "stages", 64);
  p.allow_large = flag(j, "allow_large", false);
  auto scheme = str(j, "scheme", "factorial");
  if (scheme == "geometric") p.scheme = BlockScheme::Geometric;
  else if (scheme != "factorial") throw ConfigError("unknown block scheme '" + scheme + "'");
  return p;
}

template <class Fn>
void each_entry(const Json& raw, const std::string& key, Fn fn) {
  if (!raw.contains(key)) return;
  const auto& arr = raw.at(key);
  if (!arr.is_array()) throw ConfigError("'" + key + "' must be an array");
  std::uint64_t i = 0;
  for (const auto& item : arr) fn(item, i++);
}

}  // namespace detail

inline RunConfig parse_config(const Json& raw) {
  try {
    RunConfig cfg;
    cfg.raw = raw;
    if (!raw.is_object()) throw ConfigError("configuration must be a JSON object");
    const auto& u = detail::need(raw, "universe");
    cfg.universe = Universe::make(detail::u64(u, "n_max"), detail::u64(u, "stage_max"));
    cfg.seed = detail::u64(raw, "seed", 0);
    auto fresh = [&](const std::string& label, const std::string& what) {
      if (cfg.sets.count(label) || cfg.streams.count(label) || cfg.deciders.count(label))
        throw ConfigError("duplicate label '" + label + "' (" + what + ")");
    };
    detail::each_entry(raw, "sets", [&](const Json& j, std::uint64_t i) {
      auto label = detail::str(j, "label");
      fresh(label, "set");
      cfg.sets.emplace(label, detail::parse_set(j, cfg, i));
      cfg.set_order.push_back(label);
    });
    detail::each_entry(raw, "streams", [&](const Json& j, std::uint64_t) {
      auto label = detail::str(j, "label");
      fresh(label, "stream");
      cfg.streams.emplace(label, detail::parse_stream(j, cfg));
    });
    detail::each_entry(raw, "deciders", [&](const Json& j, std::uint64_t) {
      auto label = detail::str(j, "label");
      fresh(label, "decider");
      auto d = detail::parse_decider(j, cfg);
      cfg.deciders.emplace(label, PartialDecider([d](std::uint64_t n, std::uint64_t s) { return d.eval(n, s); }, label));
    });
    if (raw.contains("roster")) {
      const auto& r = raw.at("roster");
      if (r.contains("streams"))
        for (const auto& l : r.at("streams")) cfg.roster_streams.push_back(l.get<std::string>());
      if (r.contains("deciders"))
        for (const auto& l : r.at("deciders")) cfg.roster_deciders.push_back(l.get<std::string>());
      for (const auto& l : cfg.roster_streams) cfg.stream(l);
      for (const auto& l : cfg.roster_deciders) cfg.decider(l);
    }
    if (raw.contains("output")) cfg.out_dir = detail::str(raw.at("output"), "dir", "");
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const InvalidResidue& e) {
    throw ConfigError(e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path) {
  Json raw;
  try {
    raw = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' does not parse: " + e.what());
  }
  return parse_config(raw);
}

// ---------------------------------------------------------------------------
// constructions

/// A construction result in serialized form plus the flat outputs derived from it.
struct Built {
  std::string artifact_kind;  // subset | build | split
  Json artifact;
  std::vector<Certificate> certificates;
  std::vector<TraceEvent> trace;
};

namespace detail {

inline Built built(const SubsetArtifact& a) { return {"subset", io::subset_json(a), a.certificates, {}}; }
inline Built built(const BuildArtifact& a) { return {"build", io::build_json(a), a.certificates, a.trace}; }
inline Built built(const SplitArtifact& a) {
  return {"split", Json{{"a0", io::build_json(a.a0)}, {"a1", io::build_json(a.a1)}}, a.a1.certificates, a.a1.trace};
}

inline LookaheadParams lookahead_params(const Json& c) {
  LookaheadParams p;
  p.mode = LookaheadMode::Fixed;
  p.q = rational(c, "q", std::nullopt);
  p.n0 = u64(c, "n0", 1);
  p.horizon_cap = u64(c, "horizon_cap", kDefaultHorizonCap);
  return p;
}

inline std::vector<StageTable> tables(const std::vector<CEStream>& ws, const Universe& u) {
  std::vector<StageTable> t;
  for (const auto& w : ws) t.push_back(w.materialize(u.n_max, u.stage_max));
  return t;
}

}  // namespace detail

inline Built run_construction(const RunConfig& cfg) {
  const auto& c = cfg.section("construction");
  const auto kind = detail::str(c, "kind");
  const auto& u = cfg.universe;
  try {
    if (kind == "barzdin")
      return detail::built(barzdin_subset(cfg.stream(detail::str(c, "stream")), u, detail::rational(c, "q", std::nullopt)));
    if (kind == "d2_upper")
      return detail::built(d2_upper_subset(cfg.stream(detail::str(c, "stream")), u, detail::parse_sequence(detail::need(c, "q"))));
    if (kind == "lookahead")
      return detail::built(lookahead_run(cfg.stream(detail::str(c, "stream")), u, detail::lookahead_params(c)));
    if (kind == "infsup")
      return detail::built(infsup_build(detail::parse_sequence(detail::need(c, "q")), detail::u64(c, "checkpoints"),
                                        detail::u64(c, "n_max", u.n_max)));
    if (kind == "sigma3")
      return detail::built(sigma3_transfer(detail::parse_delta2(detail::need(c, "b"), cfg), detail::u64(c, "checkpoints"),
                                           detail::u64(c, "stage_budget", u.stage_max), detail::u64(c, "n_max", u.n_max)));
    if (kind == "double")
      return detail::built(double_build(detail::parse_g(detail::need(c, "g")), detail::parse_double_params(c)));
    if (kind == "pi2")
      return detail::built(pi2_density_build(detail::parse_sequence(detail::need(c, "q")), detail::parse_double_params(c)));
    if (kind == "sparse_simple") return detail::built(sparse_simple_build(cfg.roster(), u));
    if (kind == "diagonal_union") return detail::built(diagonal_union_build(cfg.roster(), u, detail::flag(c, "allow_large", false)));
    if (kind == "nonapprox") return detail::built(nonapprox_build(cfg.roster(), u));
    if (kind == "nononzero") return detail::built(nononzero_build(cfg.decider_roster(), u));
    if (kind == "high") return detail::built(high_build(cfg.roster(), u));
    if (kind == "nonlow")
      return detail::built(nonlow_build(cfg.stream(detail::str(c, "c")), detail::parse_jump(detail::need(c, "jump")),
                                        cfg.roster(), NonlowParams{detail::u64(c, "n_jump", 1)}, u));
    if (kind == "generic_not_coarse")
      return detail::built(generic_not_coarse_build(cfg.stream(detail::str(c, "b")), cfg.decider_roster(), u));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed construction parameters: ") + e.what());
  }
  throw ConfigError("unknown construction kind '" + kind + "'");
}

/// Recomputes every certified inequality of a stored document from the raw inputs named by its
/// embedded configuration, and requires the stored certificate list to match the recomputed one.
inline VerifyReport reverify(const Json& doc) {
  RunConfig cfg = parse_config(doc.at("config"));
  const auto& c = cfg.section("construction");
  const auto kind = detail::str(c, "kind");
  const auto& u = cfg.universe;
  const auto& art = doc.at("artifact");
  const auto art_kind = doc.at("artifact_kind").get<std::string>();
  VerifyReport rep;
  std::vector<Certificate> stored;
  auto expect_kind = [&](const char* k) {
    if (art_kind != k) throw io::ArtifactCorrupt("artifact_kind '" + art_kind + "' does not fit construction " + kind);
  };
  try {
    if (kind == "barzdin" || kind == "d2_upper" || kind == "lookahead") {
      expect_kind("subset");
      auto a = io::subset_from(art);
      stored = a.certificates;
      auto table = cfg.stream(detail::str(c, "stream")).materialize(u.n_max, u.stage_max);
      if (a.n_max != u.n_max || a.stage_max != u.stage_max) rep.fail("artifact window differs from the configured universe");
      else if (kind == "barzdin") rep.merge(verify_barzdin(a, table, detail::rational(c, "q", std::nullopt)));
      else if (kind == "d2_upper") rep.merge(verify_d2_upper(a, table, detail::parse_sequence(detail::need(c, "q"))));
      else rep.merge(verify_lookahead(a, table, detail::lookahead_params(c)));
    } else if (kind == "generic_not_coarse") {
      expect_kind("split");
      SplitArtifact s{io::build_from(art.at("a0")), io::build_from(art.at("a1"))};
      stored = s.a1.certificates;
      rep.merge(verify_generic_not_coarse(s, cfg.stream(detail::str(c, "b")).materialize(u.n_max, u.stage_max),
                                          cfg.decider_roster()));
    } else {
      expect_kind("build");
      auto a = io::build_from(art);
      stored = a.certificates;
      bool windowed = kind != "infsup" && kind != "double" && kind != "pi2" && kind != "sigma3";
      if (windowed && (a.n_max != u.n_max || a.stage_max != u.stage_max)) {
        rep.fail("artifact window differs from the configured universe");
      } else if (kind == "infsup") {
        rep.merge(verify_infsup(a, detail::parse_sequence(detail::need(c, "q"))));
      } else if (kind == "sigma3") {
        rep.merge(verify_sigma3(a, detail::parse_delta2(detail::need(c, "b"), cfg), detail::u64(c, "stage_budget", u.stage_max)));
      } else if (kind == "double" || kind == "pi2") {
        auto p = detail::parse_double_params(c);
        rep.merge(verify_double(a));
        auto g = kind == "double" ? detail::parse_g(detail::need(c, "g"))
                                  : pi2_g(detail::parse_sequence(detail::need(c, "q")), p.n_blocks, p.stages);
        const auto& K = a.series.count("k") ? a.series.at("k") : std::vector<std::uint64_t>{};
        for (std::uint64_t n = 1; n <= p.n_blocks; ++n)
          if (n > K.size() || K[n - 1] != round_to_nth(g.eval(n, p.stages), n))
            rep.fail("double: block " + std::to_string(n) + " count differs from the rounded g(n, stages)");
        if (kind == "pi2") rep.merge(verify_pi2(detail::parse_sequence(detail::need(c, "q")), p));
      } else if (kind == "sparse_simple") {
        rep.merge(verify_sparse(a, detail::tables(cfg.roster(), u)));
      } else if (kind == "diagonal_union") {
        rep.merge(verify_diagonal_union(a, detail::tables(cfg.roster(), u)));
      } else if (kind == "nonapprox") {
        rep.merge(verify_nonapprox(a, detail::tables(cfg.roster(), u)));
      } else if (kind == "nononzero") {
        rep.merge(verify_nononzero(a, cfg.decider_roster()));
      } else if (kind == "high") {
        rep.merge(verify_high(a, detail::tables(cfg.roster(), u)));
      } else if (kind == "nonlow") {
        rep.merge(verify_nonlow(a, cfg.stream(detail::str(c, "c")).materialize(u.n_max, u.stage_max),
                                detail::tables(cfg.roster(), u), detail::parse_jump(detail::need(c, "jump")),
                                NonlowParams{detail::u64(c, "n_jump", 1)}));
      } else {
        throw ConfigError("unknown construction kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw io::ArtifactCorrupt(std::string("artifact fields malformed: ") + e.what());
  }
  if (stored.size() != rep.certificates.size()) {
    rep.fail("stored certificate count " + std::to_string(stored.size()) + " differs from recomputed " +
             std::to_string(rep.certificates.size()));
  } else {
    for (std::size_t i = 0; i < stored.size(); ++i)
      if (!io::same_certificate(stored[i], rep.certificates[i])) {
        const auto& s = stored[i];
        rep.fail("stored certificate " + s.family + " #" + std::to_string(s.index) + " (n=" + std::to_string(s.at) +
                 ") differs from its recomputation");
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// output helpers

namespace detail {

inline std::filesystem::path out_dir(const RunConfig& cfg, const std::string& override_dir) {
  std::filesystem::path p = override_dir.empty() ? cfg.out_dir : override_dir;
  if (p.empty()) throw ConfigError("no output directory: pass --out or set output.dir");
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  fn(out);
}

inline void write_report(std::ostream& os, const std::string& construction, const VerifyReport& rep) {
  os << "construction: " << construction << '\n';
  os << "certificates: " << rep.certificates.size() << '\n';
  std::size_t held = 0;
  for (const auto& c : rep.certificates) held += c.holds;
  os << "holding: " << held << '\n';
  for (const auto& f : rep.failures) os << "FAIL " << f << '\n';
  os << "result: " << (rep.ok ? "PASS" : "FAIL") << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// commands

/// density_<label>.csv per declared set and window_bounds.csv over window.from..window.to.
inline int cmd_density(const RunConfig& cfg, const std::string& out_override, std::ostream& log) {
  auto dir = detail::out_dir(cfg, out_override);
  const std::uint64_t N = cfg.universe.n_max;
  std::uint64_t from = 1, to = N;
  if (cfg.raw.contains("window")) {
    from = detail::u64(cfg.raw.at("window"), "from", 1);
    to = detail::u64(cfg.raw.at("window"), "to", N);
  }
  std::ostringstream bounds;
  bounds << "label,from,to,min,argmin,max,argmax\n";
  for (const auto& label : cfg.set_order) {
    auto p = density_profile(cfg.set(label), N);
    detail::write_text(dir / ("density_" + detail::slug(label) + ".csv"), [&](std::ostream& os) { write_profile_csv(os, p); });
    auto w = window_bounds(p, from, to);
    bounds << label << ',' << from << ',' << to << ',' << to_string(w.min) << ',' << w.argmin << ',' << to_string(w.max)
           << ',' << w.argmax << '\n';
  }
  detail::write_text(dir / "window_bounds.csv", [&](std::ostream& os) { os << bounds.str(); });
  log << "density: " << cfg.set_order.size() << " profiles written to " << dir.string() << '\n';
  return kOk;
}

/// Reads a stored document and re-verifies it; returns kOk or kIntegrity.
inline int cmd_check(const std::string& artifact_path, std::ostream& log) {
  std::string text;
  {
    std::ifstream in(artifact_path, std::ios::binary);
    if (!in) throw io::ArtifactCorrupt("cannot read artifact '" + artifact_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  auto doc = io::parse_document(text);
  VerifyReport rep;
  try {
    rep = reverify(doc);
  } catch (const BudgetExceeded&) {
    throw;
  } catch (const std::exception& e) {
    // A stored artifact the verifiers cannot even evaluate is corrupt, whatever tripped.
    throw io::ArtifactCorrupt(std::string("artifact does not re-verify: ") + e.what());
  }
  std::string name = doc["config"].contains("construction") ? doc["config"]["construction"].value("kind", "?") : "?";
  detail::write_report(log, name, rep);
  return rep.ok ? kOk : kIntegrity;
}

/// artifact.json, trace.jsonl, certificates.csv, and verify.txt from re-reading artifact.json.
inline int cmd_construct(const RunConfig& cfg, const std::string& out_override, std::ostream& log) {
  auto dir = detail::out_dir(cfg, out_override);
  auto b = run_construction(cfg);
  auto doc = io::document(b.artifact_kind, b.artifact, cfg.raw);
  detail::write_text(dir / "artifact.json", [&](std::ostream& os) { os << doc.dump() << '\n'; });
  detail::write_text(dir / "trace.jsonl", [&](std::ostream& os) { io::write_trace_jsonl(os, b.trace); });
  detail::write_text(dir / "certificates.csv", [&](std::ostream& os) { io::write_certificates_csv(os, b.certificates); });
  std::ostringstream report;
  int code = cmd_check((dir / "artifact.json").string(), report);
  detail::write_text(dir / "verify.txt", [&](std::ostream& os) { os << report.str(); });
  log << report.str();
  return code;
}

/// Dispatches on generic.mode: partial | coarse | hitset | avoid | strong_array.
inline int cmd_generic(const RunConfig& cfg, const std::string& out_override, std::ostream& log) {
  auto dir = detail::out_dir(cfg, out_override);
  const auto& g = cfg.section("generic");
  const auto mode = detail::str(g, "mode");
  const std::uint64_t N = detail::u64(g, "n_max", cfg.universe.n_max);
  Json summary{{"mode", mode}};
  if (mode == "partial") {
    Rational r = detail::rational(g, "r", Rational(1));
    auto v = at_density_report(cfg.decider(detail::str(g, "decider")), cfg.set(detail::str(g, "set")), r, N,
                               detail::u64(g, "from", 1), detail::u64(g, "stage_budget", cfg.universe.stage_max));
    detail::write_text(dir / "genericity.csv", [&](std::ostream& os) { write_genericity_csv(os, v.report); });
    summary["errors"] = v.report.errors.size();
    summary["undefined"] = v.report.undefined;
    summary["agrees_everywhere_defined"] = v.report.agrees;
    summary["r"] = to_string(r);
    summary["domain_window_min"] = to_string(v.report.domain_window.min);
    summary["domain_window_argmin"] = v.report.domain_window.argmin;
    summary["domain_min_ge_r"] = v.report.domain_ge_r;
    summary["alpha_estimate"] = to_string(v.alpha_estimate);
    summary["alpha_estimate_kind"] = AtDensityVerdict::kind;
    summary["verdict"] = v.verdict;
  } else if (mode == "coarse") {
    auto c = coarse_report(cfg.set(detail::str(g, "f")), cfg.set(detail::str(g, "set")), N);
    detail::write_text(dir / "coarse.csv", [&](std::ostream& os) { write_coarse_csv(os, c); });
    summary["agreement_window_min"] = to_string(c.window.min);
    summary["agreement_window_max"] = to_string(c.window.max);
    summary["agreement_at_n_max"] = to_string(c.agreement.rho(N));
  } else if (mode == "hitset") {
    auto h = hitset_build(cfg.set(detail::str(g, "x")));
    auto p = density_profile(h.c, N);
    detail::write_text(dir / "hitset.csv", [&](std::ostream& os) { write_profile_csv(os, p); });
    summary["density_at_n_max"] = to_string(p.rho(N));
  } else if (mode == "avoid") {
    auto a = avoid_density(detail::u64s(g, "d"));
    summary["density"] = to_string(a.density);
    summary["modulus"] = a.modulus;
    summary["residues"] = a.residues;
  } else if (mode == "strong_array") {
    const auto& x = cfg.set(detail::str(g, "x"));
    auto count = detail::u64(g, "count");
    auto budget = detail::u64(g, "stage_budget", cfg.universe.stage_max);
    auto a = strong_array_extract(cfg.stream(detail::str(g, "t")), x, count, budget);
    Json fs = Json::array();
    for (std::size_t j = 0; j < a.sets.size(); ++j)
      fs.push_back(Json{{"j", j}, {"index", a.indices[j]}, {"stage", a.stages[j]}, {"set", a.sets[j]}});
    summary["sets"] = std::move(fs);
    detail::write_text(dir / "certificates.csv", [&](std::ostream& os) { io::write_certificates_csv(os, a.certificates); });
  } else {
    throw ConfigError("unknown generic mode '" + mode + "'");
  }
  detail::write_text(dir / "generic_summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  log << summary.dump() << '\n';
  return kOk;
}

/// metrics_<A>_<B>.csv per pair and metrics_summary.csv with the d/D window estimates.
inline int cmd_metrics(const RunConfig& cfg, const std::string& out_override, std::ostream& log) {
  auto dir = detail::out_dir(cfg, out_override);
  const auto& m = cfg.section("metrics");
  const std::uint64_t N = cfg.universe.n_max;
  const std::uint64_t from = detail::u64(m, "from", 1);
  std::ostringstream summary;
  summary << "a,b,from,to,d_est,D_est,b_subset_a\n";
  std::size_t pairs = 0;
  for (const auto& pr : detail::need(m, "pairs")) {
    if (!pr.is_array() || pr.size() != 2) throw ConfigError("metrics pair must be [label, label]");
    auto la = pr[0].get<std::string>(), lb = pr[1].get<std::string>();
    const auto &a = cfg.set(la), &b = cfg.set(lb);
    auto p = symdiff_profile(a, b, N);
    detail::write_text(dir / ("metrics_" + detail::slug(la) + "_" + detail::slug(lb) + ".csv"),
                       [&](std::ostream& os) { write_metrics_csv(os, p); });
    auto w = window_bounds(p.sym, from, N);
    summary << la << ',' << lb << ',' << from << ',' << N << ',' << to_string(w.min) << ',' << to_string(w.max) << ','
            << (p.b_subset_a ? 1 : 0) << '\n';
    ++pairs;
  }
  detail::write_text(dir / "metrics_summary.csv", [&](std::ostream& os) { os << summary.str(); });
  log << "metrics: " << pairs << " pairs written to " << dir.string() << '\n';
  return kOk;
}

/// Runs fn and maps library errors to exit codes, reporting them on err.
inline int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const io::ArtifactCorrupt& e) {
    err << "integrity error: " << e.what() << '\n';
    return kIntegrity;
  } catch (const BudgetExceeded& e) {
    err << "budget error: " << e.what() << '\n';
    return kBudget;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kConfig;
  }
}

/// Entry point shared by the binary and the tests.
inline int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
               const std::string& artifact_path, std::ostream& out, std::ostream& err) {
  return guarded([&]() -> int {
    if (command == "check") {
      if (artifact_path.empty()) throw ConfigError("check needs --artifact");
      return cmd_check(artifact_path, out);
    }
    if (config_path.empty()) throw ConfigError(command + " needs --config");
    auto cfg = load_config(config_path);
    if (command == "density") return cmd_density(cfg, out_dir, out);
    if (command == "construct") return cmd_construct(cfg, out_dir, out);
    if (command == "generic") return cmd_generic(cfg, out_dir, out);
    if (command == "metrics") return cmd_metrics(cfg, out_dir, out);
    throw ConfigError("unknown command '" + command + "'");
  }, err);
}

}  // namespace density::cli
