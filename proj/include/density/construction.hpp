#pragma once

// The common result of the set-building constructions: a windowed c.e. set
// (entry stage per element), construction markers, certificates, and a stage trace.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "density/ce_stream.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"

namespace density {

using TraceValue = std::variant<std::uint64_t, std::int64_t, bool, std::string, std::vector<std::uint64_t>>;

struct TraceEvent {
  std::uint64_t stage = 0;
  std::string kind;
  std::vector<std::pair<std::string, TraceValue>> fields;

  TraceEvent& set(std::string key, TraceValue v) {
    fields.emplace_back(std::move(key), std::move(v));
    return *this;
  }
  TraceEvent& set(std::string key, const Rational& r) { return set(std::move(key), TraceValue(to_string(r))); }
  TraceEvent& set(std::string key, std::uint64_t v) { return set(std::move(key), TraceValue(v)); }
  TraceEvent& set(std::string key, unsigned v) { return set(std::move(key), TraceValue(std::uint64_t{v})); }
  TraceEvent& set(std::string key, int v) { return set(std::move(key), TraceValue(std::int64_t{v})); }
  TraceEvent& set(std::string key, bool v) { return set(std::move(key), TraceValue(v)); }
  TraceEvent& set(std::string key, const char* v) { return set(std::move(key), TraceValue(std::string(v))); }

  const TraceValue* get(const std::string& key) const {
    for (const auto& [k, v] : fields)
      if (k == key) return &v;
    return nullptr;
  }
  std::uint64_t num(const std::string& key) const {
    auto* v = get(key);
    return v && std::holds_alternative<std::uint64_t>(*v) ? std::get<std::uint64_t>(*v) : kNever;
  }
  std::string str(const std::string& key) const {
    auto* v = get(key);
    return v && std::holds_alternative<std::string>(*v) ? std::get<std::string>(*v) : std::string();
  }
};

/// Per-requirement result of a priority construction, classified on the window only.
struct Outcome {
  std::string requirement;
  std::string outcome;
  std::uint64_t witness = kNever;
  std::string detail;
};

struct BuildArtifact {
  std::string construction;
  std::uint64_t n_max = 0, stage_max = 0;
  /// Entry stage of each x < n_max; kNever when x ∉ A on the window.  Computable builds use stage 0.
  std::vector<std::uint64_t> entry;
  /// Construction markers: checkpoints s_n, values t(n), block boundaries, ...
  std::vector<std::uint64_t> marks;
  /// Exact per-marker target values where the construction has them.
  std::vector<Rational> targets;
  /// Named integer series (e.g. g-rows), one value per stage or per index.
  std::map<std::string, std::vector<std::uint64_t>> series;
  std::vector<Outcome> outcomes;
  std::vector<Diagnostic> diagnostics;
  std::vector<Certificate> certificates;
  std::vector<TraceEvent> trace;

  bool in(std::uint64_t x) const { return x < n_max && entry[x] != kNever; }
  std::vector<bool> bits() const {
    std::vector<bool> b(n_max);
    for (std::uint64_t x = 0; x < n_max; ++x) b[x] = entry[x] != kNever;
    return b;
  }
  std::vector<std::uint64_t> counts() const {
    std::vector<std::uint64_t> c(n_max + 1, 0);
    for (std::uint64_t x = 0; x < n_max; ++x) c[x + 1] = c[x] + (entry[x] != kNever ? 1 : 0);
    return c;
  }
  StageTable table() const { return StageTable(n_max, stage_max, entry); }
  SetOracle set() const { return sets::explicit_bits(bits(), construction); }
  CEStream stream() const { return streams::from_table(table(), construction); }
  bool has_diagnostic(const std::string& kind) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [&](const Diagnostic& d) { return d.kind == kind; });
  }
  bool all_hold() const {
    return std::all_of(certificates.begin(), certificates.end(), [](const Certificate& c) { return c.holds; });
  }
};

namespace detail {

/// Counts over a growing subset of [0, n): point insertions, prefix counts.
class PositionCounter {
 public:
  explicit PositionCounter(std::uint64_t n = 0) : tree_(n + 1, 0) {}
  void add(std::uint64_t x) {
    for (std::uint64_t i = x + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Inserted positions < n.
  std::uint64_t below(std::uint64_t n) const {
    std::uint64_t s = 0;
    for (std::uint64_t i = std::min<std::uint64_t>(n, tree_.size() - 1); i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace detail

}  // namespace density
