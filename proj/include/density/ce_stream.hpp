#pragma once

// Stage-indexed enumerations s ↦ A_s and their materialized entry-stage tables.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "density/errors.hpp"
#include "density/set_oracle.hpp"

namespace density {

inline constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

/// Entry stage of every x < n_max (kNever when x is not enumerated by stage_max).
class StageTable {
 public:
  StageTable() = default;
  StageTable(std::uint64_t n_max, std::uint64_t stage_max, std::vector<std::uint64_t> entry)
      : n_max_(n_max), stage_max_(stage_max), entry_(std::move(entry)) {}

  std::uint64_t n_max() const noexcept { return n_max_; }
  std::uint64_t stage_max() const noexcept { return stage_max_; }
  std::uint64_t entry(std::uint64_t x) const { return x < n_max_ ? entry_[x] : kNever; }
  const std::vector<std::uint64_t>& entries() const noexcept { return entry_; }

  /// x ∈ A_t.
  bool in(std::uint64_t x, std::uint64_t t) const { return x < n_max_ && entry_[x] <= t; }
  bool in_final(std::uint64_t x) const { return x < n_max_ && entry_[x] != kNever; }

  std::vector<bool> bits_at(std::uint64_t t) const {
    std::vector<bool> b(n_max_);
    for (std::uint64_t x = 0; x < n_max_; ++x) b[x] = entry_[x] <= t;
    return b;
  }
  std::vector<bool> final_bits() const { return bits_at(stage_max_); }

  /// counts[n] = |A_t ∩ [0,n)| for 0 ≤ n ≤ n_max.
  std::vector<std::uint64_t> counts_at(std::uint64_t t) const {
    std::vector<std::uint64_t> c(n_max_ + 1, 0);
    for (std::uint64_t x = 0; x < n_max_; ++x) c[x + 1] = c[x] + (entry_[x] <= t ? 1 : 0);
    return c;
  }
  std::vector<std::uint64_t> final_counts() const { return counts_at(stage_max_); }

 private:
  std::uint64_t n_max_ = 0;
  std::uint64_t stage_max_ = 0;
  std::vector<std::uint64_t> entry_;
};

namespace detail {
struct StreamSource {
  virtual ~StreamSource() = default;
  /// Elements newly enumerated at stage s (any order, no duplicates).
  virtual std::vector<std::uint64_t> enumerate(std::uint64_t s) const = 0;
  virtual std::uint64_t bound(std::uint64_t s) const = 0;
  /// Direct entry-stage lookup; sources without one return false from has_entry().
  virtual bool has_entry() const { return false; }
  virtual std::uint64_t entry(std::uint64_t) const { return kNever; }
};
}  // namespace detail

/// A computable enumeration of a c.e. set.
class CEStream {
 public:
  CEStream(std::shared_ptr<const detail::StreamSource> src, std::string label)
      : src_(std::move(src)), label_(std::move(label)) {}

  std::vector<std::uint64_t> enumerate(std::uint64_t s) const {
    auto v = src_->enumerate(s);
    std::sort(v.begin(), v.end());
    return v;
  }
  std::uint64_t bound(std::uint64_t s) const { return src_->bound(s); }
  const std::string& label() const noexcept { return label_; }

  /// Entry stages of [0, n_max) through stage_max.  Streams without a direct
  /// entry lookup are replayed stage by stage and checked for well-formedness.
  StageTable materialize(std::uint64_t n_max, std::uint64_t stage_max) const {
    std::vector<std::uint64_t> entry(n_max, kNever);
    if (src_->has_entry()) {
      for (std::uint64_t x = 0; x < n_max; ++x) {
        auto e = src_->entry(x);
        entry[x] = e <= stage_max ? e : kNever;
      }
      return StageTable(n_max, stage_max, std::move(entry));
    }
    replay(stage_max, [&](std::uint64_t s, std::uint64_t x) {
      if (x < n_max) entry[x] = s;
    });
    return StageTable(n_max, stage_max, std::move(entry));
  }

  /// Checks the stream invariants through stage_max by replay; throws ContractViolated.
  void validate(std::uint64_t stage_max) const {
    replay(stage_max, [](std::uint64_t, std::uint64_t) {});
  }

 private:
  template <class F>
  void replay(std::uint64_t stage_max, F&& sink) const {
    std::unordered_set<std::uint64_t> seen;
    std::uint64_t prev_bound = 0;
    for (std::uint64_t s = 0; s <= stage_max; ++s) {
      auto b = src_->bound(s);
      if (b < prev_bound)
        throw ContractViolated("stream '" + label_ + "': bound decreases at stage " + std::to_string(s));
      prev_bound = b;
      for (auto x : src_->enumerate(s)) {
        if (x >= b)
          throw ContractViolated("stream '" + label_ + "': element " + std::to_string(x) +
                                 " at stage " + std::to_string(s) + " is not below bound");
        if (!seen.insert(x).second)
          throw ContractViolated("stream '" + label_ + "': element " + std::to_string(x) + " enumerated twice");
        sink(s, x);
      }
      if (s == std::numeric_limits<std::uint64_t>::max()) break;
    }
  }

  std::shared_ptr<const detail::StreamSource> src_;
  std::string label_;
};

/// When an element of the underlying set enters the stream.
struct Schedule {
  enum class Kind { Instant, Linear, Burst, ThresholdDelay };
  Kind kind = Kind::Instant;
  std::uint64_t a = 1;  // Linear slope; ThresholdDelay threshold
  std::uint64_t b = 0;  // Linear offset; ThresholdDelay delay
  std::uint64_t period = 1;

  static Schedule instant() { return {}; }
  /// x enters at stage a·x + b.
  static Schedule linear(std::uint64_t a, std::uint64_t b) { return {Kind::Linear, a, b, 1}; }
  /// All x in [kp, (k+1)p) enter together at stage (k+1)p.
  static Schedule burst(std::uint64_t p) {
    if (p == 0) throw InvalidArgument("burst period must be >= 1");
    return {Kind::Burst, 1, 0, p};
  }
  /// x < threshold enters at stage 0, later elements at stage x + delay.
  static Schedule threshold_delay(std::uint64_t threshold, std::uint64_t delay) {
    return {Kind::ThresholdDelay, threshold, delay, 1};
  }

  std::uint64_t stage_of(std::uint64_t x) const {
    switch (kind) {
      case Kind::Instant: return 0;
      case Kind::Linear: return a * x + b;
      case Kind::Burst: return (x / period + 1) * period;
      case Kind::ThresholdDelay: return x < a ? 0 : x + b;
    }
    return kNever;
  }
};

namespace detail {

struct ScheduledSource final : StreamSource {
  ScheduledSource(SetOracle s, Schedule sc, std::uint64_t c) : set(std::move(s)), sched(sc), cap(c) {}

  std::vector<std::uint64_t> enumerate(std::uint64_t s) const override {
    std::vector<std::uint64_t> out;
    auto take = [&](std::uint64_t x) {
      if (x < cap && set.contains(x) && sched.stage_of(x) == s) out.push_back(x);
    };
    auto take_range = [&](std::uint64_t lo, std::uint64_t hi) {
      for (std::uint64_t x = lo; x < std::min(hi, cap); ++x) take(x);
    };
    switch (sched.kind) {
      case Schedule::Kind::Instant:
        if (s == 0) take_range(0, cap);
        break;
      case Schedule::Kind::Linear:
        if (s < sched.b) break;
        if (sched.a == 0) {
          if (s == sched.b) take_range(0, cap);
        } else if ((s - sched.b) % sched.a == 0) {
          take((s - sched.b) / sched.a);
        }
        break;
      case Schedule::Kind::Burst:
        if (s >= sched.period && s % sched.period == 0) take_range(s - sched.period, s);
        break;
      case Schedule::Kind::ThresholdDelay:
        if (s == 0) take_range(0, sched.a);
        if (s >= sched.b && s - sched.b >= sched.a) take(s - sched.b);
        break;
    }
    return out;
  }

  std::uint64_t bound(std::uint64_t s) const override {
    switch (sched.kind) {
      case Schedule::Kind::Instant: return cap;
      case Schedule::Kind::Linear:
        if (s < sched.b) return 0;
        if (sched.a == 0) return cap;
        return std::min(cap, (s - sched.b) / sched.a + 1);
      case Schedule::Kind::Burst: return std::min(cap, (s / sched.period) * sched.period);
      case Schedule::Kind::ThresholdDelay: {
        std::uint64_t hi = s >= sched.b ? s - sched.b + 1 : 0;
        return std::min(cap, std::max(sched.a, hi));
      }
    }
    return cap;
  }

  bool has_entry() const override { return true; }
  std::uint64_t entry(std::uint64_t x) const override {
    if (x >= cap || !set.contains(x)) return kNever;
    return sched.stage_of(x);
  }

  SetOracle set;
  Schedule sched;
  std::uint64_t cap;
};

struct ScriptedSource final : StreamSource {
  explicit ScriptedSource(std::map<std::uint64_t, std::vector<std::uint64_t>> s) : script(std::move(s)) {
    std::uint64_t top = 0;
    for (auto& [stage, xs] : script) {
      for (auto x : xs) top = std::max(top, x + 1);
      prefix_bound.emplace_back(stage, top);
    }
  }
  std::vector<std::uint64_t> enumerate(std::uint64_t s) const override {
    auto it = script.find(s);
    return it == script.end() ? std::vector<std::uint64_t>{} : it->second;
  }
  std::uint64_t bound(std::uint64_t s) const override {
    std::uint64_t b = 0;
    for (auto& [stage, top] : prefix_bound) {
      if (stage > s) break;
      b = top;
    }
    return b;
  }
  std::map<std::uint64_t, std::vector<std::uint64_t>> script;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> prefix_bound;
};

struct FunctionSource final : StreamSource {
  std::function<std::vector<std::uint64_t>(std::uint64_t)> enum_fn;
  std::function<std::uint64_t(std::uint64_t)> bound_fn;
  std::vector<std::uint64_t> enumerate(std::uint64_t s) const override { return enum_fn(s); }
  std::uint64_t bound(std::uint64_t s) const override { return bound_fn(s); }
};

/// Replays a fixed entry table; enumerates nothing at or beyond n_max.
struct TableSource final : StreamSource {
  explicit TableSource(StageTable t) : table(std::move(t)) {
    for (std::uint64_t x = 0; x < table.n_max(); ++x)
      if (table.entry(x) != kNever) by_stage.emplace_back(table.entry(x), x);
    std::sort(by_stage.begin(), by_stage.end());
  }
  std::vector<std::uint64_t> enumerate(std::uint64_t s) const override {
    auto lo = std::lower_bound(by_stage.begin(), by_stage.end(), std::make_pair(s, std::uint64_t{0}));
    std::vector<std::uint64_t> v;
    for (; lo != by_stage.end() && lo->first == s; ++lo) v.push_back(lo->second);
    return v;
  }
  std::uint64_t bound(std::uint64_t) const override { return table.n_max(); }
  bool has_entry() const override { return true; }
  std::uint64_t entry(std::uint64_t x) const override { return table.entry(x); }

  StageTable table;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> by_stage;
};

}  // namespace detail

namespace streams {

/// The enumeration recorded in a stage table.
inline CEStream from_table(StageTable t, std::string label = "table") {
  return CEStream(std::make_shared<detail::TableSource>(std::move(t)), std::move(label));
}


/// Enumerates S ∩ [0, cap) according to a schedule.
inline CEStream from_set(const SetOracle& s, Schedule sched = Schedule::instant(),
                         std::uint64_t cap = std::uint64_t{1} << 40, std::string label = "") {
  if (label.empty()) label = s.label();
  return CEStream(std::make_shared<detail::ScheduledSource>(s, sched, cap), std::move(label));
}

inline CEStream empty() { return from_set(sets::empty(), Schedule::instant(), 0, "empty"); }

/// Explicit stage → elements script (each element must appear once).
inline CEStream scripted(std::map<std::uint64_t, std::vector<std::uint64_t>> script, std::string label = "scripted") {
  return CEStream(std::make_shared<detail::ScriptedSource>(std::move(script)), std::move(label));
}

inline CEStream from_functions(std::function<std::vector<std::uint64_t>(std::uint64_t)> enumerate,
                               std::function<std::uint64_t(std::uint64_t)> bound, std::string label) {
  auto src = std::make_shared<detail::FunctionSource>();
  src->enum_fn = std::move(enumerate);
  src->bound_fn = std::move(bound);
  return CEStream(src, std::move(label));
}

}  // namespace streams

}  // namespace density
