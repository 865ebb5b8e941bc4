#pragma once

// Computable rational sequences, limit approximations g(k,s), and the
// order-statistic index over entry stages shared by the stage searches.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "density/ce_stream.hpp"
#include "density/errors.hpp"
#include "density/rational.hpp"

namespace density {

/// n ↦ q_n.  Values are cached as 64-bit fractions for the hot loops.
class RationalSequence {
 public:
  using Fn = std::function<Rational(std::uint64_t)>;

  RationalSequence(Fn fn, std::string label)
      : fn_(std::make_shared<Fn>(std::move(fn))), label_(std::move(label)) {}

  Rational operator()(std::uint64_t n) const { return (*fn_)(n); }
  const std::string& label() const noexcept { return label_; }

  /// q_0 .. q_{n-1} as SmallFrac, each checked to lie in [0,1].
  std::vector<SmallFrac> small_values(std::uint64_t n) const {
    std::vector<SmallFrac> v;
    v.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Rational q = (*this)(i);
      if (q < 0 || q > 1) throw InvalidArgument("sequence '" + label_ + "' leaves [0,1] at " + std::to_string(i));
      v.push_back(SmallFrac::from(q));
    }
    return v;
  }

 private:
  std::shared_ptr<Fn> fn_;
  std::string label_;
};

namespace seqs {

inline RationalSequence constant(Rational q) {
  std::string label = "const " + to_string(q);
  return RationalSequence([q](std::uint64_t) { return q; }, std::move(label));
}

/// a, b, a, b, ...
inline RationalSequence alternating(Rational a, Rational b) {
  std::string label = "alt " + to_string(a) + "," + to_string(b);
  return RationalSequence([a, b](std::uint64_t n) { return n % 2 == 0 ? a : b; }, std::move(label));
}

/// 1 − 2^{-n}.
inline RationalSequence one_minus_pow2() {
  return RationalSequence([](std::uint64_t n) { return Rational(1) - pow2_inv(static_cast<unsigned>(std::min<std::uint64_t>(n, 4096))); },
                          "1-2^-n");
}

/// limit + (start − limit)/(n+1): converges to limit from start.
inline RationalSequence harmonic(Rational start, Rational limit) {
  std::string label = "harmonic " + to_string(start) + "->" + to_string(limit);
  return RationalSequence([start, limit](std::uint64_t n) { return limit + (start - limit) / Rational(n + 1); },
                          std::move(label));
}

/// Explicit list; the last value repeats.
inline RationalSequence listed(std::vector<Rational> values) {
  if (values.empty()) throw InvalidArgument("listed sequence needs at least one value");
  std::string label = "list[" + std::to_string(values.size()) + "]";
  return RationalSequence(
      [v = std::move(values)](std::uint64_t n) { return v[std::min<std::uint64_t>(n, v.size() - 1)]; },
      std::move(label));
}

/// s_{2n} = a_n, s_{2n+1} = b_n.
inline RationalSequence interleave(const RationalSequence& a, const RationalSequence& b) {
  return RationalSequence([a, b](std::uint64_t n) { return n % 2 == 0 ? a(n / 2) : b(n / 2); },
                          "interleave(" + a.label() + "," + b.label() + ")");
}

}  // namespace seqs

/// g(k, s), assumed to converge in s for each k.
struct LimitApprox {
  std::function<std::uint64_t(std::uint64_t, std::uint64_t)> eval;
  std::string label = "g";

  static LimitApprox constant(std::uint64_t v) {
    return {[v](std::uint64_t, std::uint64_t) { return v; }, "const " + std::to_string(v)};
  }
};

/// q_0 .. q_{n-1} for the hot loops.  Values that fit are held as 64-bit
/// fractions; wider ones (e.g. 1 − 2^{-n} for large n) are bracketed by
/// consecutive multiples of 2^{-62}, and exact arithmetic runs only when the
/// two brackets disagree.
class SeqCache {
 public:
  SeqCache() = default;
  SeqCache(const RationalSequence& q, std::uint64_t n) {
    exact_.reserve(n);
    small_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Rational v = q(i);
      if (v < 0 || v > 1) throw InvalidArgument("sequence '" + q.label() + "' leaves [0,1] at " + std::to_string(i));
      Entry e;
      if (num_of(v) <= std::numeric_limits<std::uint64_t>::max() && den_of(v) <= std::numeric_limits<std::uint64_t>::max()) {
        e.lo = e.hi = SmallFrac::from(v);
        e.fits = true;
      } else {
        auto f = static_cast<std::uint64_t>(floor_of(v * Rational(BigInt(kScale))));
        e.lo = {f, kScale};
        e.hi = {f + 1, kScale};
      }
      small_.push_back(e);
      exact_.push_back(std::move(v));
    }
    suffix_min_.assign(n, 0);
    for (std::uint64_t i = n; i-- > 0;)
      suffix_min_[i] = (i + 1 < n && less(suffix_min_[i + 1], i)) ? suffix_min_[i + 1] : i;
  }

  std::size_t size() const noexcept { return exact_.size(); }
  const Rational& operator[](std::uint64_t i) const { return exact_[i]; }
  /// argmin of q_j over j ∈ [i, size()), earliest on ties.
  std::uint64_t argmin_from(std::uint64_t i) const { return suffix_min_[i]; }

  /// max(0, ⌈m·q_i − m·2^{-k}⌉).
  std::uint64_t need(std::uint64_t i, std::uint64_t m, unsigned k) const;
  /// count/m ≥ q_i.
  bool ge(std::uint64_t i, std::uint64_t count, std::uint64_t m) const {
    const Entry& e = small_[i];
    if (e.fits) return frac_ge(count, m, e.lo);
    if (frac_ge(count, m, e.hi)) return true;
    if (!frac_ge(count, m, e.lo)) return false;
    return Rational(BigInt(count)) >= exact_[i] * Rational(BigInt(m));
  }
  /// q_i < q_j.
  bool less(std::uint64_t i, std::uint64_t j) const {
    if (small_[i].fits && small_[j].fits)
      return frac_cmp(small_[i].lo.num, small_[i].lo.den, small_[j].lo.num, small_[j].lo.den) < 0;
    return exact_[i] < exact_[j];
  }

 private:
  static constexpr std::uint64_t kScale = std::uint64_t{1} << 62;
  struct Entry {
    SmallFrac lo{0, 1}, hi{0, 1};
    bool fits = false;
  };
  std::vector<Rational> exact_;
  std::vector<Entry> small_;
  std::vector<std::uint64_t> suffix_min_;
};

/// max(0, ⌈m·q − m·2^{-k}⌉), exactly.
inline std::uint64_t ceil_minus_pow2(const SmallFrac& q, std::uint64_t m, unsigned k) {
  if (k >= 64) {
    Rational v = Rational(BigInt(m)) * Rational(BigInt(q.num), BigInt(q.den)) - Rational(BigInt(m)) * pow2_inv(k);
    if (v <= 0) return 0;
    return static_cast<std::uint64_t>(ceil_of(v));
  }
  u128 p = static_cast<u128>(m) * q.num;
  auto a = static_cast<std::uint64_t>(p / q.den);
  u128 r1 = p % q.den;
  std::uint64_t b = m >> k;
  std::uint64_t r2 = k == 0 ? 0 : (m & ((std::uint64_t{1} << k) - 1));
  // fractional parts f = r1/den, g = r2/2^k; ⌈(a + f) − (b + g)⌉ = a − b + [f > g]
  bool up = (r1 << k) > static_cast<u128>(r2) * q.den;
  std::int64_t v = static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b) + (up ? 1 : 0);
  return v < 0 ? 0 : static_cast<std::uint64_t>(v);
}

inline std::uint64_t ceil_minus_pow2(const Rational& q, std::uint64_t m, unsigned k) {
  Rational v = Rational(BigInt(m)) * q - Rational(BigInt(m)) * pow2_inv(k);
  if (v <= 0) return 0;
  return static_cast<std::uint64_t>(ceil_of(v));
}

inline std::uint64_t SeqCache::need(std::uint64_t i, std::uint64_t m, unsigned k) const {
  const Entry& e = small_[i];
  if (e.fits) return ceil_minus_pow2(e.lo, m, k);
  std::uint64_t lo = ceil_minus_pow2(e.lo, m, k), hi = ceil_minus_pow2(e.hi, m, k);
  if (lo == hi) return lo;
  return ceil_minus_pow2(exact_[i], m, k);
}

/// n − ⌊n/2^k⌋ = ⌈n(1 − 2^{-k})⌉.
inline std::uint64_t one_minus_pow2_need(std::uint64_t n, unsigned k) { return k >= 64 ? n : n - (n >> k); }

namespace detail {

/// Fenwick tree over the distinct finite entry stages of a table, for
/// "how many inserted elements entered by stage t" and "k-th smallest stage".
class StageRank {
 public:
  StageRank() = default;
  explicit StageRank(const std::vector<std::uint64_t>& entries) {
    for (auto e : entries)
      if (e != kNever) keys_.push_back(e);
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    tree_.assign(keys_.size() + 1, 0);
    log_ = 1;
    while ((std::size_t{1} << log_) <= keys_.size()) ++log_;
  }

  void insert(std::uint64_t stage, std::int64_t delta = 1) {
    if (stage == kNever) return;
    auto i = static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), stage) - keys_.begin()) + 1;
    for (; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    total_ += delta;
  }
  void erase(std::uint64_t stage) { insert(stage, -1); }

  /// Inserted elements with stage ≤ t.
  std::uint64_t count_le(std::uint64_t t) const {
    auto i = static_cast<std::size_t>(std::upper_bound(keys_.begin(), keys_.end(), t) - keys_.begin());
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return static_cast<std::uint64_t>(s);
  }

  /// Smallest t with count_le(t) ≥ k; 0 for k = 0, kNever when fewer than k are inserted.
  std::uint64_t kth(std::uint64_t k) const {
    if (k == 0) return 0;
    if (static_cast<std::int64_t>(k) > total_) return kNever;
    std::size_t pos = 0;
    std::int64_t rem = static_cast<std::int64_t>(k);
    for (int b = log_; b >= 0; --b) {
      std::size_t nxt = pos + (std::size_t{1} << b);
      if (nxt < tree_.size() && tree_[nxt] < rem) {
        pos = nxt;
        rem -= tree_[nxt];
      }
    }
    return keys_[pos];
  }

  std::int64_t size() const noexcept { return total_; }

 private:
  std::vector<std::uint64_t> keys_;
  std::vector<std::int64_t> tree_;
  std::int64_t total_ = 0;
  int log_ = 0;
};

}  // namespace detail

}  // namespace density
