#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace peninsula {

// Set of vantage-point indices into a RoundMatrix's VP list. The first 64
// members live inline; larger indices spill into a word vector kept free of
// trailing zero words so that equality and hashing are structural.
class VpSet {
 public:
  VpSet() = default;
  VpSet(std::initializer_list<std::size_t> members) {
    for (auto m : members) insert(m);
  }

  void insert(std::size_t i) {
    if (i < 64) {
      low_ |= std::uint64_t{1} << i;
      return;
    }
    auto w = (i - 64) / 64;
    if (high_.size() <= w) high_.resize(w + 1, 0);
    high_[w] |= std::uint64_t{1} << ((i - 64) % 64);
  }

  void erase(std::size_t i) {
    if (i < 64) {
      low_ &= ~(std::uint64_t{1} << i);
      return;
    }
    auto w = (i - 64) / 64;
    if (w >= high_.size()) return;
    high_[w] &= ~(std::uint64_t{1} << ((i - 64) % 64));
    trim();
  }

  bool contains(std::size_t i) const {
    if (i < 64) return (low_ >> i) & 1u;
    auto w = (i - 64) / 64;
    return w < high_.size() && ((high_[w] >> ((i - 64) % 64)) & 1u);
  }

  std::size_t size() const {
    std::size_t n = static_cast<std::size_t>(std::popcount(low_));
    for (auto w : high_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const { return low_ == 0 && high_.empty(); }

  bool is_subset_of(const VpSet& other) const {
    if ((low_ & ~other.low_) != 0) return false;
    for (std::size_t w = 0; w < high_.size(); ++w) {
      std::uint64_t o = w < other.high_.size() ? other.high_[w] : 0;
      if ((high_[w] & ~o) != 0) return false;
    }
    return true;
  }

  VpSet& operator|=(const VpSet& other) {
    low_ |= other.low_;
    if (high_.size() < other.high_.size()) high_.resize(other.high_.size(), 0);
    for (std::size_t w = 0; w < other.high_.size(); ++w) high_[w] |= other.high_[w];
    return *this;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::uint64_t bits = low_; bits; bits &= bits - 1) {
      f(static_cast<std::size_t>(std::countr_zero(bits)));
    }
    for (std::size_t w = 0; w < high_.size(); ++w) {
      for (std::uint64_t bits = high_[w]; bits; bits &= bits - 1) {
        f(64 + w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
      }
    }
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  friend bool operator==(const VpSet&, const VpSet&) = default;

  // Total order; compares the highest differing member position first.
  friend std::strong_ordering operator<=>(const VpSet& a, const VpSet& b) {
    if (auto c = a.high_.size() <=> b.high_.size(); c != 0) return c;
    for (std::size_t w = a.high_.size(); w-- > 0;) {
      if (auto c = a.high_[w] <=> b.high_[w]; c != 0) return c;
    }
    return a.low_ <=> b.low_;
  }

  std::size_t hash() const noexcept {
    std::size_t h = std::hash<std::uint64_t>{}(low_);
    for (auto w : high_) h = h * 1000003u ^ std::hash<std::uint64_t>{}(w);
    return h;
  }

 private:
  void trim() {
    while (!high_.empty() && high_.back() == 0) high_.pop_back();
  }

  std::uint64_t low_ = 0;
  std::vector<std::uint64_t> high_;
};

}  // namespace peninsula

template <>
struct std::hash<peninsula::VpSet> {
  std::size_t operator()(const peninsula::VpSet& s) const noexcept { return s.hash(); }
};
