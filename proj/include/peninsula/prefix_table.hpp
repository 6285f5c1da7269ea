#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "peninsula/ipv4.hpp"

namespace peninsula {

struct RouteEntry {
  Prefix prefix;
  std::uint32_t asn = 0;

  friend bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

// Routed prefixes with origin AS, answering longest-prefix-match queries
// through a binary trie (one level per prefix bit).
class PrefixTable {
 public:
  enum class InsertResult { Inserted, Unchanged, ReplacedConflicting };

  PrefixTable() { nodes_.emplace_back(); }

  // Re-inserting a prefix with a different ASN keeps the new ASN.
  InsertResult insert(Prefix prefix, std::uint32_t asn) {
    std::int32_t node = 0;
    for (unsigned depth = 0; depth < prefix.length; ++depth) {
      unsigned bit = (prefix.network.value >> (31 - depth)) & 1u;
      if (nodes_[node].child[bit] < 0) {
        nodes_[node].child[bit] = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[node].child[bit];
    }
    auto& slot = nodes_[node].entry;
    if (slot >= 0) {
      auto& existing = entries_[slot];
      if (existing.asn == asn) return InsertResult::Unchanged;
      existing.asn = asn;
      return InsertResult::ReplacedConflicting;
    }
    slot = static_cast<std::int32_t>(entries_.size());
    entries_.push_back({prefix, asn});
    return InsertResult::Inserted;
  }

  std::optional<RouteEntry> lookup(Ipv4Addr addr) const {
    std::int32_t node = 0;
    std::int32_t best = nodes_[0].entry;
    for (unsigned depth = 0; depth < 32; ++depth) {
      unsigned bit = (addr.value >> (31 - depth)) & 1u;
      node = nodes_[node].child[bit];
      if (node < 0) break;
      if (nodes_[node].entry >= 0) best = nodes_[node].entry;
    }
    if (best < 0) return std::nullopt;
    return entries_[best];
  }

  std::optional<RouteEntry> lookup(BlockId block) const { return lookup(block.base()); }

  // Entries sorted by (network, length).
  std::vector<RouteEntry> entries() const {
    auto out = entries_;
    std::sort(out.begin(), out.end(), [](const RouteEntry& a, const RouteEntry& b) { return a.prefix < b.prefix; });
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  struct Node {
    std::array<std::int32_t, 2> child{-1, -1};
    std::int32_t entry = -1;
  };

  std::vector<Node> nodes_;
  std::vector<RouteEntry> entries_;
};

}  // namespace peninsula
