#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "peninsula/error.hpp"

namespace peninsula {

struct Ipv4Addr {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(Ipv4Addr, Ipv4Addr) = default;

  // Strict dotted-quad: four decimal octets, no leading '+', no whitespace.
  static std::optional<Ipv4Addr> parse(std::string_view text) {
    std::uint32_t out = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
      if (octet > 0) {
        if (p == end || *p != '.') return std::nullopt;
        ++p;
      }
      if (p == end || *p < '0' || *p > '9') return std::nullopt;
      unsigned v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || v > 255 || next - p > 3) return std::nullopt;
      out = (out << 8) | v;
      p = next;
    }
    if (p != end) return std::nullopt;
    return Ipv4Addr{out};
  }

  std::string to_string() const {
    std::string s;
    s.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
      s += std::to_string((value >> shift) & 0xFF);
      if (shift) s += '.';
    }
    return s;
  }
};

// A /24 block, identified by its aligned base address.
class BlockId {
 public:
  constexpr BlockId() = default;

  explicit BlockId(Ipv4Addr base) : base_(base) {
    if (base.value & 0xFF) {
      throw InputError("block base " + base.to_string() + " is not /24 aligned");
    }
  }

  static constexpr BlockId containing(Ipv4Addr addr) {
    BlockId b;
    b.base_ = Ipv4Addr{addr.value & 0xFFFFFF00u};
    return b;
  }

  static std::optional<BlockId> parse(std::string_view text) {
    auto addr = Ipv4Addr::parse(text);
    if (!addr || (addr->value & 0xFF)) return std::nullopt;
    return BlockId(*addr);
  }

  constexpr Ipv4Addr base() const { return base_; }
  constexpr bool contains(Ipv4Addr addr) const {
    return (addr.value & 0xFFFFFF00u) == base_.value;
  }
  std::string to_string() const { return base_.to_string(); }

  friend constexpr auto operator<=>(BlockId, BlockId) = default;

 private:
  Ipv4Addr base_{};
};

// CIDR prefix with host bits cleared.
struct Prefix {
  Ipv4Addr network{};
  std::uint8_t length = 0;

  friend constexpr auto operator<=>(const Prefix&, const Prefix&) = default;

  static constexpr std::uint32_t mask_for(unsigned length) {
    return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  }

  constexpr std::uint32_t mask() const { return mask_for(length); }

  constexpr bool contains(Ipv4Addr addr) const {
    return (addr.value & mask()) == network.value;
  }

  // Rejects host bits set below the mask.
  static std::optional<Prefix> parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto addr = Ipv4Addr::parse(text.substr(0, slash));
    if (!addr) return std::nullopt;
    auto len_text = text.substr(slash + 1);
    unsigned len = 0;
    auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || next != len_text.data() + len_text.size() || len > 32 ||
        len_text.empty()) {
      return std::nullopt;
    }
    Prefix p{*addr, static_cast<std::uint8_t>(len)};
    if ((addr->value & ~p.mask()) != 0) return std::nullopt;
    return p;
  }

  std::string to_string() const {
    return network.to_string() + "/" + std::to_string(length);
  }
};

}  // namespace peninsula

template <>
struct std::hash<peninsula::BlockId> {
  std::size_t operator()(peninsula::BlockId b) const noexcept {
    return std::hash<std::uint32_t>{}(b.base().value);
  }
};

template <>
struct std::hash<peninsula::Prefix> {
  std::size_t operator()(const peninsula::Prefix& p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.network.value} << 8) | p.length);
  }
};
