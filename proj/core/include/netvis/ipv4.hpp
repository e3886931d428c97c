#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace netvis {

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t bits) : bits_(bits) {}
  constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : bits_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  /// Strict dotted-quad parse: four decimal octets, no leading '+', no
  /// surrounding whitespace.
  static std::optional<Ipv4Address> parse(std::string_view text);

  constexpr std::uint32_t bits() const noexcept { return bits_; }
  std::string to_string() const;

  /// Address with the low (32 - length) bits cleared.
  constexpr Ipv4Address masked(unsigned length) const noexcept {
    if (length == 0) return Ipv4Address{0};
    if (length >= 32) return *this;
    return Ipv4Address{bits_ & ~((std::uint32_t{1} << (32 - length)) - 1)};
  }

  friend constexpr bool operator==(Ipv4Address, Ipv4Address) = default;
  friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;

 private:
  std::uint32_t bits_ = 0;
};

/// Address plus prefix length, as carried on an interface ("10.1.0.1/30").
/// The address keeps its host bits; use network() for the masked form.
struct Ipv4Prefix {
  Ipv4Address address;
  std::uint8_t length = 32;

  static std::optional<Ipv4Prefix> parse(std::string_view text);
  std::string to_string() const;
  Ipv4Address network() const noexcept { return address.masked(length); }

  friend bool operator==(const Ipv4Prefix&, const Ipv4Prefix&) = default;
  friend auto operator<=>(const Ipv4Prefix&, const Ipv4Prefix&) = default;
};

}  // namespace netvis
