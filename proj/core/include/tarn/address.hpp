#pragma once

#include "tarn/rng.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

enum class IpVersion : std::uint8_t { V4 = 4, V6 = 6 };

constexpr int address_width(IpVersion v) noexcept { return v == IpVersion::V4 ? 32 : 128; }

/// A v4 or v6 address held as an unsigned integer of the version's width.
class Address {
public:
    constexpr Address() noexcept = default;

    static constexpr Address v4(std::uint32_t bits) noexcept { return Address(IpVersion::V4, bits); }
    static constexpr Address v6(u128 bits) noexcept { return Address(IpVersion::V6, bits); }
    /// Throws Errc::InvalidAddress if bits exceed the version's width.
    static Address from_bits(IpVersion version, u128 bits);
    /// Accepts dotted-quad or RFC 4291 text.
    static Address parse(std::string_view text);

    constexpr IpVersion version() const noexcept { return version_; }
    constexpr u128 bits() const noexcept { return bits_; }
    constexpr int width() const noexcept { return address_width(version_); }

    std::string to_string() const;
    /// Network-order bytes, 4 or 16 of them.
    std::vector<std::uint8_t> to_bytes() const;
    static Address from_bytes(std::span<const std::uint8_t> bytes);

    friend constexpr auto operator<=>(const Address&, const Address&) = default;
    friend constexpr bool operator==(const Address&, const Address&) = default;

private:
    constexpr Address(IpVersion v, u128 bits) noexcept : version_(v), bits_(bits) {}

    IpVersion version_ = IpVersion::V4;
    u128 bits_ = 0;
};

/// CIDR prefix in canonical form: host bits of the base are zero.
class Prefix {
public:
    Prefix() = default;
    /// Throws Errc::InvalidPrefix for an out-of-range length or a base with host bits set.
    Prefix(Address base, int length);
    /// Masks the host bits instead of rejecting them.
    static Prefix covering(Address addr, int length);
    static Prefix parse(std::string_view text);
    /// A prefix holding exactly one address.
    static Prefix host(Address addr) { return Prefix(addr, addr.width()); }

    const Address& base() const noexcept { return base_; }
    int length() const noexcept { return length_; }
    IpVersion version() const noexcept { return base_.version(); }
    int host_bits() const noexcept { return base_.width() - length_; }
    /// Number of addresses minus one; always representable.
    u128 last_offset() const noexcept;

    bool contains(const Address& a) const noexcept;
    bool contains(const Prefix& p) const noexcept;
    bool overlaps(const Prefix& p) const noexcept { return contains(p) || p.contains(*this); }
    /// base + offset; offset must be <= last_offset().
    Address at(u128 offset) const;

    std::string to_string() const;

    friend auto operator<=>(const Prefix&, const Prefix&) = default;
    friend bool operator==(const Prefix&, const Prefix&) = default;

private:
    Address base_{};
    int length_ = 0;
};

/// Non-empty, single-version set of pairwise disjoint prefixes.
class PrefixPool {
public:
    /// Throws Errc::InvalidPool if empty, mixed-version, or overlapping.
    explicit PrefixPool(std::vector<Prefix> prefixes);
    static PrefixPool parse(std::string_view comma_separated);

    const std::vector<Prefix>& prefixes() const noexcept { return prefixes_; }
    IpVersion version() const noexcept { return prefixes_.front().version(); }
    /// Total address count minus one (the union of disjoint prefixes never exceeds 2^128).
    u128 last_offset() const noexcept { return last_offset_; }
    /// Address at a position of the concatenated prefix ranges, in list order.
    Address at(u128 offset) const;
    bool contains(const Address& a) const noexcept;
    std::optional<Prefix> prefix_of(const Address& a) const noexcept;

    std::string to_string() const;

    friend bool operator==(const PrefixPool&, const PrefixPool&) = default;

private:
    std::vector<Prefix> prefixes_;
    u128 last_offset_ = 0;
};

/// Text of a 128-bit unsigned value; used by diagnostics and tests.
std::string u128_to_string(u128 v);

} // namespace tarn

template <>
struct std::hash<tarn::Address> {
    std::size_t operator()(const tarn::Address& a) const noexcept {
        const auto lo = static_cast<std::uint64_t>(a.bits());
        const auto hi = static_cast<std::uint64_t>(a.bits() >> 64);
        return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9e3779b97f4a7c15ULL) ^
                                           static_cast<std::uint64_t>(a.version()));
    }
};
