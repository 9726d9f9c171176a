#include "tarn/address.hpp"

#include "tarn/error.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>

namespace tarn {
namespace {

constexpr u128 width_mask(int width) noexcept {
    return width >= 128 ? ~u128{0} : ((u128{1} << width) - 1);
}

// Mask selecting the host part of an address for a prefix of `length`.
constexpr u128 host_mask(int width, int length) noexcept {
    const int host = width - length;
    return host >= 128 ? ~u128{0} : ((u128{1} << host) - 1);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

} // namespace

Address Address::from_bits(IpVersion version, u128 bits) {
    if ((bits & ~width_mask(address_width(version))) != 0) {
        throw Error(Errc::InvalidAddress, "value exceeds IPv4 width");
    }
    return Address(version, bits);
}

Address Address::parse(std::string_view text) {
    const std::string s(trim(text));
    if (s.find(':') != std::string::npos) {
        in6_addr a6{};
        if (inet_pton(AF_INET6, s.c_str(), &a6) != 1) {
            throw Error(Errc::InvalidAddress, "cannot parse '" + s + "'");
        }
        return from_bytes(std::span<const std::uint8_t>(a6.s6_addr, 16));
    }
    in_addr a4{};
    if (inet_pton(AF_INET, s.c_str(), &a4) != 1) {
        throw Error(Errc::InvalidAddress, "cannot parse '" + s + "'");
    }
    return Address::v4(ntohl(a4.s_addr));
}

std::vector<std::uint8_t> Address::to_bytes() const {
    const int n = width() / 8;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bits_ >> (8 * (n - 1 - i)));
    }
    return out;
}

Address Address::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 4 && bytes.size() != 16) {
        throw Error(Errc::InvalidAddress, "address must be 4 or 16 bytes");
    }
    u128 v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return Address(bytes.size() == 4 ? IpVersion::V4 : IpVersion::V6, v);
}

std::string Address::to_string() const {
    const auto bytes = to_bytes();
    char buf[INET6_ADDRSTRLEN] = {};
    const int family = version_ == IpVersion::V4 ? AF_INET : AF_INET6;
    inet_ntop(family, bytes.data(), buf, sizeof buf);
    return buf;
}

Prefix::Prefix(Address base, int length) : base_(base), length_(length) {
    if (length < 0 || length > base.width()) {
        throw Error(Errc::InvalidPrefix, "length " + std::to_string(length) + " out of range");
    }
    if ((base.bits() & host_mask(base.width(), length)) != 0) {
        throw Error(Errc::InvalidPrefix,
                    base.to_string() + "/" + std::to_string(length) + " has host bits set");
    }
}

Prefix Prefix::covering(Address addr, int length) {
    if (length < 0 || length > addr.width()) {
        throw Error(Errc::InvalidPrefix, "length " + std::to_string(length) + " out of range");
    }
    const u128 bits = addr.bits() & ~host_mask(addr.width(), length);
    return Prefix(Address::from_bits(addr.version(), bits), length);
}

Prefix Prefix::parse(std::string_view text) {
    text = trim(text);
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        throw Error(Errc::InvalidPrefix, "missing '/' in '" + std::string(text) + "'");
    }
    const Address base = Address::parse(text.substr(0, slash));
    const auto len_text = text.substr(slash + 1);
    int length = -1;
    const auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
    if (ec != std::errc{} || ptr != len_text.data() + len_text.size()) {
        throw Error(Errc::InvalidPrefix, "bad length in '" + std::string(text) + "'");
    }
    return Prefix(base, length);
}

u128 Prefix::last_offset() const noexcept { return host_mask(base_.width(), length_); }

bool Prefix::contains(const Address& a) const noexcept {
    if (a.version() != version()) return false;
    return (a.bits() & ~host_mask(a.width(), length_)) == base_.bits();
}

bool Prefix::contains(const Prefix& p) const noexcept {
    return p.version() == version() && p.length_ >= length_ && contains(p.base_);
}

Address Prefix::at(u128 offset) const {
    if (offset > last_offset()) throw Error(Errc::InvalidPrefix, "offset outside prefix");
    return Address::from_bits(version(), base_.bits() | offset);
}

std::string Prefix::to_string() const { return base_.to_string() + "/" + std::to_string(length_); }

PrefixPool::PrefixPool(std::vector<Prefix> prefixes) : prefixes_(std::move(prefixes)) {
    if (prefixes_.empty()) throw Error(Errc::InvalidPool, "pool is empty");
    const IpVersion v = prefixes_.front().version();
    for (const auto& p : prefixes_) {
        if (p.version() != v) throw Error(Errc::InvalidPool, "pool mixes IPv4 and IPv6 prefixes");
    }
    for (std::size_t i = 0; i < prefixes_.size(); ++i) {
        for (std::size_t j = i + 1; j < prefixes_.size(); ++j) {
            if (prefixes_[i].overlaps(prefixes_[j])) {
                throw Error(Errc::InvalidPool, prefixes_[i].to_string() + " overlaps " +
                                                   prefixes_[j].to_string());
            }
        }
    }
    // Disjoint prefixes of one version sum to at most 2^width, so count-1 fits.
    u128 total_minus_one = prefixes_.front().last_offset();
    for (std::size_t i = 1; i < prefixes_.size(); ++i) {
        total_minus_one += prefixes_[i].last_offset() + 1;
    }
    last_offset_ = total_minus_one;
}

PrefixPool PrefixPool::parse(std::string_view text) {
    std::vector<Prefix> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = trim(text.substr(0, comma));
        if (!item.empty()) out.push_back(Prefix::parse(item));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return PrefixPool(std::move(out));
}

Address PrefixPool::at(u128 offset) const {
    for (const auto& p : prefixes_) {
        if (offset <= p.last_offset()) return p.at(offset);
        offset -= p.last_offset() + 1;
    }
    throw Error(Errc::InvalidPool, "offset outside pool");
}

bool PrefixPool::contains(const Address& a) const noexcept { return prefix_of(a).has_value(); }

std::optional<Prefix> PrefixPool::prefix_of(const Address& a) const noexcept {
    const auto it = std::find_if(prefixes_.begin(), prefixes_.end(),
                                 [&](const Prefix& p) { return p.contains(a); });
    if (it == prefixes_.end()) return std::nullopt;
    return *it;
}

std::string PrefixPool::to_string() const {
    std::string out;
    for (const auto& p : prefixes_) {
        if (!out.empty()) out += ',';
        out += p.to_string();
    }
    return out;
}

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v != 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

} // namespace tarn
