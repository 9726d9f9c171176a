#include "tarn/covert.hpp"

#include "tarn/error.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <optional>
#include <sstream>

namespace tarn {
namespace {

constexpr std::string_view kBase32 = "abcdefghijklmnopqrstuvwxyz234567";
constexpr std::size_t kLabelChars = 33;
constexpr std::uint8_t kFormatVersion = 1;

int base32_value(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    if (c >= '2' && c <= '7') return c - '2' + 26;
    return -1;
}

std::string base32_encode(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve((data.size() * 8 + 4) / 5);
    std::uint32_t buffer = 0;
    int bits = 0;
    for (auto byte : data) {
        buffer = (buffer << 8) | byte;
        bits += 8;
        while (bits >= 5) {
            out.push_back(kBase32[(buffer >> (bits - 5)) & 31U]);
            bits -= 5;
        }
    }
    if (bits > 0) out.push_back(kBase32[(buffer << (5 - bits)) & 31U]);
    return out;
}

std::optional<std::vector<std::uint8_t>> base32_decode(std::string_view text) {
    switch (text.size() % 8) {
    case 1: case 3: case 6: return std::nullopt;
    default: break;
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() * 5 / 8);
    std::uint32_t buffer = 0;
    int bits = 0;
    for (char c : text) {
        const int v = base32_value(c);
        if (v < 0) return std::nullopt;
        buffer = (buffer << 5) | static_cast<std::uint32_t>(v);
        bits += 5;
        if (bits >= 8) {
            out.push_back(static_cast<std::uint8_t>(buffer >> (bits - 8)));
            bits -= 8;
        }
        buffer &= (1U << bits) - 1;
    }
    if (buffer != 0) return std::nullopt;  // non-canonical trailing bits
    return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_++];
        return v;
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw Error(Errc::MalformedRecord, "payload truncated");
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize_payload(const SyncPayload& payload) {
    if (payload.dwell_model_id.size() > 0xffff || payload.pool.prefixes().size() > 0xffff) {
        throw Error(Errc::PayloadTooLarge, "payload field exceeds 16-bit length");
    }
    Writer w;
    w.u8(kFormatVersion);
    w.u64(payload.seed);
    w.u64(static_cast<std::uint64_t>(to_ms(payload.epoch)));
    w.u16(static_cast<std::uint16_t>(payload.dwell_model_id.size()));
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(payload.dwell_model_id.data()),
                      payload.dwell_model_id.size()));
    w.u8(static_cast<std::uint8_t>(payload.pool.version()));
    w.u16(static_cast<std::uint16_t>(payload.pool.prefixes().size()));
    for (const auto& p : payload.pool.prefixes()) {
        w.u8(static_cast<std::uint8_t>(p.length()));
        w.bytes(p.base().to_bytes());
    }
    return w.take();
}

SyncPayload deserialize_payload(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.get(1) != kFormatVersion) throw Error(Errc::MalformedRecord, "unknown payload format");
    const std::uint64_t seed = r.get(8);
    const auto epoch = static_cast<std::int64_t>(r.get(8));
    const auto id_len = static_cast<std::size_t>(r.get(2));
    const auto id = r.bytes(id_len);
    const auto version = r.get(1);
    if (version != 4 && version != 6) throw Error(Errc::MalformedRecord, "unknown IP version");
    const std::size_t addr_len = version == 4 ? 4 : 16;
    const auto count = static_cast<std::size_t>(r.get(2));
    std::vector<Prefix> prefixes;
    prefixes.reserve(count);
    try {
        for (std::size_t i = 0; i < count; ++i) {
            const int length = static_cast<int>(r.get(1));
            prefixes.emplace_back(Address::from_bytes(r.bytes(addr_len)), length);
        }
        if (!r.done()) throw Error(Errc::MalformedRecord, "trailing bytes after payload");
        return SyncPayload{seed, PrefixPool(std::move(prefixes)), std::string(id.begin(), id.end()),
                           at_ms(epoch)};
    } catch (const Error& e) {
        if (e.code() == Errc::MalformedRecord) throw;
        throw Error(Errc::MalformedRecord, e.what());
    }
}

PtrRecordSet encode_payload(const SyncPayload& payload, const Address& anchor_ip, const CovertOptions& options) {
    const auto body = serialize_payload(payload);
    if (body.size() > kMaxPayloadBytes) {
        throw Error(Errc::PayloadTooLarge, fmt::format("payload is {} bytes, limit {}", body.size(),
                                                       kMaxPayloadBytes));
    }
    const std::size_t frame_len = 1 + body.size() + 4;
    const std::size_t chunks = (frame_len + kChunkBytes - 1) / kChunkBytes;
    Writer w;
    w.u8(static_cast<std::uint8_t>(chunks));
    w.bytes(body);
    auto frame = w.take();
    const std::uint32_t crc = crc32(frame);
    for (int i = 3; i >= 0; --i) frame.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));

    PtrRecordSet out{anchor_ip, {}};
    out.names.reserve(chunks);
    for (std::size_t i = 0; i < chunks; ++i) {
        const auto begin = i * kChunkBytes;
        const auto len = std::min(kChunkBytes, frame.size() - begin);
        std::string text;
        text.push_back(kBase32[(i >> 5) & 31U]);
        text.push_back(kBase32[i & 31U]);
        text += base32_encode(std::span(frame).subspan(begin, len));
        std::string name;
        for (std::size_t pos = 0; pos < text.size(); pos += kLabelChars) {
            if (!name.empty()) name.push_back('.');
            name += text.substr(pos, kLabelChars);
        }
        name += '.';
        name += options.domain_tail;
        out.names.push_back(std::move(name));
    }
    return out;
}

SyncPayload decode_payload(const PtrRecordSet& records, const CovertOptions& options) {
    const std::string suffix = "." + options.domain_tail;
    std::map<std::size_t, std::vector<std::uint8_t>> chunks;
    for (const auto& name : records.names) {
        if (!is_valid_dns_name(name)) throw Error(Errc::MalformedRecord, "invalid domain name '" + name + "'");
        if (name.size() <= suffix.size() || !name.ends_with(suffix)) {
            throw Error(Errc::MalformedRecord, "unexpected domain tail in '" + name + "'");
        }
        std::string text;
        for (char c : std::string_view(name).substr(0, name.size() - suffix.size())) {
            if (c != '.') text.push_back(c);
        }
        if (text.size() < 3) throw Error(Errc::MalformedRecord, "record too short: '" + name + "'");
        const int hi = base32_value(text[0]);
        const int lo = base32_value(text[1]);
        auto data = base32_decode(std::string_view(text).substr(2));
        if (hi < 0 || lo < 0 || !data || data->empty()) {
            throw Error(Errc::MalformedRecord, "not a base32 record: '" + name + "'");
        }
        const auto index = static_cast<std::size_t>(hi * 32 + lo);
        // Compare before moving: an identical repeat of a record is harmless.
        if (const auto it = chunks.find(index); it != chunks.end()) {
            if (it->second != *data) {
                throw Error(Errc::IntegrityFailure, fmt::format("conflicting records for chunk {}", index));
            }
            continue;
        }
        chunks.emplace(index, std::move(*data));
    }
    if (chunks.empty() || !chunks.contains(0)) throw Error(Errc::IncompleteSet, "chunk 0 is missing");
    const std::size_t count = chunks.at(0).front();
    if (count == 0) throw Error(Errc::IntegrityFailure, "chunk count is zero");
    if (chunks.rbegin()->first >= count) {
        throw Error(Errc::IntegrityFailure, fmt::format("chunk {} beyond declared count {}",
                                                        chunks.rbegin()->first, count));
    }
    if (chunks.size() != count) {
        throw Error(Errc::IncompleteSet, fmt::format("{} of {} chunks present", chunks.size(), count));
    }
    std::vector<std::uint8_t> frame;
    for (const auto& [index, data] : chunks) {
        if ((index + 1 < count && data.size() != kChunkBytes) || data.size() > kChunkBytes) {
            throw Error(Errc::IntegrityFailure, fmt::format("chunk {} has {} bytes", index, data.size()));
        }
        frame.insert(frame.end(), data.begin(), data.end());
    }
    if (frame.size() < 5) throw Error(Errc::IntegrityFailure, "frame too short");
    const auto body_end = frame.size() - 4;
    std::uint32_t stored = 0;
    for (std::size_t i = body_end; i < frame.size(); ++i) stored = (stored << 8) | frame[i];
    if (crc32(std::span(frame).first(body_end)) != stored) {
        throw Error(Errc::IntegrityFailure, "checksum mismatch");
    }
    return deserialize_payload(std::span(frame).subspan(1, body_end - 1));
}

bool is_valid_dns_name(std::string_view name) {
    if (name.empty() || name.size() > 253) return false;
    std::size_t start = 0;
    for (;;) {
        const auto dot = name.find('.', start);
        const auto label = name.substr(start, dot == std::string_view::npos ? dot : dot - start);
        if (label.empty() || label.size() > 63 || label.front() == '-' || label.back() == '-') return false;
        for (char c : label) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
            if (!ok) return false;
        }
        if (dot == std::string_view::npos) return true;
        start = dot + 1;
    }
}

std::string reverse_pointer_name(const Address& addr) {
    const auto bytes = addr.to_bytes();
    std::string out;
    if (addr.version() == IpVersion::V4) {
        for (auto it = bytes.rbegin(); it != bytes.rend(); ++it) out += fmt::format("{}.", *it);
        return out + "in-addr.arpa.";
    }
    constexpr std::string_view hex = "0123456789abcdef";
    for (auto it = bytes.rbegin(); it != bytes.rend(); ++it) {
        out.push_back(hex[*it & 0xf]);
        out.push_back('.');
        out.push_back(hex[*it >> 4]);
        out.push_back('.');
    }
    return out + "ip6.arpa.";
}

namespace {

Address parse_reverse_name(std::string_view owner) {
    auto fail = [&] { return Error(Errc::ParseError, "not a reverse-pointer name: '" + std::string(owner) + "'"); };
    std::vector<std::string_view> labels;
    std::string_view rest = owner;
    if (rest.ends_with('.')) rest.remove_suffix(1);
    while (!rest.empty()) {
        const auto dot = rest.find('.');
        labels.push_back(rest.substr(0, dot));
        if (dot == std::string_view::npos) break;
        rest.remove_prefix(dot + 1);
    }
    if (labels.size() == 6 && labels[4] == "in-addr" && labels[5] == "arpa") {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            const auto l = labels[static_cast<std::size_t>(i)];
            int octet = 0;
            for (char c : l) {
                if (c < '0' || c > '9') throw fail();
                octet = octet * 10 + (c - '0');
            }
            if (l.empty() || l.size() > 3 || octet > 255) throw fail();
            v = (v << 8) | static_cast<std::uint32_t>(octet);
        }
        return Address::v4(v);
    }
    if (labels.size() == 34 && labels[32] == "ip6" && labels[33] == "arpa") {
        u128 v = 0;
        for (int i = 31; i >= 0; --i) {
            const auto l = labels[static_cast<std::size_t>(i)];
            if (l.size() != 1) throw fail();
            const char c = l[0];
            int nibble = -1;
            if (c >= '0' && c <= '9') nibble = c - '0';
            if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
            if (nibble < 0) throw fail();
            v = (v << 4) | static_cast<u128>(nibble);
        }
        return Address::v6(v);
    }
    throw fail();
}

} // namespace

std::string format_zone(const PtrRecordSet& records) {
    const auto owner = reverse_pointer_name(records.anchor_ip);
    std::string out;
    for (const auto& name : records.names) out += fmt::format("{} PTR {}.\n", owner, name);
    return out;
}

PtrRecordSet parse_zone(std::string_view text) {
    std::optional<Address> anchor;
    std::vector<std::string> names;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == ';') continue;
        std::istringstream ls(line);
        std::string owner;
        std::string type;
        std::string name;
        std::string extra;
        if (!(ls >> owner >> type >> name) || (ls >> extra) || type != "PTR") {
            throw Error(Errc::ParseError, fmt::format("zone line {}: expected '<owner> PTR <name>'", lineno));
        }
        const Address owner_ip = parse_reverse_name(owner);
        if (anchor && *anchor != owner_ip) {
            throw Error(Errc::ParseError, fmt::format("zone line {}: records for more than one owner", lineno));
        }
        anchor = owner_ip;
        if (name.ends_with('.')) name.pop_back();
        names.push_back(std::move(name));
    }
    if (!anchor) throw Error(Errc::ParseError, "zone has no records");
    return {*anchor, std::move(names)};
}

void ReverseZone::register_records(const PtrRecordSet& records) { records_[records.anchor_ip] = records.names; }

PtrRecordSet ReverseZone::lookup(const Address& ip, SimTime at, std::string_view querier) {
    PtrRecordSet out{ip, {}};
    if (const auto it = records_.find(ip); it != records_.end()) out.names = it->second;
    queries_.push_back({at, std::string(querier), ip, out.names.size()});
    return out;
}

PtrRecordSet resolver_lookup(ReverseZone& zone, const Address& ip, SimTime at, std::string_view querier) {
    return zone.lookup(ip, at, querier);
}

} // namespace tarn
