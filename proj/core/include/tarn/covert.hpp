#pragma once

// Hop-synchronization payload carried as PTR-style domain names.
//
// Wire format:
//   payload  = u8 format(1) | u64 seed | i64 epoch_ms | u16 len | model id
//              | u8 ip version (4|6) | u16 count | count x (u8 length | 4|16 address bytes)
//   frame    = u8 chunk_count | payload | u32 crc32(chunk_count | payload)
//   chunk i  = frame[40*i, 40*i+40)
//   name i   = split(b32(i, 2 chars) + b32(chunk i), 33-char labels) + "." + tail
// Integers are big-endian. b32 is RFC 4648 base32 in lowercase without
// padding; the two-character index is i encoded as two base32 digits.
// There is no authentication: the checksum only detects corruption.

#include "tarn/address.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

inline constexpr std::size_t kMaxPayloadBytes = 4096;
inline constexpr std::size_t kChunkBytes = 40;

struct SyncPayload {
    std::uint64_t seed = 0;
    PrefixPool pool;
    std::string dwell_model_id;
    SimTime epoch{};

    friend bool operator==(const SyncPayload&, const SyncPayload&) = default;
};

struct PtrRecordSet {
    Address anchor_ip;
    std::vector<std::string> names;

    friend bool operator==(const PtrRecordSet&, const PtrRecordSet&) = default;
};

struct CovertOptions {
    std::string domain_tail = "example-cdn.net";
};

std::vector<std::uint8_t> serialize_payload(const SyncPayload& payload);
/// Throws Errc::MalformedRecord on a structurally invalid buffer.
SyncPayload deserialize_payload(std::span<const std::uint8_t> bytes);

/// Throws Errc::PayloadTooLarge past kMaxPayloadBytes serialized bytes.
PtrRecordSet encode_payload(const SyncPayload& payload, const Address& anchor_ip,
                            const CovertOptions& options = {});

/// Order-independent. Throws Errc::MalformedRecord (syntax or tail),
/// Errc::IncompleteSet (missing chunk) or Errc::IntegrityFailure (checksum,
/// conflicting duplicates, inconsistent chunk sizes).
SyncPayload decode_payload(const PtrRecordSet& records, const CovertOptions& options = {});

/// RFC 1035/1123 host-name syntax restricted to [a-z0-9-] labels.
bool is_valid_dns_name(std::string_view name);

/// `7.243.164.184.in-addr.arpa.` or the nibble form under ip6.arpa.
std::string reverse_pointer_name(const Address& addr);

/// `<reversed-ip-name> PTR <name>.` per line.
std::string format_zone(const PtrRecordSet& records);
/// Throws Errc::ParseError on lines that are not PTR records or on records for
/// more than one owner.
PtrRecordSet parse_zone(std::string_view text);

struct DnsQuery {
    SimTime at;
    std::string querier;
    Address ip;
    std::size_t answers;
};

/// In-process registrar and resolver for reverse zones.
class ReverseZone {
public:
    void register_records(const PtrRecordSet& records);
    /// Records at ip (an empty set if none); every lookup is logged.
    PtrRecordSet lookup(const Address& ip, SimTime at = {}, std::string_view querier = "resolver");
    const std::vector<DnsQuery>& queries() const noexcept { return queries_; }

private:
    std::map<Address, std::vector<std::string>> records_;
    std::vector<DnsQuery> queries_;
};

PtrRecordSet resolver_lookup(ReverseZone& zone, const Address& ip, SimTime at = {},
                             std::string_view querier = "resolver");

} // namespace tarn
