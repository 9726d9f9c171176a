#include "tarn/covert.hpp"
#include "tarn/error.hpp"

#include "payloads.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace tarn {
namespace {

const Address kAnchor = Address::parse("192.0.2.53");

template <class F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no tarn::Error thrown";
    return Errc::InvalidArgument;
}

SyncPayload minimal() { return {0, PrefixPool::parse("184.164.243.0/24"), "", at_ms(0)}; }

TEST(Serialize, LayoutIsBigEndian) {
    const SyncPayload p{0x0102030405060708ULL, PrefixPool::parse("184.164.243.0/24"), "ab", at_ms(5)};
    const std::vector<std::uint8_t> expect{1, 1, 2, 3, 4, 5, 6, 7, 8, 0, 0, 0, 0, 0, 0, 0, 5,
                                           0, 2, 'a', 'b', 4, 0, 1, 24, 184, 164, 243, 0};
    EXPECT_EQ(serialize_payload(p), expect);
    EXPECT_EQ(deserialize_payload(expect), p);
}

TEST(Serialize, RejectsMalformedBuffers) {
    auto bytes = serialize_payload(minimal());
    EXPECT_EQ(error_of([&] { deserialize_payload(std::span(bytes).first(bytes.size() - 1)); }), Errc::MalformedRecord);
    bytes.push_back(0);
    EXPECT_EQ(error_of([&] { deserialize_payload(bytes); }), Errc::MalformedRecord);
    bytes.pop_back();
    bytes[0] = 2;
    EXPECT_EQ(error_of([&] { deserialize_payload(bytes); }), Errc::MalformedRecord);
}

TEST(Encode, MinimalPayloadRoundTrips) {
    const auto records = encode_payload(minimal(), kAnchor);
    ASSERT_GE(records.names.size(), 1U);
    EXPECT_EQ(records.anchor_ip, kAnchor);
    for (const auto& n : records.names) {
        EXPECT_TRUE(oracle::dns_name_ok(n)) << n;
        EXPECT_TRUE(n.ends_with(".example-cdn.net"));
    }
    EXPECT_EQ(decode_payload(records), minimal());
}

TEST(Encode, RandomPayloadsRoundTripUnderPermutation) {
    std::mt19937_64 gen(1000);
    for (int i = 0; i < 1000; ++i) {
        const auto p = oracle::random_payload(gen);
        auto records = encode_payload(p, kAnchor);
        std::shuffle(records.names.begin(), records.names.end(), gen);
        for (const auto& n : records.names) ASSERT_TRUE(oracle::dns_name_ok(n)) << n;
        ASSERT_EQ(decode_payload(records), p);
    }
}

TEST(Encode, DuplicateRecordsAreHarmless) {
    auto records = encode_payload(minimal(), kAnchor);
    records.names.push_back(records.names.front());
    EXPECT_EQ(decode_payload(records), minimal());
}

TEST(Encode, CustomTail) {
    const CovertOptions opts{"static.cdn-host.org"};
    const auto records = encode_payload(minimal(), kAnchor, opts);
    EXPECT_TRUE(records.names.front().ends_with(".static.cdn-host.org"));
    EXPECT_EQ(decode_payload(records, opts), minimal());
    EXPECT_EQ(error_of([&] { decode_payload(records); }), Errc::MalformedRecord);
}

std::vector<Prefix> v4_prefixes(std::size_t n) {
    std::vector<Prefix> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(Address::v4(static_cast<std::uint32_t>(i) << 8), 24);
    return out;
}

TEST(Encode, SizeBoundary) {
    // 22 fixed bytes plus 5 per v4 prefix: 815 prefixes make 4097 bytes.
    const SyncPayload over{1, PrefixPool(v4_prefixes(815)), "", at_ms(0)};
    ASSERT_EQ(serialize_payload(over).size(), 4097U);
    EXPECT_EQ(error_of([&] { encode_payload(over, kAnchor); }), Errc::PayloadTooLarge);

    const SyncPayload at_limit{1, PrefixPool(v4_prefixes(814)), "abcd", at_ms(0)};
    ASSERT_EQ(serialize_payload(at_limit).size(), 4096U);
    auto records = encode_payload(at_limit, kAnchor);
    std::reverse(records.names.begin(), records.names.end());
    EXPECT_EQ(decode_payload(records), at_limit);
}

TEST(Encode, SmallPayloadsStayDnsTypical) {
    std::mt19937_64 gen(512);
    for (int i = 0; i < 200; ++i) {
        const auto p = oracle::random_payload(gen, 60);
        if (serialize_payload(p).size() > 512) continue;
        const auto records = encode_payload(p, kAnchor);
        EXPECT_LE(records.names.size(), 16U);
        for (const auto& n : records.names) EXPECT_LE(n.size(), 253U);
    }
}

TEST(Decode, MissingNameIsIncomplete) {
    const SyncPayload p{7, PrefixPool(v4_prefixes(40)), "dhmm:background", at_ms(0)};
    const auto full = encode_payload(p, kAnchor);
    ASSERT_GT(full.names.size(), 2U);
    for (std::size_t drop = 0; drop < full.names.size(); ++drop) {
        auto records = full;
        records.names.erase(records.names.begin() + static_cast<std::ptrdiff_t>(drop));
        EXPECT_EQ(error_of([&] { decode_payload(records); }), Errc::IncompleteSet) << drop;
    }
    EXPECT_EQ(error_of([] { decode_payload({kAnchor, {}}); }), Errc::IncompleteSet);
}

TEST(Decode, SyntaxErrorsAreMalformed) {
    auto records = encode_payload(minimal(), kAnchor);
    records.names[0][0] = 'A';
    EXPECT_EQ(error_of([&] { decode_payload(records); }), Errc::MalformedRecord);
    EXPECT_EQ(error_of([] { decode_payload({kAnchor, {"ab.example-cdn.net"}}); }), Errc::MalformedRecord);
    EXPECT_EQ(error_of([] { decode_payload({kAnchor, {"a1aaaaaaaa.example-cdn.net"}}); }), Errc::MalformedRecord);
}

TEST(Decode, ConflictingDuplicatesFailIntegrity) {
    const SyncPayload a{1, PrefixPool::parse("10.0.0.0/8"), "", at_ms(0)};
    const SyncPayload b{2, PrefixPool::parse("10.0.0.0/8"), "", at_ms(0)};
    auto records = encode_payload(a, kAnchor);
    records.names.push_back(encode_payload(b, kAnchor).names[0]);
    EXPECT_EQ(error_of([&] { decode_payload(records); }), Errc::IntegrityFailure);
}

// Replacement alphabet for corruption: any host-name character but the one replaced.
char other_char(char c, std::mt19937_64& gen) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (;;) {
        const char r = alphabet[gen() % alphabet.size()];
        if (r != c) return r;
    }
}

TEST(Decode, SingleCharacterCorruptionIsDetected) {
    std::mt19937_64 gen(4);
    int detected = 0;
    constexpr int kTrials = 2000;
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto p = oracle::random_payload(gen);
        auto records = encode_payload(p, kAnchor);
        auto& name = records.names[gen() % records.names.size()];
        std::size_t pos = 0;
        do {
            pos = gen() % name.size();
        } while (name[pos] == '.');
        name[pos] = other_char(name[pos], gen);
        try {
            detected += decode_payload(records) == p ? 0 : 1;
        } catch (const Error&) {
            ++detected;
        }
    }
    EXPECT_GE(detected, kTrials * 999 / 1000);
}

TEST(DnsName, LibraryValidatorAgreesWithIndependentOne) {
    for (const auto* name : {"a.b", "example-cdn.net", "a-b.c", "-a.b", "a-.b", "a..b", "", "A.b", "a_b.c", ".a", "a."}) {
        EXPECT_EQ(is_valid_dns_name(name), oracle::dns_name_ok(name)) << name;
    }
    EXPECT_TRUE(is_valid_dns_name(std::string(63, 'a') + ".net"));
    EXPECT_FALSE(is_valid_dns_name(std::string(64, 'a') + ".net"));
    std::string long_name;
    while (long_name.size() < 250) long_name += "abcdefghi.";
    EXPECT_TRUE(is_valid_dns_name(long_name + "net"));
    EXPECT_FALSE(is_valid_dns_name(long_name + "nets"));
}

TEST(Zone, ReversePointerNames) {
    EXPECT_EQ(reverse_pointer_name(Address::parse("184.164.243.7")), "7.243.164.184.in-addr.arpa.");
    EXPECT_EQ(reverse_pointer_name(Address::parse("2001:db8::567:89ab")),
              "b.a.9.8.7.6.5.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.8.b.d.0.1.0.0.2.ip6.arpa.");
}

TEST(Zone, TextRoundTrip) {
    std::mt19937_64 gen(9);
    for (const auto& anchor : {kAnchor, Address::parse("2001:db8::53")}) {
        const auto records = encode_payload(oracle::random_payload(gen), anchor);
        const auto text = format_zone(records);
        EXPECT_TRUE(text.starts_with(reverse_pointer_name(anchor) + " PTR "));
        EXPECT_EQ(parse_zone(text), records);
    }
}

TEST(Zone, ParseErrors) {
    EXPECT_EQ(error_of([] { parse_zone(""); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_zone("53.2.0.192.in-addr.arpa. TXT x.net.\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_zone("53.2.0.192.in-addr.arpa. PTR a.net.\n54.2.0.192.in-addr.arpa. PTR b.net.\n"); }),
              Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_zone("300.2.0.192.in-addr.arpa. PTR a.net.\n"); }), Errc::ParseError);
}

TEST(Resolver, RegisterLookupAndIsolation) {
    ReverseZone zone;
    EXPECT_TRUE(resolver_lookup(zone, kAnchor).names.empty());
    const auto a = encode_payload(minimal(), kAnchor);
    const Address other = Address::parse("192.0.2.54");
    const auto b = encode_payload({9, PrefixPool::parse("10.0.0.0/8"), "x", at_ms(0)}, other);
    zone.register_records(a);
    zone.register_records(b);
    EXPECT_EQ(resolver_lookup(zone, kAnchor, at_ms(5), "client"), a);
    EXPECT_EQ(resolver_lookup(zone, other), b);
    ASSERT_EQ(zone.queries().size(), 3U);
    EXPECT_EQ(zone.queries()[1].querier, "client");
    EXPECT_EQ(zone.queries()[1].at, at_ms(5));
    EXPECT_EQ(zone.queries()[1].answers, a.names.size());
    EXPECT_EQ(zone.queries()[0].answers, 0U);
}

} // namespace
} // namespace tarn
