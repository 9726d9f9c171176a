#pragma once

// Match-action tables emulating the SDN switch that translates between an
// endpoint's fixed internal address and its current external address.

#include "tarn/address.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace tarn {

enum class PacketKind : std::uint8_t { Ip, Arp };
enum class Direction : std::uint8_t { Inbound, Outbound };
enum class AddrField : std::uint8_t { Src, Dst };

std::string_view to_string(PacketKind k) noexcept;
std::string_view to_string(Direction d) noexcept;
std::string_view to_string(AddrField f) noexcept;

struct Packet {
    PacketKind kind = PacketKind::Ip;
    Address src;
    Address dst;
    std::uint64_t id = 0;
    std::uint32_t payload_len = 0;
    SimTime sent_at{};

    friend bool operator==(const Packet&, const Packet&) = default;
};

struct FlowMatch {
    PacketKind kind;
    Direction direction;
    AddrField field;
    Address value;

    friend auto operator<=>(const FlowMatch&, const FlowMatch&) = default;
    friend bool operator==(const FlowMatch&, const FlowMatch&) = default;
};

struct RewriteSrc {
    Address to;
    friend auto operator<=>(const RewriteSrc&, const RewriteSrc&) = default;
};
struct RewriteDst {
    Address to;
    friend auto operator<=>(const RewriteDst&, const RewriteDst&) = default;
};
struct Forward {
    friend auto operator<=>(const Forward&, const Forward&) = default;
};
struct Drop {
    friend auto operator<=>(const Drop&, const Drop&) = default;
};

using FlowAction = std::variant<RewriteSrc, RewriteDst, Forward, Drop>;

struct FlowRule {
    int priority = 0;
    FlowMatch match;
    FlowAction action;

    friend bool operator==(const FlowRule&, const FlowRule&) = default;
};

enum class DefaultAction : std::uint8_t { Forward, Drop };

/// Priority shared by every hop rule (own-address translation).
inline constexpr int kHopPriority = 100;
/// Priority of rules that track a hopping peer's address.
inline constexpr int kPeerPriority = 50;

/// Rules kept sorted by descending priority, insertion order within a priority.
/// Unmatched packets take the per-direction default.
class FlowTable {
public:
    FlowTable(DefaultAction inbound, DefaultAction outbound) : default_in_(inbound), default_out_(outbound) {}
    /// Drop unmatched inbound traffic, forward unmatched outbound traffic.
    static FlowTable endpoint() { return {DefaultAction::Drop, DefaultAction::Forward}; }
    static FlowTable transit() { return {DefaultAction::Forward, DefaultAction::Forward}; }

    /// Throws Errc::DuplicateRule for an identical (match, priority) and
    /// Errc::VersionMismatch for a rewrite target of another IP version.
    void add(FlowRule rule);
    template <class Pred>
    std::size_t remove_if(Pred pred) {
        return std::erase_if(rules_, pred);
    }

    const std::vector<FlowRule>& rules() const noexcept { return rules_; }
    DefaultAction default_action(Direction d) const noexcept {
        return d == Direction::Inbound ? default_in_ : default_out_;
    }

    friend bool operator==(const FlowTable&, const FlowTable&) = default;

private:
    std::vector<FlowRule> rules_;
    DefaultAction default_in_;
    DefaultAction default_out_;
};

enum class GraceMode : std::uint8_t {
    /// Remove every earlier hop rule.
    Replace,
    /// Keep earlier inbound dst-rewrite rules so in-flight packets to the
    /// previous external address still reach the host; expire_grace removes them.
    KeepInbound,
};

/// Four hop rules for {IP, ARP} x {Outbound src internal->external,
/// Inbound dst external->internal}, replacing earlier hop rules in one step.
/// Throws Errc::VersionMismatch, Errc::InvalidArgument if internal == external.
FlowTable install_hop_rules(const FlowTable& table, const Address& internal, const Address& external,
                            GraceMode mode = GraceMode::Replace);

/// Drops inbound hop rules for `old_external` unless it is the current external.
FlowTable expire_grace(const FlowTable& table, const Address& old_external);

/// Rules that follow a hopping peer: Outbound dst peer_internal->peer_external
/// and Inbound src peer_external->peer_internal, for IP and ARP.
FlowTable install_peer_rules(const FlowTable& table, const Address& peer_internal,
                             const Address& peer_external);

struct Forwarded {
    Packet packet;
    friend bool operator==(const Forwarded&, const Forwarded&) = default;
};
struct Dropped {
    friend bool operator==(const Dropped&, const Dropped&) = default;
};
using ApplyResult = std::variant<Forwarded, Dropped>;

/// Fires the highest-priority matching rule, or the default for `direction`.
ApplyResult apply(const FlowTable& table, const Packet& packet, Direction direction);

/// External addresses that currently have inbound hop rules.
std::set<Address> grace_set(const FlowTable& table);

/// One rule per line: `prio,kind,dir,field,match_addr,action,arg`.
std::string dump_table(const FlowTable& table);

} // namespace tarn
