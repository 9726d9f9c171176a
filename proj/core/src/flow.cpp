#include "tarn/flow.hpp"

#include "tarn/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace tarn {
namespace {

constexpr PacketKind kKinds[] = {PacketKind::Ip, PacketKind::Arp};

bool is_hop_rule(const FlowRule& r) { return r.priority == kHopPriority; }

bool is_inbound_hop_rule_for(const FlowRule& r, const Address& external) {
    return is_hop_rule(r) && r.match.direction == Direction::Inbound && r.match.field == AddrField::Dst &&
           r.match.value == external;
}

std::optional<Address> current_external(const FlowTable& table) {
    for (const auto& r : table.rules()) {
        if (!is_hop_rule(r) || r.match.direction != Direction::Outbound) continue;
        if (const auto* rw = std::get_if<RewriteSrc>(&r.action)) return rw->to;
    }
    return std::nullopt;
}

bool matches(const FlowMatch& m, const Packet& p, Direction d) {
    if (m.kind != p.kind || m.direction != d) return false;
    return (m.field == AddrField::Src ? p.src : p.dst) == m.value;
}

const Address* rewrite_target(const FlowAction& a) {
    if (const auto* s = std::get_if<RewriteSrc>(&a)) return &s->to;
    if (const auto* d = std::get_if<RewriteDst>(&a)) return &d->to;
    return nullptr;
}

} // namespace

std::string_view to_string(PacketKind k) noexcept { return k == PacketKind::Ip ? "IP" : "ARP"; }
std::string_view to_string(Direction d) noexcept { return d == Direction::Inbound ? "in" : "out"; }
std::string_view to_string(AddrField f) noexcept { return f == AddrField::Src ? "src" : "dst"; }

void FlowTable::add(FlowRule rule) {
    if (const Address* target = rewrite_target(rule.action);
        target != nullptr && target->version() != rule.match.value.version()) {
        throw Error(Errc::VersionMismatch, "rewrite target and match value differ in IP version");
    }
    for (const auto& r : rules_) {
        if (r.priority == rule.priority && r.match == rule.match) {
            throw Error(Errc::DuplicateRule, fmt::format("a rule at priority {} already matches {} {}",
                                                         rule.priority, to_string(rule.match.field),
                                                         rule.match.value.to_string()));
        }
    }
    // Insert after every rule of equal or higher priority.
    const auto pos = std::find_if(rules_.begin(), rules_.end(),
                                  [&](const FlowRule& r) { return r.priority < rule.priority; });
    rules_.insert(pos, std::move(rule));
}

FlowTable install_hop_rules(const FlowTable& table, const Address& internal, const Address& external,
                            GraceMode mode) {
    if (internal.version() != external.version()) {
        throw Error(Errc::VersionMismatch, "internal and external addresses differ in IP version");
    }
    if (internal == external) {
        throw Error(Errc::InvalidArgument, "internal and external addresses must differ");
    }
    FlowTable next = table;
    next.remove_if([&](const FlowRule& r) {
        if (!is_hop_rule(r)) return false;
        if (mode == GraceMode::KeepInbound && r.match.direction == Direction::Inbound &&
            r.match.value != external) {
            return false;
        }
        return true;
    });
    for (auto kind : kKinds) {
        next.add({kHopPriority, {kind, Direction::Outbound, AddrField::Src, internal}, RewriteSrc{external}});
        next.add({kHopPriority, {kind, Direction::Inbound, AddrField::Dst, external}, RewriteDst{internal}});
    }
    return next;
}

FlowTable expire_grace(const FlowTable& table, const Address& old_external) {
    if (current_external(table) == old_external) return table;
    FlowTable next = table;
    next.remove_if([&](const FlowRule& r) { return is_inbound_hop_rule_for(r, old_external); });
    return next;
}

FlowTable install_peer_rules(const FlowTable& table, const Address& peer_internal,
                             const Address& peer_external) {
    if (peer_internal.version() != peer_external.version()) {
        throw Error(Errc::VersionMismatch, "peer addresses differ in IP version");
    }
    FlowTable next = table;
    next.remove_if([](const FlowRule& r) { return r.priority == kPeerPriority; });
    for (auto kind : kKinds) {
        next.add({kPeerPriority, {kind, Direction::Outbound, AddrField::Dst, peer_internal},
                  RewriteDst{peer_external}});
        next.add({kPeerPriority, {kind, Direction::Inbound, AddrField::Src, peer_external},
                  RewriteSrc{peer_internal}});
    }
    return next;
}

ApplyResult apply(const FlowTable& table, const Packet& packet, Direction direction) {
    for (const auto& rule : table.rules()) {
        if (!matches(rule.match, packet, direction)) continue;
        return std::visit(
            [&](const auto& action) -> ApplyResult {
                using A = std::decay_t<decltype(action)>;
                Packet out = packet;
                if constexpr (std::is_same_v<A, RewriteSrc>) {
                    out.src = action.to;
                    return Forwarded{out};
                } else if constexpr (std::is_same_v<A, RewriteDst>) {
                    out.dst = action.to;
                    return Forwarded{out};
                } else if constexpr (std::is_same_v<A, Forward>) {
                    return Forwarded{out};
                } else {
                    return Dropped{};
                }
            },
            rule.action);
    }
    if (table.default_action(direction) == DefaultAction::Forward) return Forwarded{packet};
    return Dropped{};
}

std::set<Address> grace_set(const FlowTable& table) {
    std::set<Address> out;
    for (const auto& r : table.rules()) {
        if (is_hop_rule(r) && r.match.direction == Direction::Inbound && r.match.field == AddrField::Dst) {
            out.insert(r.match.value);
        }
    }
    return out;
}

std::string dump_table(const FlowTable& table) {
    std::string out;
    for (const auto& r : table.rules()) {
        std::string action;
        std::string arg;
        std::visit(
            [&](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, RewriteSrc>) {
                    action = "rewrite_src";
                    arg = a.to.to_string();
                } else if constexpr (std::is_same_v<A, RewriteDst>) {
                    action = "rewrite_dst";
                    arg = a.to.to_string();
                } else if constexpr (std::is_same_v<A, Forward>) {
                    action = "forward";
                } else {
                    action = "drop";
                }
            },
            r.action);
        out += fmt::format("{},{},{},{},{},{},{}\n", r.priority, to_string(r.match.kind),
                           to_string(r.match.direction), to_string(r.match.field),
                           r.match.value.to_string(), action, arg);
    }
    return out;
}

} // namespace tarn
