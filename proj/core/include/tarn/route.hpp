#pragma once

// Prefix-based path-vector routing between autonomous systems.
//
// Policy: a locally originated prefix always wins; otherwise the shortest
// AS path is preferred and ties go to the lowest neighbor ASN. Paths
// containing the receiving AS are discarded on arrival, so no installed path
// ever loops. Update messages travel with a fixed per-link delay and are
// processed in (delivery time, send order) order.

#include "tarn/address.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

using Asn = std::uint32_t;

struct Route {
    /// Next hop first, origin last; empty for a locally originated prefix.
    std::vector<Asn> path;
    /// The node itself for a local route.
    Asn next_hop = 0;

    friend bool operator==(const Route&, const Route&) = default;
};

struct AsNode {
    Asn asn = 0;
    std::set<Asn> neighbors;
    std::map<Prefix, Route> rib;
    std::set<Prefix> originated;
    /// Paths last advertised by each neighbor, per prefix.
    std::map<Prefix, std::map<Asn, std::vector<Asn>>> adj_rib_in;
};

enum class AnnouncementKind : std::uint8_t { Announce, Withdraw };

struct Announcement {
    AnnouncementKind kind;
    Prefix prefix;
    Asn origin;
    std::uint64_t seq;
    SimTime at;
};

struct UpdateMessage {
    Asn from;
    Asn to;
    Prefix prefix;
    /// Empty means withdraw.
    std::optional<std::vector<Asn>> path;
    SimTime deliver_at;
    std::uint64_t seq;
};

class AsGraph {
public:
    explicit AsGraph(Duration link_delay = Duration{10}) : link_delay_(link_delay) {}
    /// Edge list, one `asn asn` pair per line; `#` comments allowed.
    static AsGraph from_edge_list(std::string_view text, Duration link_delay = Duration{10});

    void add_node(Asn asn);
    /// Adds both endpoints if missing. Self-links are rejected.
    void add_link(Asn a, Asn b);

    bool contains(Asn asn) const noexcept { return nodes_.contains(asn); }
    const AsNode& node(Asn asn) const;
    const std::map<Asn, AsNode>& nodes() const noexcept { return nodes_; }
    std::set<std::pair<Asn, Asn>> links() const;

    Duration link_delay() const noexcept { return link_delay_; }
    SimTime now() const noexcept { return now_; }
    std::size_t pending() const noexcept { return queue_.size(); }
    /// Current origin of an announced prefix.
    std::optional<Asn> origin_of(const Prefix& prefix) const;

    /// Processes every message due at or before t, then sets the clock to t.
    /// Returns the number of messages processed.
    std::size_t advance_to(SimTime t);

    const std::vector<Announcement>& announcement_log() const noexcept { return log_; }

private:
    friend std::vector<UpdateMessage> announce(AsGraph&, const Prefix&, Asn);
    friend std::vector<UpdateMessage> withdraw(AsGraph&, const Prefix&, Asn);
    friend std::size_t converge(AsGraph&);

    AsNode& mutable_node(Asn asn);
    std::vector<UpdateMessage> reselect(AsNode& node, const Prefix& prefix);
    void deliver(const UpdateMessage& msg);
    std::size_t process_front();

    std::map<Asn, AsNode> nodes_;
    Duration link_delay_;
    SimTime now_{};
    std::map<std::pair<SimTime, std::uint64_t>, UpdateMessage> queue_;
    std::uint64_t next_seq_ = 0;
    std::map<Prefix, Asn> origins_;
    std::map<Asn, std::uint64_t> origin_seq_;
    std::vector<Announcement> log_;
};

/// Originates `prefix` at `origin` and queues updates to its neighbors.
/// Re-announcing from the same origin is a no-op. Throws Errc::UnknownAs and
/// Errc::MoasConflict when another AS already originates the prefix.
std::vector<UpdateMessage> announce(AsGraph& graph, const Prefix& prefix, Asn origin);

/// Throws Errc::NotAnnounced unless `origin` currently originates `prefix`.
std::vector<UpdateMessage> withdraw(AsGraph& graph, const Prefix& prefix, Asn origin);

/// Processes queued updates until none remain; returns the message count.
std::size_t converge(AsGraph& graph);

/// Longest-prefix-match route at `at`.
std::optional<std::pair<Prefix, Route>> lookup_route(const AsGraph& graph, Asn at, const Address& dst);

/// Hop-by-hop forwarding path from `from` to the origin covering dst (the
/// origin is the last element; empty when `from` is the origin). nullopt means
/// unroutable, including a forwarding loop seen mid-convergence.
/// Throws Errc::UnknownAs.
std::optional<std::vector<Asn>> route_lookup(const AsGraph& graph, Asn from, const Address& dst);

/// `t,kind,prefix,origin` per line.
std::string format_announcement_log(const AsGraph& graph);

} // namespace tarn
