#include "tarn/route.hpp"

#include "tarn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace tarn {

AsGraph AsGraph::from_edge_list(std::string_view text, Duration link_delay) {
    AsGraph g(link_delay);
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long long a = 0;
        long long b = 0;
        if (!(ls >> a)) continue;
        std::string rest;
        if (!(ls >> b) || (ls >> rest) || a <= 0 || b <= 0 || a > 0xffffffffLL || b > 0xffffffffLL) {
            throw Error(Errc::ParseError, fmt::format("topology line {}: expected 'asn asn'", lineno));
        }
        g.add_link(static_cast<Asn>(a), static_cast<Asn>(b));
    }
    return g;
}

void AsGraph::add_node(Asn asn) {
    auto& n = nodes_[asn];
    n.asn = asn;
}

void AsGraph::add_link(Asn a, Asn b) {
    if (a == b) throw Error(Errc::InvalidArgument, fmt::format("self-link on AS{}", a));
    add_node(a);
    add_node(b);
    nodes_[a].neighbors.insert(b);
    nodes_[b].neighbors.insert(a);
}

const AsNode& AsGraph::node(Asn asn) const {
    const auto it = nodes_.find(asn);
    if (it == nodes_.end()) throw Error(Errc::UnknownAs, fmt::format("AS{} is not in the graph", asn));
    return it->second;
}

AsNode& AsGraph::mutable_node(Asn asn) {
    const auto it = nodes_.find(asn);
    if (it == nodes_.end()) throw Error(Errc::UnknownAs, fmt::format("AS{} is not in the graph", asn));
    return it->second;
}

std::set<std::pair<Asn, Asn>> AsGraph::links() const {
    std::set<std::pair<Asn, Asn>> out;
    for (const auto& [asn, n] : nodes_) {
        for (Asn nb : n.neighbors) out.insert({std::min(asn, nb), std::max(asn, nb)});
    }
    return out;
}

std::optional<Asn> AsGraph::origin_of(const Prefix& prefix) const {
    const auto it = origins_.find(prefix);
    if (it == origins_.end()) return std::nullopt;
    return it->second;
}

std::vector<UpdateMessage> AsGraph::reselect(AsNode& node, const Prefix& prefix) {
    std::optional<Route> best;
    if (node.originated.contains(prefix)) {
        best = Route{{}, node.asn};
    } else if (const auto it = node.adj_rib_in.find(prefix); it != node.adj_rib_in.end()) {
        for (const auto& [neighbor, path] : it->second) {
            // Map iteration is by ascending neighbor, so strict < keeps the lowest ASN on ties.
            if (!best || path.size() < best->path.size()) best = Route{path, neighbor};
        }
    }

    const auto current = node.rib.find(prefix);
    const bool had = current != node.rib.end();
    if ((!best && !had) || (best && had && current->second == *best)) return {};

    std::optional<std::vector<Asn>> advertised;
    if (best) {
        if (std::find(best->path.begin(), best->path.end(), node.asn) != best->path.end()) {
            throw std::logic_error(fmt::format("loop: AS{} in its own path", node.asn));
        }
        node.rib[prefix] = *best;
        std::vector<Asn> path;
        path.reserve(best->path.size() + 1);
        path.push_back(node.asn);
        path.insert(path.end(), best->path.begin(), best->path.end());
        advertised = std::move(path);
    } else {
        node.rib.erase(current);
    }

    std::vector<UpdateMessage> sent;
    for (Asn nb : node.neighbors) {
        UpdateMessage msg{node.asn, nb, prefix, advertised, now_ + link_delay_, next_seq_++};
        queue_.emplace(std::make_pair(msg.deliver_at, msg.seq), msg);
        sent.push_back(std::move(msg));
    }
    return sent;
}

void AsGraph::deliver(const UpdateMessage& msg) {
    auto& node = mutable_node(msg.to);
    auto& in = node.adj_rib_in[msg.prefix];
    const bool loops = msg.path && std::find(msg.path->begin(), msg.path->end(), node.asn) != msg.path->end();
    if (msg.path && !loops) {
        in[msg.from] = *msg.path;
    } else {
        in.erase(msg.from);
    }
    if (in.empty()) node.adj_rib_in.erase(msg.prefix);
    reselect(node, msg.prefix);
}

std::size_t AsGraph::process_front() {
    auto it = queue_.begin();
    const UpdateMessage msg = it->second;
    queue_.erase(it);
    now_ = std::max(now_, msg.deliver_at);
    deliver(msg);
    return 1;
}

std::size_t AsGraph::advance_to(SimTime t) {
    std::size_t steps = 0;
    while (!queue_.empty() && queue_.begin()->first.first <= t) steps += process_front();
    now_ = std::max(now_, t);
    return steps;
}

std::vector<UpdateMessage> announce(AsGraph& graph, const Prefix& prefix, Asn origin) {
    auto& node = graph.mutable_node(origin);
    if (const auto it = graph.origins_.find(prefix); it != graph.origins_.end()) {
        if (it->second == origin) return {};
        throw Error(Errc::MoasConflict, fmt::format("{} is already originated by AS{}", prefix.to_string(),
                                                    it->second));
    }
    graph.origins_[prefix] = origin;
    graph.log_.push_back({AnnouncementKind::Announce, prefix, origin, ++graph.origin_seq_[origin], graph.now_});
    node.originated.insert(prefix);
    return graph.reselect(node, prefix);
}

std::vector<UpdateMessage> withdraw(AsGraph& graph, const Prefix& prefix, Asn origin) {
    auto& node = graph.mutable_node(origin);
    const auto it = graph.origins_.find(prefix);
    if (it == graph.origins_.end() || it->second != origin) {
        throw Error(Errc::NotAnnounced, fmt::format("AS{} does not originate {}", origin, prefix.to_string()));
    }
    graph.origins_.erase(it);
    graph.log_.push_back({AnnouncementKind::Withdraw, prefix, origin, ++graph.origin_seq_[origin], graph.now_});
    node.originated.erase(prefix);
    return graph.reselect(node, prefix);
}

std::size_t converge(AsGraph& graph) {
    std::size_t steps = 0;
    while (!graph.queue_.empty()) steps += graph.process_front();
    return steps;
}

std::optional<std::pair<Prefix, Route>> lookup_route(const AsGraph& graph, Asn at, const Address& dst) {
    const auto& node = graph.node(at);
    const std::pair<const Prefix, Route>* best = nullptr;
    for (const auto& entry : node.rib) {
        if (!entry.first.contains(dst)) continue;
        if (best == nullptr || entry.first.length() > best->first.length()) best = &entry;
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

std::optional<std::vector<Asn>> route_lookup(const AsGraph& graph, Asn from, const Address& dst) {
    std::vector<Asn> path;
    std::set<Asn> visited{from};
    Asn at = from;
    for (;;) {
        const auto route = lookup_route(graph, at, dst);
        if (!route) return std::nullopt;
        if (route->second.path.empty()) return path;
        at = route->second.next_hop;
        if (!visited.insert(at).second) return std::nullopt;
        path.push_back(at);
    }
}

std::string format_announcement_log(const AsGraph& graph) {
    std::string out;
    for (const auto& a : graph.announcement_log()) {
        out += fmt::format("{},{},{},{}\n", to_ms(a.at),
                           a.kind == AnnouncementKind::Announce ? "announce" : "withdraw",
                           a.prefix.to_string(), a.origin);
    }
    return out;
}

} // namespace tarn
