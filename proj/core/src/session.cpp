#include "tarn/session.hpp"

#include "tarn/error.hpp"
#include "tarn/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <stdexcept>

namespace tarn {

void EventQueue::schedule(SimTime t, Action action) { queue_.push({t, next_seq_++, std::move(action)}); }

SimTime EventQueue::run_next() {
    // Move the action out before popping: it may schedule further events.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    ev.action();
    return ev.t;
}

namespace {

constexpr std::uint64_t kDhmmStream = 1;
constexpr std::uint64_t kUniformStream = 2;

} // namespace

std::vector<Duration> dwell_sequence(const DwellSource& source, std::uint64_t seed, std::size_t n,
                                     const ModelRegistry& models) {
    if (const auto* f = std::get_if<FixedDwell>(&source)) return std::vector<Duration>(n, f->dwell);
    if (const auto* u = std::get_if<UniformDwell>(&source)) {
        Rng rng(derive_seed(seed, kUniformStream));
        std::vector<Duration> out;
        out.reserve(n);
        const auto span = static_cast<std::uint64_t>((u->max - u->min).count());
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(u->min + Duration{static_cast<std::int64_t>(uniform_u64(rng, span))});
        }
        return out;
    }
    const auto& id = std::get<DhmmDwell>(source).model_id;
    const auto it = models.find(id);
    if (it == models.end()) throw Error(Errc::UnknownModel, fmt::format("no dwell model '{}'", id));
    auto sampler = start_sampler(it->second, derive_seed(seed, kDhmmStream));
    return sample_dwells(sampler, n);
}

HopSchedule synchronize(const SyncPayload& payload, std::size_t n_hops, const ModelRegistry& models) {
    const auto source = parse_dwell_source(payload.dwell_model_id);
    const auto dwells = dwell_sequence(source, payload.seed, n_hops, models);
    return build_schedule(payload.seed, payload.pool, n_hops, dwells);
}

HopEffects hop(EndpointAgent& agent, std::size_t index, SimTime now, Duration grace, Duration withdraw_lag) {
    const auto* schedule = std::get_if<HopSchedule>(&agent.schedule);
    if (schedule == nullptr) throw Error(Errc::ScheduleExhausted, "a static endpoint has no schedule");
    if (index >= schedule->size()) {
        throw Error(Errc::ScheduleExhausted,
                    fmt::format("hop {} requested, schedule holds {}", index, schedule->size()));
    }
    const Address next = (*schedule)[index].address;
    HopEffects fx{index, next, agent.active_external, std::nullopt, std::nullopt};
    agent.hop_table = install_hop_rules(agent.hop_table, agent.internal_ip, next, GraceMode::KeepInbound);
    agent.active_index = index;
    agent.active_external = next;
    if (fx.previous) {
        fx.grace_expires = now + grace;
        fx.release_previous = now + withdraw_lag;
    }
    return fx;
}

std::vector<Duration> send_offsets(const TrafficConfig& traffic, Duration horizon) {
    std::vector<Duration> out;
    out.reserve(traffic.packets);
    const auto count = static_cast<std::int64_t>(traffic.packets);
    for (std::int64_t k = 0; k < count; ++k) {
        if (traffic.gap) {
            out.push_back(*traffic.gap * k);
        } else {
            // floor(k * H / count) without overflow for realistic horizons.
            out.push_back(Duration{static_cast<std::int64_t>(static_cast<__int128>(k) * horizon.count() / count)});
        }
    }
    return out;
}

std::vector<std::string> check_expectations(const ScenarioConfig& config, const SessionMetrics& metrics) {
    std::vector<std::string> out;
    if (config.expect.delivered && *config.expect.delivered != metrics.packets_delivered) {
        out.push_back(fmt::format("expect.delivered: expected {}, got {}", *config.expect.delivered,
                                  metrics.packets_delivered));
    }
    if (config.expect.distinct_ips && *config.expect.distinct_ips != metrics.distinct_external_ips_used) {
        out.push_back(fmt::format("expect.distinct_ips: expected {}, got {}", *config.expect.distinct_ips,
                                  metrics.distinct_external_ips_used));
    }
    return out;
}

namespace {

struct PacketInfo {
    SimTime sent_at;
    std::size_t window = 0;
    bool delivered = false;
};

class Simulation {
public:
    Simulation(const ScenarioConfig& config, const RunOptions& options)
        : cfg_(config), opts_(options), graph_(config.link_delay), t0_(at_ms(config.lead_time.count())) {}

    ScenarioResult run();

private:
    EndpointAgent& agent(Role r) { return agents_[r == Role::Client ? 0 : 1]; }
    EndpointAgent& peer_of(Role r) { return agent(r == Role::Client ? Role::Server : Role::Client); }

    void trace(std::string_view component, std::string_view event, const std::string& details) {
        if (opts_.record_trace) out_.trace.push_back(fmt::format("{},{},{},{}", to_ms(now_), component, event, details));
    }

    void setup_agents();
    void bootstrap(Role role);
    void schedule_hops(Role role);
    void setup_adversary();
    void schedule_traffic();
    void finish_metrics();

    void claim(const Prefix& p, Asn origin);
    void release(const Prefix& p, Asn origin);

    std::optional<Packet> apply_tables(const EndpointAgent& a, const Packet& p, Direction d);
    bool cross(Asn from, Asn to, const Packet& p);
    void drop(const Packet& p, std::string_view reason);
    void host_send(EndpointAgent& a, Packet p);
    void border_out(EndpointAgent& a, Packet p);
    void as_forward(Asn at, Packet p);
    void host_receive(EndpointAgent& a, Packet p);
    EndpointAgent* agent_at(Asn asn);

    const ScenarioConfig& cfg_;
    RunOptions opts_;
    ScenarioResult out_;
    AsGraph graph_;
    EventQueue queue_;
    SimTime now_{};
    SimTime t0_;
    std::array<EndpointAgent, 2> agents_;
    ReverseZone zone_;
    std::map<Prefix, std::size_t> claims_;
    BlockPolicy policy_;
    std::optional<ReactiveBlocker> blocker_;
    std::set<Address> flagged_;
    std::vector<PacketInfo> packets_;
};

void Simulation::claim(const Prefix& p, Asn origin) {
    if (claims_[p]++ > 0) return;
    announce(graph_, p, origin);
    trace("route", "announce", fmt::format("prefix={} origin={}", p.to_string(), origin));
}

void Simulation::release(const Prefix& p, Asn origin) {
    auto it = claims_.find(p);
    if (it == claims_.end() || it->second == 0) throw std::logic_error("prefix released more often than claimed");
    if (--it->second > 0) return;
    claims_.erase(it);
    withdraw(graph_, p, origin);
    trace("route", "withdraw", fmt::format("prefix={} origin={}", p.to_string(), origin));
}

void Simulation::setup_agents() {
    for (Role role : {Role::Client, Role::Server}) {
        const auto& ec = endpoint_config(cfg_, role);
        auto& a = agent(role);
        a.role = role;
        a.internal_ip = ec.internal;
        a.deployment = ec.deployment;
        a.attached_as = ec.as;
        if (ec.hopping()) continue;
        a.schedule = *ec.static_address;
        a.active_external = *ec.static_address;
        if (ec.internal != *ec.static_address) {
            a.hop_table = install_hop_rules(a.hop_table, ec.internal, *ec.static_address);
        } else {
            a.hop_table = FlowTable::transit();
        }
        trace(to_string(role), "static", fmt::format("internal={} external={}", ec.internal.to_string(),
                                                     ec.static_address->to_string()));
        claim(ec.prefix.value_or(Prefix::host(*ec.static_address)), ec.as);
    }
    // Whoever talks to a static endpoint addresses it directly.
    for (Role role : {Role::Client, Role::Server}) {
        const auto& ec = endpoint_config(cfg_, role);
        if (ec.hopping() || ec.internal == *ec.static_address) continue;
        auto& peer = peer_of(role);
        peer.peer_table = install_peer_rules(peer.peer_table, ec.internal, *ec.static_address);
    }
}

void Simulation::bootstrap(Role role) {
    const auto& ec = endpoint_config(cfg_, role);
    const std::string peer_name(to_string(role == Role::Client ? Role::Server : Role::Client));
    const SyncPayload payload{endpoint_seed(cfg_, role), *ec.pool, dwell_source_id(cfg_.dwell), t0_};
    const auto records = encode_payload(payload, *ec.anchor);
    zone_.register_records(records);
    trace("dns", "register", fmt::format("owner={} anchor={} names={}", to_string(role), ec.anchor->to_string(),
                                         records.names.size()));
    const auto answer = zone_.lookup(*ec.anchor, now_, peer_name);
    trace("dns", "lookup", fmt::format("querier={} anchor={} answers={}", peer_name, ec.anchor->to_string(),
                                       answer.names.size()));
    const auto decoded = decode_payload(answer);
    auto own = synchronize(payload, cfg_.n_hops, cfg_.models);
    const auto peer_view = synchronize(decoded, cfg_.n_hops, cfg_.models);
    if (own != peer_view) throw std::logic_error("endpoints derived different hop schedules");
    trace("dns", "synchronized", fmt::format("owner={} entries={} seed={}", to_string(role), own.size(), own.seed()));
    agent(role).schedule = std::move(own);
}

void Simulation::schedule_hops(Role role) {
    auto& a = agent(role);
    const auto& schedule = std::get<HopSchedule>(a.schedule);
    const auto& pool = *endpoint_config(cfg_, role).pool;
    const Asn origin = a.attached_as;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const SimTime start = t0_ + schedule.window_start(i);
        const Prefix prefix = *pool.prefix_of(schedule[i].address);
        queue_.schedule(std::max(SimTime{}, start - cfg_.lead_time), [this, prefix, origin] { claim(prefix, origin); });
        queue_.schedule(start, [this, role, i, prefix, &pool] {
            auto& self = agent(role);
            if (graph_.origin_of(prefix) != self.attached_as) {
                throw std::logic_error("hop entered before its prefix was announced");
            }
            const auto fx = hop(self, i, now_, cfg_.grace_window, cfg_.withdraw_lag);
            trace(to_string(role), "hop",
                  fmt::format("index={} external={}{}", i, fx.current.to_string(),
                              fx.previous ? " previous=" + fx.previous->to_string() : std::string()));
            if (fx.grace_expires) {
                queue_.schedule(*fx.grace_expires, [this, role, old = *fx.previous] {
                    auto& me = agent(role);
                    me.hop_table = expire_grace(me.hop_table, old);
                    trace(to_string(role), "grace_expire", "address=" + old.to_string());
                });
            }
            if (fx.release_previous) {
                queue_.schedule(*fx.release_previous, [this, old = *pool.prefix_of(*fx.previous), origin = self.attached_as] {
                    release(old, origin);
                });
            }
        });
        const SimTime seen = std::max(SimTime{}, start + cfg_.clock_skew);
        queue_.schedule(seen, [this, role, address = schedule[i].address, i] {
            auto& tracker = peer_of(role);
            tracker.peer_table = install_peer_rules(tracker.peer_table, agent(role).internal_ip, address);
            trace(to_string(tracker.role), "peer_update", fmt::format("index={} peer_external={}", i, address.to_string()));
        });
    }
    if (!schedule.empty()) {
        const Prefix last = *pool.prefix_of(schedule[schedule.size() - 1].address);
        queue_.schedule(t0_ + schedule.total_duration() + cfg_.withdraw_lag,
                        [this, last, origin] { release(last, origin); });
    }
}

void Simulation::setup_adversary() {
    const auto& ac = cfg_.adversary;
    if (ac.policy == AdversaryPolicy::Static) {
        policy_ = BlockPolicy::static_block(ac.block);
        out_.metrics.block_landed_at = SimTime{};
    } else if (ac.policy == AdversaryPolicy::Reactive) {
        policy_ = BlockPolicy::reactive(ac.detect_delay, ac.block);
        blocker_.emplace(ac.detect_delay, ac.trigger_count);
        if (!ac.block.empty()) out_.metrics.block_landed_at = SimTime{};
    }
    if (ac.policy == AdversaryPolicy::None && !ac.tap && !ac.timing_model) return;

    Link link;
    if (ac.tap) {
        link = *ac.tap;
    } else {
        const auto& neighbors = graph_.node(cfg_.client.as).neighbors;
        link = neighbors.empty() ? Link::make(cfg_.client.as, 0) : Link::make(cfg_.client.as, *neighbors.begin());
    }
    out_.tap.emplace(link);
    trace("adversary", "tap", "link=" + link.to_string());

    // The reactive adversary recognizes the protected service's traffic; its
    // addresses stand in for that classification.
    const auto& server = agent(Role::Server);
    if (const auto* s = std::get_if<HopSchedule>(&server.schedule)) {
        for (const auto& e : s->entries()) flagged_.insert(e.address);
    } else {
        flagged_.insert(std::get<Address>(server.schedule));
    }
}

void Simulation::schedule_traffic() {
    Duration horizon{0};
    if (const auto* s = std::get_if<HopSchedule>(&agent(Role::Server).schedule)) {
        horizon = s->total_duration();
    } else if (cfg_.traffic.packets > 0 && !cfg_.traffic.gap) {
        const auto dwells = dwell_sequence(cfg_.dwell, endpoint_seed(cfg_, Role::Server), cfg_.n_hops, cfg_.models);
        for (auto d : dwells) horizon += d;
    }
    const auto offsets = send_offsets(cfg_.traffic, horizon);
    packets_.reserve(offsets.size());
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        queue_.schedule(t0_ + offsets[k], [this, k] {
            auto& client = agent(Role::Client);
            const auto& server = agent(Role::Server);
            Packet p{PacketKind::Ip, client.internal_ip, server.internal_ip, k, cfg_.traffic.payload_len, now_};
            std::size_t window = 0;
            if (const auto* s = std::get_if<HopSchedule>(&server.schedule); s && !s->empty()) {
                const Duration offset = now_ - t0_;
                window = offset >= s->total_duration() ? s->size() - 1 : active_address(*s, offset).index;
            }
            packets_.push_back({now_, window, false});
            ++out_.metrics.packets_sent;
            trace("traffic", "send", fmt::format("id={} window={}", k, window));
            host_send(client, p);
        });
    }
}

std::optional<Packet> Simulation::apply_tables(const EndpointAgent& a, const Packet& p, Direction d) {
    const auto first = apply(a.hop_table, p, d);
    const auto* f = std::get_if<Forwarded>(&first);
    if (f == nullptr) return std::nullopt;
    const auto second = apply(a.peer_table, f->packet, d);
    const auto* s = std::get_if<Forwarded>(&second);
    if (s == nullptr) return std::nullopt;
    return s->packet;
}

void Simulation::drop(const Packet& p, std::string_view reason) {
    if (reason == "unroutable") {
        ++out_.metrics.unroutable;
    } else if (reason == "blocked") {
        ++out_.metrics.blocked;
    } else {
        ++out_.metrics.dropped;
    }
    trace("traffic", "drop", fmt::format("id={} reason={} src={} dst={}", p.id, reason, p.src.to_string(),
                                         p.dst.to_string()));
}

bool Simulation::cross(Asn from, Asn to, const Packet& p) {
    if (!out_.tap || out_.tap->link() != Link::make(from, to)) return true;
    out_.tap->record({now_, p.src, p.dst, p.kind, from, to});
    trace("adversary", "observe", fmt::format("from={} to={} src={} dst={}", from, to, p.src.to_string(),
                                              p.dst.to_string()));
    if (blocker_) {
        if (const auto lands = blocker_->observe(now_, p.dst, flagged_.contains(p.dst))) {
            queue_.schedule(*lands, [this, dst = p.dst] {
                policy_.block(Prefix::host(dst));
                if (!out_.metrics.block_landed_at) out_.metrics.block_landed_at = now_;
                trace("adversary", "block", "address=" + dst.to_string());
            });
        }
    }
    if (filter(policy_, p) == Verdict::Block) {
        drop(p, "blocked");
        return false;
    }
    return true;
}

void Simulation::host_send(EndpointAgent& a, Packet p) {
    if (a.deployment == Deployment::HostAgent) {
        auto rewritten = apply_tables(a, p, Direction::Outbound);
        if (!rewritten) return drop(p, "egress");
        p = *rewritten;
    }
    if (!cross(0, a.attached_as, p)) return;
    queue_.schedule(now_ + cfg_.access_delay, [this, &a, p] { border_out(a, p); });
}

void Simulation::border_out(EndpointAgent& a, Packet p) {
    if (a.deployment == Deployment::Gateway) {
        auto rewritten = apply_tables(a, p, Direction::Outbound);
        if (!rewritten) return drop(p, "egress");
        p = *rewritten;
    }
    as_forward(a.attached_as, p);
}

EndpointAgent* Simulation::agent_at(Asn asn) {
    for (auto& a : agents_) {
        if (a.attached_as == asn) return &a;
    }
    return nullptr;
}

void Simulation::as_forward(Asn at, Packet p) {
    const auto route = lookup_route(graph_, at, p.dst);
    if (!route) return drop(p, "unroutable");
    if (route->second.path.empty()) {
        auto* host = agent_at(at);
        if (host == nullptr) return drop(p, "no_host");
        if (host->deployment == Deployment::Gateway) {
            auto rewritten = apply_tables(*host, p, Direction::Inbound);
            if (!rewritten) return drop(p, "ingress");
            p = *rewritten;
        }
        if (!cross(at, 0, p)) return;
        queue_.schedule(now_ + cfg_.access_delay, [this, host, p] { host_receive(*host, p); });
        return;
    }
    const Asn next = route->second.next_hop;
    if (!cross(at, next, p)) return;
    queue_.schedule(now_ + cfg_.link_delay, [this, next, p] { as_forward(next, p); });
}

void Simulation::host_receive(EndpointAgent& a, Packet p) {
    if (a.deployment == Deployment::HostAgent) {
        auto rewritten = apply_tables(a, p, Direction::Inbound);
        if (!rewritten) return drop(p, "ingress");
        p = *rewritten;
    }
    if (p.dst != a.internal_ip) {
        ++out_.metrics.misaddressed;
        return drop(p, "misaddressed");
    }
    packets_[p.id].delivered = true;
    ++out_.metrics.packets_delivered;
    trace("traffic", "deliver", fmt::format("id={} to={} latency_ms={}", p.id, to_string(a.role),
                                            (now_ - p.sent_at).count()));
}

void Simulation::finish_metrics() {
    auto& m = out_.metrics;
    if (packets_.empty()) return;
    const SimTime last_send = packets_.back().sent_at;
    std::map<std::size_t, std::size_t> delivered_per_window;
    for (const auto& info : packets_) {
        if (info.delivered) ++delivered_per_window[info.window];
        if (m.block_landed_at && info.sent_at >= *m.block_landed_at) {
            ++m.sent_after_block;
            if (info.delivered) ++m.delivered_after_block;
        }
    }
    const auto& server = agent(Role::Server);
    std::size_t entered = 1;
    if (const auto* s = std::get_if<HopSchedule>(&server.schedule)) {
        entered = 0;
        double total_ms = 0;
        std::set<Address> distinct;
        while (entered < s->size() && t0_ + s->window_start(entered) <= last_send) {
            distinct.insert((*s)[entered].address);
            total_ms += static_cast<double>((*s)[entered].dwell.count());
            ++entered;
        }
        m.distinct_external_ips_used = distinct.size();
        m.mean_dwell_ms = entered > 0 ? total_ms / static_cast<double>(entered) : 0.0;
    } else {
        m.distinct_external_ips_used = 1;
    }
    m.hop_count = entered > 0 ? entered - 1 : 0;
    for (std::size_t i = 0; i < entered; ++i) {
        const auto it = delivered_per_window.find(i);
        m.per_hop_delivery.emplace_back(i, it == delivered_per_window.end() ? 0 : it->second);
    }
}

ScenarioResult Simulation::run() {
    for (const auto& [a, b] : cfg_.topology) graph_.add_link(a, b);
    setup_agents();
    for (Role role : {Role::Server, Role::Client}) {
        if (endpoint_config(cfg_, role).hopping()) bootstrap(role);
    }
    for (Role role : {Role::Server, Role::Client}) {
        if (endpoint_config(cfg_, role).hopping()) schedule_hops(role);
    }
    setup_adversary();
    schedule_traffic();

    while (!queue_.empty()) {
        now_ = queue_.next_time();
        graph_.advance_to(now_);
        queue_.run_next();
    }
    converge(graph_);
    finish_metrics();

    if (const auto* s = std::get_if<HopSchedule>(&agent(Role::Server).schedule)) out_.server_schedule = *s;
    if (const auto* s = std::get_if<HopSchedule>(&agent(Role::Client).schedule)) out_.client_schedule = *s;
    out_.announcements = graph_.announcement_log();
    out_.dns_queries = zone_.queries();

    if (cfg_.adversary.timing_model && out_.tap) {
        const auto intervals = extract_hop_intervals(*out_.tap);
        if (!intervals.empty()) {
            const auto& model = *cfg_.models.at(*cfg_.adversary.timing_model);
            const double stat = timing_detect(intervals, model, model.alphabet());
            out_.detection = judge(stat, cfg_.adversary.timing_threshold);
        }
    }
    return std::move(out_);
}

} // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    validate(config);
    Simulation sim(config, options);
    return sim.run();
}

} // namespace tarn
