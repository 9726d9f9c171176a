#pragma once

// Discrete-event run of a client/server pair over the simulated AS graph.
//
// Timeline of a run (t0 = lead_time):
//   t = 0            each hopping endpoint publishes its sync payload at its
//                    anchor, the peer resolves and decodes it; static prefixes
//                    are announced.
//   s_i - lead       prefix of schedule entry i is claimed (announced on the
//                    first claim).
//   s_i              hop rules for entry i installed, keeping the previous
//                    inbound rules; the tracking peer updates at s_i + skew.
//   s_i + grace      inbound rules of the previous address expire.
//   s_i + lag        claim on the previous entry's prefix released (withdrawn
//                    on the last release).
// with s_i = t0 + window_start(i). Packets move hop by hop: access links take
// access_delay, AS links link_delay, and each AS forwards by longest-prefix
// match on its current RIB.

#include "tarn/adversary.hpp"
#include "tarn/covert.hpp"
#include "tarn/flow.hpp"
#include "tarn/hopping.hpp"
#include "tarn/route.hpp"
#include "tarn/scenario_config.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

namespace tarn {

/// Events run in (time, insertion) order.
class EventQueue {
public:
    using Action = std::function<void()>;

    void schedule(SimTime t, Action action);
    bool empty() const noexcept { return queue_.empty(); }
    std::size_t size() const noexcept { return queue_.size(); }
    /// Time of the next event; queue must be non-empty.
    SimTime next_time() const { return queue_.top().t; }
    /// Pops and runs the next event, returning its time.
    SimTime run_next();

private:
    struct Event {
        SimTime t;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t next_seq_ = 0;
};

struct EndpointAgent {
    Role role = Role::Server;
    Address internal_ip;
    std::variant<HopSchedule, Address> schedule;
    /// Own-address translation (hop rules).
    FlowTable hop_table = FlowTable::endpoint();
    /// Rewrites that follow a hopping peer.
    FlowTable peer_table = FlowTable::transit();
    Deployment deployment = Deployment::HostAgent;
    Asn attached_as = 0;
    std::optional<std::size_t> active_index;
    std::optional<Address> active_external;

    bool hopping() const noexcept { return std::holds_alternative<HopSchedule>(schedule); }
};

/// Dwell sequence for a source: fixed, uniform, or sampled from a model.
/// Throws Errc::UnknownModel for a model id missing from the registry.
std::vector<Duration> dwell_sequence(const DwellSource& source, std::uint64_t seed, std::size_t n,
                                     const ModelRegistry& models);

/// Schedule both ends derive from a decoded payload: addresses from
/// (seed, pool), dwells from the payload's dwell source id seeded by the same
/// seed. Throws Errc::UnknownModel.
HopSchedule synchronize(const SyncPayload& payload, std::size_t n_hops, const ModelRegistry& models);

/// Follow-up work produced by one hop.
struct HopEffects {
    std::size_t index;
    Address current;
    std::optional<Address> previous;
    /// When the previous address stops accepting packets.
    std::optional<SimTime> grace_expires;
    /// When the previous entry's prefix claim is released.
    std::optional<SimTime> release_previous;
};

/// Makes schedule entry `index` active at `now`: installs its hop rules (the
/// previous inbound rules stay until the grace expiry) and returns the timers
/// the caller must arm. Throws Errc::ScheduleExhausted for an index past the
/// schedule or a static agent.
HopEffects hop(EndpointAgent& agent, std::size_t index, SimTime now, Duration grace, Duration withdraw_lag);

struct SessionMetrics {
    std::size_t packets_sent = 0;
    std::size_t packets_delivered = 0;
    std::size_t distinct_external_ips_used = 0;
    std::size_t hop_count = 0;
    double mean_dwell_ms = 0;
    /// (schedule index active at send time, delivered count) per entered entry.
    std::vector<std::pair<std::size_t, std::size_t>> per_hop_delivery;
    std::size_t blocked = 0;
    std::size_t unroutable = 0;
    std::size_t dropped = 0;
    /// Packets that reached the server with a destination other than its
    /// internal address; also counted in dropped.
    std::size_t misaddressed = 0;
    std::optional<SimTime> block_landed_at;
    std::size_t sent_after_block = 0;
    std::size_t delivered_after_block = 0;

    friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

struct RunOptions {
    /// Off for long runs where only metrics matter.
    bool record_trace = true;
};

struct ScenarioResult {
    SessionMetrics metrics;
    /// `t,component,event,details` lines.
    std::vector<std::string> trace;
    std::optional<ObserverTap> tap;
    std::optional<DetectionReport> detection;
    /// Empty for a static server.
    HopSchedule server_schedule;
    std::optional<HopSchedule> client_schedule;
    std::vector<Announcement> announcements;
    std::vector<DnsQuery> dns_queries;
};

/// Deterministic in the config. Throws Errc::ConfigError for an invalid config.
ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Send instants of the configured traffic relative to t0.
std::vector<Duration> send_offsets(const TrafficConfig& traffic, Duration horizon);

/// Config expectations that the metrics violate, one message each.
std::vector<std::string> check_expectations(const ScenarioConfig& config, const SessionMetrics& metrics);

} // namespace tarn
