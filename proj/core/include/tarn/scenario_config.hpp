#pragma once

// Scenario files are INI-style: `[section]` headers, `key = value` lines and
// `;` or `#` comments. Unknown sections or keys are rejected so a typo cannot
// silently fall back to a default. Every validation failure is an
// Errc::ConfigError whose message starts with the offending `section.key`.
//
// [scenario]  seed, n_hops, grace_window_ms (200), lead_time_ms (1000),
//             withdraw_lag_ms (1000), link_delay_ms (10), access_delay_ms (1),
//             clock_skew_ms (0), mode (one-way | two-way)
// [topology]  file (edge list, relative to the scenario file) or edges (a-b, ...)
// [server]    internal, as, deployment (host | gateway), anchor, seed, and
// [client]    either pool (hopping) or static (+ optional prefix to announce)
// [dwell]     source (fixed | uniform | dhmm), fixed_ms, min_ms, max_ms, model
// [models]    <id> = <model file>
// [traffic]   packets, gap_ms (spread | <ms>), payload_len
// [adversary] policy (none | static | reactive), tap (a-b), block,
//             detect_delay_ms (5000), trigger_count (1), timing_model,
//             timing_threshold (0.05)
// [expect]    delivered, distinct_ips

#include "tarn/address.hpp"
#include "tarn/adversary.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/route.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace tarn {

enum class HopMode : std::uint8_t { OneWay, TwoWay };
enum class Deployment : std::uint8_t { HostAgent, Gateway };
enum class Role : std::uint8_t { Client, Server };

std::string_view to_string(Role r) noexcept;

struct FixedDwell {
    Duration dwell;
    friend bool operator==(const FixedDwell&, const FixedDwell&) = default;
};
/// Integer milliseconds uniform on [min, max].
struct UniformDwell {
    Duration min;
    Duration max;
    friend bool operator==(const UniformDwell&, const UniformDwell&) = default;
};
struct DhmmDwell {
    std::string model_id;
    friend bool operator==(const DhmmDwell&, const DhmmDwell&) = default;
};
using DwellSource = std::variant<FixedDwell, UniformDwell, DhmmDwell>;

/// `fixed:<ms>`, `uniform:<min>-<max>` or `dhmm:<id>`; carried in the sync payload.
std::string dwell_source_id(const DwellSource& source);
/// Throws Errc::ParseError.
DwellSource parse_dwell_source(std::string_view id);

using ModelRegistry = std::map<std::string, std::shared_ptr<const DhmmModel>>;

struct EndpointConfig {
    Address internal;
    Asn as = 0;
    Deployment deployment = Deployment::HostAgent;
    /// Set for a hopping endpoint.
    std::optional<PrefixPool> pool;
    /// Set for a static endpoint.
    std::optional<Address> static_address;
    /// Prefix announced for a static endpoint; defaults to the host prefix.
    std::optional<Prefix> prefix;
    /// Where a hopping endpoint publishes its sync payload.
    std::optional<Address> anchor;
    /// Explicit hop seed; derived from the scenario seed when absent.
    std::optional<std::uint64_t> seed;

    bool hopping() const noexcept { return pool.has_value(); }
};

struct TrafficConfig {
    std::size_t packets = 0;
    /// nullopt spreads the packets evenly over the server's schedule.
    std::optional<Duration> gap;
    std::uint32_t payload_len = 0;
};

enum class AdversaryPolicy : std::uint8_t { None, Static, Reactive };

struct AdversaryConfig {
    AdversaryPolicy policy = AdversaryPolicy::None;
    /// Defaults to the link from the client's AS to its lowest-numbered neighbor.
    std::optional<Link> tap;
    std::vector<Prefix> block;
    Duration detect_delay{5000};
    std::uint32_t trigger_count = 1;
    std::optional<std::string> timing_model;
    double timing_threshold = 0.05;
};

struct Expectations {
    std::optional<std::size_t> delivered;
    std::optional<std::size_t> distinct_ips;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::size_t n_hops = 0;
    Duration grace_window{200};
    Duration lead_time{1000};
    Duration withdraw_lag{1000};
    Duration link_delay{10};
    Duration access_delay{1};
    Duration clock_skew{0};
    HopMode mode = HopMode::OneWay;
    std::vector<std::pair<Asn, Asn>> topology;
    EndpointConfig server;
    EndpointConfig client;
    DwellSource dwell = FixedDwell{Duration{5000}};
    ModelRegistry models;
    TrafficConfig traffic;
    AdversaryConfig adversary;
    Expectations expect;
    /// `section.key=value` for every key as written, sorted; the hash input.
    std::map<std::string, std::string> canonical;
};

/// Throws Errc::ConfigError. Relative file references resolve against base_dir.
ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Throws Errc::ConfigError, including for a missing file.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Checks cross-field rules (references resolve, roles fit the mode, prefixes
/// do not collide). parse_config already calls this.
void validate(const ScenarioConfig& config);

/// Replaces the scenario seed; endpoint seeds that were derived follow it.
void override_seed(ScenarioConfig& config, std::uint64_t seed);

const EndpointConfig& endpoint_config(const ScenarioConfig& config, Role role) noexcept;
/// Hop seed of an endpoint: explicit, or derived from the scenario seed.
std::uint64_t endpoint_seed(const ScenarioConfig& config, Role role);

/// Lowercase hex SHA-256 of the canonical lines joined by newlines.
std::string config_hash(const ScenarioConfig& config);

} // namespace tarn
