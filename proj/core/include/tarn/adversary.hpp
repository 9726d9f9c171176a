#pragma once

// On-path observer: passive taps on links, IP blocklists, and timing
// analysis of the address-change intervals an observer can reconstruct.

#include "tarn/address.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/flow.hpp"
#include "tarn/route.hpp"
#include "tarn/time.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

/// An undirected link between two ASes. {a, 0} is the access link between AS a
/// and its attached host.
struct Link {
    Asn a = 0;
    Asn b = 0;

    /// Orders the endpoints (an access link keeps 0 second).
    static Link make(Asn x, Asn y) noexcept;
    /// `a-b`.
    static Link parse(std::string_view text);
    std::string to_string() const;

    friend auto operator<=>(const Link&, const Link&) = default;
    friend bool operator==(const Link&, const Link&) = default;
};

struct TapRecord {
    SimTime t;
    Address src;
    Address dst;
    PacketKind kind;
    /// Crossing direction; 0 is the host side of an access link.
    Asn from;
    Asn to;

    friend bool operator==(const TapRecord&, const TapRecord&) = default;
};

class ObserverTap {
public:
    explicit ObserverTap(Link link) : link_(link) {}

    const Link& link() const noexcept { return link_; }
    const std::vector<TapRecord>& log() const noexcept { return log_; }
    /// Throws Errc::InvalidArgument if the record is older than the last one.
    void record(TapRecord r);

private:
    Link link_;
    std::vector<TapRecord> log_;
};

enum class BlockMode : std::uint8_t { Static, Reactive };

class BlockPolicy {
public:
    /// Empty static policy: passes everything.
    BlockPolicy() = default;
    static BlockPolicy static_block(std::vector<Prefix> blocked);
    /// Throws Errc::InvalidArgument unless detect_delay > 0.
    static BlockPolicy reactive(Duration detect_delay, std::vector<Prefix> initial = {});

    BlockMode mode() const noexcept { return mode_; }
    Duration detect_delay() const noexcept { return detect_delay_; }
    const std::vector<Prefix>& blocked() const noexcept { return blocked_; }
    void block(const Prefix& p);
    bool matches(const Address& a) const noexcept;

private:
    BlockMode mode_ = BlockMode::Static;
    Duration detect_delay_{0};
    std::vector<Prefix> blocked_;
};

enum class Verdict : std::uint8_t { Pass, Block };

/// Block iff src or dst lies inside a blocked prefix.
Verdict filter(const BlockPolicy& policy, const Packet& packet) noexcept;

/// Reactive trigger: once `trigger_count` packets toward a flagged destination
/// have been seen, that address is blocked `detect_delay` later.
class ReactiveBlocker {
public:
    ReactiveBlocker(Duration detect_delay, std::uint32_t trigger_count = 1);

    /// Returns the landing time when this observation crosses the trigger.
    std::optional<SimTime> observe(SimTime t, const Address& dst, bool flagged);
    /// Each destination triggers at most once.
    bool triggered(const Address& dst) const { return triggered_.contains(dst); }

private:
    Duration detect_delay_;
    std::uint32_t trigger_count_;
    std::map<Address, std::uint32_t> counts_;
    std::map<Address, SimTime> triggered_;
};

/// Packets are grouped by (crossing direction, source address); inside a group
/// the first observation and every change of destination address are change
/// points, and the result is the consecutive differences, groups in key order.
std::vector<Duration> extract_hop_intervals(const ObserverTap& tap);

/// L1 distance between the symbol histogram of `intervals` and the expected
/// symbol histogram of an equal-length run of `background` from its uniform
/// start distribution. Exact, so only the observed side carries sampling noise.
/// Throws Errc::EmptyInput, and Errc::InvalidArgument when `alphabet` is not
/// the model's own.
double timing_detect(std::span<const Duration> intervals, const DhmmModel& background,
                     const IntervalAlphabet& alphabet);

struct DetectionReport {
    double statistic = 0;
    double threshold = 0;
    /// True when the statistic exceeds the threshold.
    bool detected = false;
};

DetectionReport judge(double statistic, double threshold) noexcept;
/// `statistic,threshold,verdict` where verdict is `detected` or `undetected`.
std::string format_detection(const DetectionReport& report);

/// One `t,adversary,observe,<details>` line per record.
std::string format_tap_log(const ObserverTap& tap);

} // namespace tarn
