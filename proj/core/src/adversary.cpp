#include "tarn/adversary.hpp"

#include "tarn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <tuple>

namespace tarn {

Link Link::make(Asn x, Asn y) noexcept {
    if (x == 0 || (y != 0 && y < x)) std::swap(x, y);
    return {x, y};
}

Link Link::parse(std::string_view text) {
    const auto dash = text.find('-');
    auto number = [&](std::string_view s) {
        Asn v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
            throw Error(Errc::ParseError, "invalid link '" + std::string(text) + "', expected 'asn-asn'");
        }
        return v;
    };
    if (dash == std::string_view::npos) {
        throw Error(Errc::ParseError, "invalid link '" + std::string(text) + "', expected 'asn-asn'");
    }
    const Asn a = number(text.substr(0, dash));
    const Asn b = number(text.substr(dash + 1));
    if (a == 0 || a == b) throw Error(Errc::ParseError, "invalid link '" + std::string(text) + "'");
    return make(a, b);
}

std::string Link::to_string() const { return fmt::format("{}-{}", a, b); }

void ObserverTap::record(TapRecord r) {
    if (!log_.empty() && r.t < log_.back().t) {
        throw Error(Errc::InvalidArgument, "tap records must arrive in time order");
    }
    log_.push_back(r);
}

BlockPolicy BlockPolicy::static_block(std::vector<Prefix> blocked) {
    BlockPolicy p;
    p.blocked_ = std::move(blocked);
    return p;
}

BlockPolicy BlockPolicy::reactive(Duration detect_delay, std::vector<Prefix> initial) {
    if (detect_delay <= Duration{0}) throw Error(Errc::InvalidArgument, "reactive detect_delay must be positive");
    BlockPolicy p;
    p.mode_ = BlockMode::Reactive;
    p.detect_delay_ = detect_delay;
    p.blocked_ = std::move(initial);
    return p;
}

void BlockPolicy::block(const Prefix& p) {
    if (std::find(blocked_.begin(), blocked_.end(), p) == blocked_.end()) blocked_.push_back(p);
}

bool BlockPolicy::matches(const Address& a) const noexcept {
    return std::any_of(blocked_.begin(), blocked_.end(), [&](const Prefix& p) { return p.contains(a); });
}

Verdict filter(const BlockPolicy& policy, const Packet& packet) noexcept {
    return policy.matches(packet.src) || policy.matches(packet.dst) ? Verdict::Block : Verdict::Pass;
}

ReactiveBlocker::ReactiveBlocker(Duration detect_delay, std::uint32_t trigger_count)
    : detect_delay_(detect_delay), trigger_count_(trigger_count) {
    if (detect_delay <= Duration{0}) throw Error(Errc::InvalidArgument, "reactive detect_delay must be positive");
    if (trigger_count == 0) throw Error(Errc::InvalidArgument, "trigger_count must be at least 1");
}

std::optional<SimTime> ReactiveBlocker::observe(SimTime t, const Address& dst, bool flagged) {
    if (!flagged || triggered_.contains(dst)) return std::nullopt;
    if (++counts_[dst] < trigger_count_) return std::nullopt;
    triggered_.emplace(dst, t);
    return t + detect_delay_;
}

std::vector<Duration> extract_hop_intervals(const ObserverTap& tap) {
    struct Group {
        Address peer;
        SimTime last_change;
        std::vector<Duration> intervals;
    };
    std::map<std::tuple<Asn, Asn, Address>, Group> groups;
    for (const auto& r : tap.log()) {
        const auto key = std::make_tuple(r.from, r.to, r.src);
        const auto it = groups.find(key);
        if (it == groups.end()) {
            groups.emplace(key, Group{r.dst, r.t, {}});
            continue;
        }
        auto& g = it->second;
        if (g.peer == r.dst) continue;
        g.intervals.push_back(r.t - g.last_change);
        g.peer = r.dst;
        g.last_change = r.t;
    }
    std::vector<Duration> out;
    for (auto& [key, g] : groups) out.insert(out.end(), g.intervals.begin(), g.intervals.end());
    return out;
}

double timing_detect(std::span<const Duration> intervals, const DhmmModel& background,
                     const IntervalAlphabet& alphabet) {
    if (intervals.empty()) throw Error(Errc::EmptyInput, "no hop intervals to test");
    if (alphabet != background.alphabet()) {
        throw Error(Errc::InvalidArgument, "timing_detect needs the background model's alphabet");
    }
    const std::size_t states = background.num_states();
    if (states == 0) throw Error(Errc::EmptyModel, "background model has no states");

    // Expected emissions over n steps; mass reaching a state without
    // outgoing transitions stops, as the sampler would.
    std::vector<double> occupancy(states, 1.0 / static_cast<double>(states));
    std::vector<double> next(states);
    std::vector<double> expected(alphabet.size(), 0.0);
    for (std::size_t step = 0; step < intervals.size(); ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (const auto& t : background.transitions()) {
            const double mass = occupancy[t.from] * t.probability;
            expected[t.symbol] += mass;
            next[t.to] += mass;
        }
        occupancy.swap(next);
    }
    double total = 0.0;
    for (double e : expected) total += e;
    if (total <= 0.0) throw Error(Errc::AbsorbingState, "background model emits nothing");

    std::vector<double> observed(alphabet.size(), 0.0);
    for (auto d : intervals) observed[alphabet.symbolize(d)] += 1.0;
    const auto n = static_cast<double>(intervals.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) l1 += std::abs(observed[i] / n - expected[i] / total);
    return l1;
}

DetectionReport judge(double statistic, double threshold) noexcept {
    return {statistic, threshold, statistic > threshold};
}

std::string format_detection(const DetectionReport& report) {
    return fmt::format("{:.6f},{},{}", report.statistic, report.threshold,
                       report.detected ? "detected" : "undetected");
}

std::string format_tap_log(const ObserverTap& tap) {
    std::string out;
    for (const auto& r : tap.log()) {
        out += fmt::format("{},adversary,observe,link={} from={} to={} kind={} src={} dst={}\n", to_ms(r.t),
                           tap.link().to_string(), r.from, r.to, to_string(r.kind), r.src.to_string(),
                           r.dst.to_string());
    }
    return out;
}

} // namespace tarn
