#include "tarn/hopping.hpp"

#include "tarn/error.hpp"
#include "tarn/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace tarn {

HopSchedule::HopSchedule(std::uint64_t seed, std::vector<HopEntry> entries)
    : seed_(seed), entries_(std::move(entries)) {
    starts_.reserve(entries_.size());
    Duration t{0};
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].dwell <= Duration{0}) {
            throw Error(Errc::InvalidArgument, "dwell of entry " + std::to_string(i) + " is not positive");
        }
        if (i > 0 && entries_[i].address == entries_[i - 1].address) {
            throw Error(Errc::InvalidArgument, "entries " + std::to_string(i - 1) + " and " +
                                               std::to_string(i) + " share an address");
        }
        starts_.push_back(t);
        t += entries_[i].dwell;
    }
    end_ = t;
}

std::vector<Address> generate_addresses(std::uint64_t seed, const PrefixPool& pool, std::size_t n) {
    std::vector<Address> out;
    if (n == 0) return out;
    const u128 last = pool.last_offset();
    if (last == 0 && n > 1) {
        throw Error(Errc::InvalidPool, "a single-address pool cannot produce distinct consecutive addresses");
    }
    out.reserve(n);
    Rng rng(seed);
    std::unordered_set<Address> used;
    for (std::size_t i = 0; i < n; ++i) {
        // A full cycle has used every address (last + 1 of them); start over,
        // but keep the previous address excluded.
        if (!used.empty() && static_cast<u128>(used.size()) - 1 == last) {
            used.clear();
            used.insert(out.back());
        }
        for (;;) {
            const Address a = pool.at(uniform_u128(rng, last));
            if (used.insert(a).second) {
                out.push_back(a);
                break;
            }
        }
    }
    return out;
}

HopSchedule build_schedule(std::uint64_t seed, const PrefixPool& pool, std::size_t n,
                           std::span<const Duration> dwells) {
    if (dwells.size() != n) {
        throw Error(Errc::LengthMismatch, "expected " + std::to_string(n) + " dwells, got " +
                                              std::to_string(dwells.size()));
    }
    const auto addrs = generate_addresses(seed, pool, n);
    std::vector<HopEntry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) entries.push_back({addrs[i], dwells[i]});
    return HopSchedule(seed, std::move(entries));
}

ActiveEntry active_address(const HopSchedule& schedule, Duration offset) {
    if (offset < Duration{0} || offset >= schedule.total_duration()) {
        throw Error(Errc::OutOfSchedule, "offset " + std::to_string(offset.count()) +
                                             " ms outside schedule of " +
                                             std::to_string(schedule.total_duration().count()) + " ms");
    }
    // Last window whose start is <= offset.
    std::size_t lo = 0;
    std::size_t hi = schedule.size();
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (schedule.window_start(mid) <= offset) lo = mid; else hi = mid;
    }
    return {lo, schedule[lo].address};
}

double collision_probability(std::uint64_t n, int space_bits) {
    if (space_bits < 1 || space_bits > 128) {
        throw Error(Errc::InvalidArgument, "space_bits must be in [1, 128]");
    }
    if (n < 2) return 0.0;
    const double m = std::ldexp(1.0, space_bits);
    if (static_cast<double>(n) > m) return 1.0;
    constexpr std::uint64_t exact_limit = 1'000'000;
    double log_no_collision = 0.0;
    if (n <= exact_limit) {
        for (std::uint64_t i = 1; i < n; ++i) {
            log_no_collision += std::log1p(-static_cast<double>(i) / m);
        }
    } else {
        const double nd = static_cast<double>(n);
        log_no_collision = -nd * (nd - 1.0) / (2.0 * m);
    }
    return -std::expm1(log_no_collision);
}

std::string format_schedule(const HopSchedule& schedule) {
    std::ostringstream os;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        os << i << ',' << schedule[i].address.to_string() << ',' << schedule[i].dwell.count() << '\n';
    }
    return os.str();
}

HopSchedule parse_schedule(std::string_view text, std::uint64_t seed) {
    std::vector<HopEntry> entries;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw Error(Errc::ParseError, "schedule line " + std::to_string(lineno) + ": expected 3 fields");
        }
        std::size_t index = 0;
        std::int64_t dwell = 0;
        const auto idx_end = line.data() + c1;
        if (std::from_chars(line.data(), idx_end, index).ptr != idx_end || index != entries.size()) {
            throw Error(Errc::ParseError, "schedule line " + std::to_string(lineno) + ": bad index");
        }
        const auto d_begin = line.data() + c2 + 1;
        const auto d_end = line.data() + line.size();
        if (std::from_chars(d_begin, d_end, dwell).ptr != d_end) {
            throw Error(Errc::ParseError, "schedule line " + std::to_string(lineno) + ": bad dwell");
        }
        entries.push_back({Address::parse(line.substr(c1 + 1, c2 - c1 - 1)), Duration{dwell}});
    }
    return HopSchedule(seed, std::move(entries));
}

} // namespace tarn
