#pragma once

#include "tarn/address.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

struct HopEntry {
    Address address;
    Duration dwell;

    friend bool operator==(const HopEntry&, const HopEntry&) = default;
};

/// Position of a schedule entry and the address it makes active.
struct ActiveEntry {
    std::size_t index = 0;
    Address address;

    friend bool operator==(const ActiveEntry&, const ActiveEntry&) = default;
};

/// Ordered (address, dwell) pairs. Dwell windows are half-open:
/// entry i is active on [start_i, start_i + dwell_i).
class HopSchedule {
public:
    HopSchedule() = default;
    /// Throws Errc::InvalidArgument on a non-positive dwell or a repeated consecutive address.
    HopSchedule(std::uint64_t seed, std::vector<HopEntry> entries);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<HopEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const HopEntry& operator[](std::size_t i) const { return entries_[i]; }

    Duration total_duration() const noexcept { return starts_.empty() ? Duration{0} : end_; }
    /// Offset at which entry i becomes active.
    Duration window_start(std::size_t i) const { return starts_.at(i); }

    friend bool operator==(const HopSchedule& a, const HopSchedule& b) {
        return a.seed_ == b.seed_ && a.entries_ == b.entries_;
    }

private:
    std::uint64_t seed_ = 0;
    std::vector<HopEntry> entries_;
    std::vector<Duration> starts_;
    Duration end_{0};
};

/// Deterministic address sequence for (seed, pool, n).
///
/// Draws are uniform over the union of the pool's prefixes (a prefix is hit
/// with probability proportional to its size). A draw equal to any address
/// already emitted in the current cycle is rejected; once every pool address
/// has been used the cycle restarts, still excluding the previous address.
/// The output for n is therefore a prefix of the output for any n' > n.
std::vector<Address> generate_addresses(std::uint64_t seed, const PrefixPool& pool, std::size_t n);

/// Zips generate_addresses(seed, pool, dwells.size()) with the dwells.
/// Throws Errc::LengthMismatch if dwells.size() != n.
HopSchedule build_schedule(std::uint64_t seed, const PrefixPool& pool, std::size_t n,
                           std::span<const Duration> dwells);

/// Throws Errc::OutOfSchedule when offset falls outside [0, total).
ActiveEntry active_address(const HopSchedule& schedule, Duration offset);

/// Probability that n uniform draws from a space of 2^space_bits values are
/// not all distinct. Uses the exact falling-factorial product for
/// n <= 10^6 and the birthday approximation above that, both evaluated as
/// -expm1(log P(no collision)) so tiny probabilities keep full precision.
double collision_probability(std::uint64_t n, int space_bits);

/// `index,address,dwell_ms` per line.
std::string format_schedule(const HopSchedule& schedule);
HopSchedule parse_schedule(std::string_view text, std::uint64_t seed = 0);

} // namespace tarn
