#pragma once

// Deterministic hidden Markov models over dwell-time intervals.
//
// Intervals are symbolized through an IntervalAlphabet; a model's transitions
// are labeled by those symbols and each (state, symbol) pair has at most one
// successor, so an observed symbol sequence identifies the state path.

#include "tarn/rng.hpp"
#include "tarn/time.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tarn {

using Symbol = std::uint32_t;
using StateId = std::uint32_t;

/// Bin i covers (lower, upper]; a bin with lower == upper is the single value upper.
struct IntervalBin {
    Duration lower;
    Duration upper;
    Symbol symbol;

    friend bool operator==(const IntervalBin&, const IntervalBin&) = default;
};

class IntervalAlphabet {
public:
    IntervalAlphabet() = default;
    /// Throws Errc::EmptyAlphabet for no bins and Errc::InvalidAlphabet unless the
    /// bins are contiguous (lower_i == upper_{i-1}), ascending, with upper > 0 and
    /// symbols numbered 0..n-1 in order.
    explicit IntervalAlphabet(std::vector<IntervalBin> bins);
    /// Bins (0, u0], (u0, u1], ... from ascending upper edges.
    static IntervalAlphabet from_upper_edges(std::span<const Duration> uppers);
    /// Equal-frequency bins over a training trace; duplicate cut points merge,
    /// so a constant trace yields a single bin.
    static IntervalAlphabet quantile(std::span<const Duration> trace, std::size_t bins = 8);

    const std::vector<IntervalBin>& bins() const noexcept { return bins_; }
    std::size_t size() const noexcept { return bins_.size(); }
    bool empty() const noexcept { return bins_.empty(); }

    /// First bin whose upper edge is >= d. Values past the last edge map to the
    /// last bin, values below the first lower edge to the first bin.
    Symbol symbolize(Duration d) const;
    /// Uniform over the integer milliseconds of the bin.
    Duration sample(Symbol s, Rng& rng) const;

    friend bool operator==(const IntervalAlphabet&, const IntervalAlphabet&) = default;

private:
    std::vector<IntervalBin> bins_;
};

struct Transition {
    StateId from;
    Symbol symbol;
    StateId to;
    double probability;

    friend bool operator==(const Transition&, const Transition&) = default;
};

class DhmmModel {
public:
    /// Validates determinism, per-state normalization (1e-9) and state references.
    /// Throws Errc::InvalidModel on violation.
    DhmmModel(std::size_t num_states, std::vector<Transition> transitions, IntervalAlphabet alphabet);

    std::size_t num_states() const noexcept { return num_states_; }
    const IntervalAlphabet& alphabet() const noexcept { return alphabet_; }
    /// Sorted by (from, symbol).
    const std::vector<Transition>& transitions() const noexcept { return transitions_; }
    std::span<const Transition> outgoing(StateId s) const;
    std::optional<Transition> find(StateId from, Symbol symbol) const;

    friend bool operator==(const DhmmModel&, const DhmmModel&) = default;

private:
    std::size_t num_states_ = 0;
    std::vector<Transition> transitions_;
    std::vector<std::size_t> offsets_;
    IntervalAlphabet alphabet_;
};

/// Order-k history automaton: states are the distinct k-symbol histories seen
/// in the symbolized trace (numbered in lexicographic history order) and
/// transition probabilities are empirical conditional frequencies. Histories
/// that only appear at the end of the trace become states without outgoing
/// transitions.
DhmmModel infer_dhmm(std::span<const Duration> trace, const IntervalAlphabet& alphabet,
                     std::size_t order = 1);

class DwellSampler {
public:
    const DhmmModel& model() const noexcept { return *model_; }
    StateId state() const noexcept { return state_; }
    /// Symbol emitted by the most recent next_dwell, if any.
    std::optional<Symbol> last_symbol() const noexcept { return last_symbol_; }

    friend bool operator==(const DwellSampler& a, const DwellSampler& b) {
        return *a.model_ == *b.model_ && a.state_ == b.state_ && a.rng_ == b.rng_ &&
               a.last_symbol_ == b.last_symbol_;
    }

private:
    friend DwellSampler start_sampler(std::shared_ptr<const DhmmModel>, std::uint64_t);
    friend Duration next_dwell(DwellSampler&);

    DwellSampler(std::shared_ptr<const DhmmModel> model, StateId state, Rng rng)
        : model_(std::move(model)), state_(state), rng_(rng) {}

    std::shared_ptr<const DhmmModel> model_;
    StateId state_;
    Rng rng_;
    std::optional<Symbol> last_symbol_;
};

/// Start state drawn uniformly over the model's states. Throws Errc::EmptyModel.
DwellSampler start_sampler(std::shared_ptr<const DhmmModel> model, std::uint64_t seed);
DwellSampler start_sampler(const DhmmModel& model, std::uint64_t seed);

/// Takes one weighted transition out of the current state and returns a dwell
/// drawn uniformly inside the emitted symbol's bin. Throws Errc::AbsorbingState.
Duration next_dwell(DwellSampler& sampler);

std::vector<Duration> sample_dwells(DwellSampler& sampler, std::size_t n);

/// L1 distance between the symbol histograms of two samples, in [0, 2].
double distribution_distance(std::span<const Duration> a, std::span<const Duration> b,
                             const IntervalAlphabet& alphabet);

/// Text form: `states=<n> symbols=<m>`, bins as `symbol,lo_ms,hi_ms`, then
/// transitions as `from,symbol,to,prob` (probabilities printed round-trip exact).
std::string format_model(const DhmmModel& model);
DhmmModel parse_model(std::string_view text);

/// One positive millisecond interval per line; blank lines and `#` comments skipped.
std::vector<Duration> parse_trace(std::string_view text);

} // namespace tarn
