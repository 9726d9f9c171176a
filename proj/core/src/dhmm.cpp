#include "tarn/dhmm.hpp"

#include "tarn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace tarn {
namespace {

constexpr double kNormTolerance = 1e-9;

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = s.find(sep);
        out.push_back(s.substr(0, pos));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

} // namespace

// --- IntervalAlphabet -------------------------------------------------------

IntervalAlphabet::IntervalAlphabet(std::vector<IntervalBin> bins) : bins_(std::move(bins)) {
    if (bins_.empty()) throw Error(Errc::EmptyAlphabet, "alphabet has no bins");
    for (std::size_t i = 0; i < bins_.size(); ++i) {
        const auto& b = bins_[i];
        if (b.symbol != i) throw Error(Errc::InvalidAlphabet, "bin symbols must be 0..n-1 in order");
        if (b.lower < Duration{0} || b.upper <= Duration{0} || b.lower > b.upper) {
            throw Error(Errc::InvalidAlphabet, "bin " + std::to_string(i) + " has invalid edges");
        }
        if (i > 0) {
            if (b.lower != bins_[i - 1].upper) {
                throw Error(Errc::InvalidAlphabet, "bins " + std::to_string(i - 1) + " and " +
                                                       std::to_string(i) + " are not contiguous");
            }
            if (b.upper <= b.lower) {
                throw Error(Errc::InvalidAlphabet, "bin " + std::to_string(i) + " is empty");
            }
        }
    }
}

IntervalAlphabet IntervalAlphabet::from_upper_edges(std::span<const Duration> uppers) {
    std::vector<IntervalBin> bins;
    Duration lower{0};
    for (std::size_t i = 0; i < uppers.size(); ++i) {
        bins.push_back({lower, uppers[i], static_cast<Symbol>(i)});
        lower = uppers[i];
    }
    return IntervalAlphabet(std::move(bins));
}

IntervalAlphabet IntervalAlphabet::quantile(std::span<const Duration> trace, std::size_t bins) {
    if (bins == 0) throw Error(Errc::EmptyAlphabet, "requested zero bins");
    if (trace.empty()) throw Error(Errc::InsufficientData, "cannot build quantile bins from an empty trace");
    std::vector<Duration> sorted(trace.begin(), trace.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() <= Duration{0}) throw Error(Errc::InvalidAlphabet, "trace intervals must be positive");
    const std::size_t n = sorted.size();
    std::vector<Duration> edges;
    for (std::size_t k = 1; k <= bins; ++k) {
        // Upper edge of bin k is the ceil(k*n/bins)-th order statistic.
        const std::size_t rank = (k * n + bins - 1) / bins;
        const Duration edge = sorted[rank - 1];
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    return from_upper_edges(edges);
}

Symbol IntervalAlphabet::symbolize(Duration d) const {
    if (bins_.empty()) throw Error(Errc::EmptyAlphabet, "alphabet has no bins");
    const auto it = std::lower_bound(bins_.begin(), bins_.end(), d,
                                     [](const IntervalBin& b, Duration v) { return b.upper < v; });
    return it == bins_.end() ? bins_.back().symbol : it->symbol;
}

Duration IntervalAlphabet::sample(Symbol s, Rng& rng) const {
    const auto& b = bins_.at(s);
    if (b.lower == b.upper) return b.upper;
    const auto span = static_cast<std::uint64_t>((b.upper - b.lower).count() - 1);
    return b.lower + Duration{1 + static_cast<std::int64_t>(uniform_u64(rng, span))};
}

// --- DhmmModel --------------------------------------------------------------

DhmmModel::DhmmModel(std::size_t num_states, std::vector<Transition> transitions,
                     IntervalAlphabet alphabet)
    : num_states_(num_states), transitions_(std::move(transitions)), alphabet_(std::move(alphabet)) {
    if (alphabet_.empty()) throw Error(Errc::EmptyAlphabet, "model needs an alphabet");
    std::sort(transitions_.begin(), transitions_.end(), [](const Transition& a, const Transition& b) {
        return std::tie(a.from, a.symbol) < std::tie(b.from, b.symbol);
    });
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
        const auto& t = transitions_[i];
        if (t.from >= num_states_ || t.to >= num_states_) {
            throw Error(Errc::InvalidModel, "transition references a missing state");
        }
        if (t.symbol >= alphabet_.size()) {
            throw Error(Errc::InvalidModel, "transition symbol outside the alphabet");
        }
        if (!(t.probability > 0.0 && t.probability <= 1.0 + kNormTolerance)) {
            throw Error(Errc::InvalidModel, "transition probability outside (0, 1]");
        }
        if (i > 0 && transitions_[i - 1].from == t.from && transitions_[i - 1].symbol == t.symbol) {
            throw Error(Errc::InvalidModel, fmt::format("state {} has two transitions on symbol {}",
                                                        t.from, t.symbol));
        }
    }
    offsets_.assign(num_states_ + 1, 0);
    for (const auto& t : transitions_) ++offsets_[t.from + 1];
    for (std::size_t s = 0; s < num_states_; ++s) offsets_[s + 1] += offsets_[s];
    for (std::size_t s = 0; s < num_states_; ++s) {
        if (offsets_[s] == offsets_[s + 1]) continue;
        double sum = 0.0;
        for (auto i = offsets_[s]; i < offsets_[s + 1]; ++i) sum += transitions_[i].probability;
        if (std::abs(sum - 1.0) > kNormTolerance) {
            throw Error(Errc::InvalidModel, fmt::format("state {} probabilities sum to {}", s, sum));
        }
    }
}

std::span<const Transition> DhmmModel::outgoing(StateId s) const {
    if (s >= num_states_) throw Error(Errc::InvalidModel, "no such state");
    return std::span<const Transition>(transitions_).subspan(offsets_[s], offsets_[s + 1] - offsets_[s]);
}

std::optional<Transition> DhmmModel::find(StateId from, Symbol symbol) const {
    for (const auto& t : outgoing(from)) {
        if (t.symbol == symbol) return t;
    }
    return std::nullopt;
}

DhmmModel infer_dhmm(std::span<const Duration> trace, const IntervalAlphabet& alphabet, std::size_t order) {
    if (alphabet.empty()) throw Error(Errc::EmptyAlphabet, "alphabet has no bins");
    if (order < 1) throw Error(Errc::InsufficientData, "order must be at least 1");
    if (trace.size() < order + 1) {
        throw Error(Errc::InsufficientData, fmt::format("trace of {} intervals is too short for order {}",
                                                        trace.size(), order));
    }
    std::vector<Symbol> symbols;
    symbols.reserve(trace.size());
    for (auto d : trace) symbols.push_back(alphabet.symbolize(d));

    using History = std::vector<Symbol>;
    auto history_at = [&](std::size_t start) {
        return History(symbols.begin() + static_cast<std::ptrdiff_t>(start),
                       symbols.begin() + static_cast<std::ptrdiff_t>(start + order));
    };

    std::map<History, StateId> states;
    for (std::size_t start = 0; start + order <= symbols.size(); ++start) states.emplace(history_at(start), 0);
    StateId next_id = 0;
    for (auto& [history, id] : states) id = next_id++;

    std::map<std::pair<StateId, Symbol>, std::pair<StateId, std::uint64_t>> counts;
    std::vector<std::uint64_t> totals(states.size(), 0);
    for (std::size_t t = order; t < symbols.size(); ++t) {
        const StateId from = states.at(history_at(t - order));
        const StateId to = states.at(history_at(t - order + 1));
        auto& entry = counts[{from, symbols[t]}];
        entry.first = to;
        ++entry.second;
        ++totals[from];
    }

    std::vector<Transition> transitions;
    transitions.reserve(counts.size());
    for (const auto& [key, value] : counts) {
        transitions.push_back({key.first, key.second, value.first,
                               static_cast<double>(value.second) / static_cast<double>(totals[key.first])});
    }
    return DhmmModel(states.size(), std::move(transitions), alphabet);
}

// --- Sampling ---------------------------------------------------------------

DwellSampler start_sampler(std::shared_ptr<const DhmmModel> model, std::uint64_t seed) {
    if (!model || model->num_states() == 0) throw Error(Errc::EmptyModel, "model has no states");
    Rng rng(seed);
    const auto state = static_cast<StateId>(uniform_u64(rng, model->num_states() - 1));
    return DwellSampler(std::move(model), state, rng);
}

DwellSampler start_sampler(const DhmmModel& model, std::uint64_t seed) {
    return start_sampler(std::make_shared<const DhmmModel>(model), seed);
}

Duration next_dwell(DwellSampler& sampler) {
    const auto out = sampler.model_->outgoing(sampler.state_);
    if (out.empty()) {
        throw Error(Errc::AbsorbingState, fmt::format("state {} has no outgoing transitions", sampler.state_));
    }
    const double u = uniform_unit(sampler.rng_);
    double cumulative = 0.0;
    const Transition* chosen = &out.back();
    for (const auto& t : out) {
        cumulative += t.probability;
        if (u < cumulative) {
            chosen = &t;
            break;
        }
    }
    sampler.state_ = chosen->to;
    sampler.last_symbol_ = chosen->symbol;
    return sampler.model_->alphabet().sample(chosen->symbol, sampler.rng_);
}

std::vector<Duration> sample_dwells(DwellSampler& sampler, std::size_t n) {
    std::vector<Duration> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next_dwell(sampler));
    return out;
}

double distribution_distance(std::span<const Duration> a, std::span<const Duration> b,
                             const IntervalAlphabet& alphabet) {
    if (a.empty() || b.empty()) throw Error(Errc::EmptyInput, "distribution_distance needs non-empty samples");
    std::vector<double> ha(alphabet.size(), 0.0);
    std::vector<double> hb(alphabet.size(), 0.0);
    for (auto d : a) ha[alphabet.symbolize(d)] += 1.0;
    for (auto d : b) hb[alphabet.symbolize(d)] += 1.0;
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < ha.size(); ++i) l1 += std::abs(ha[i] / na - hb[i] / nb);
    return l1;
}

// --- Text formats -----------------------------------------------------------

std::string format_model(const DhmmModel& model) {
    std::string out = fmt::format("states={} symbols={}\n", model.num_states(), model.alphabet().size());
    for (const auto& b : model.alphabet().bins()) {
        out += fmt::format("{},{},{}\n", b.symbol, b.lower.count(), b.upper.count());
    }
    for (const auto& t : model.transitions()) {
        out += fmt::format("{},{},{},{}\n", t.from, t.symbol, t.to, t.probability);
    }
    return out;
}

DhmmModel parse_model(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::pair<std::size_t, std::size_t>> header;
    std::vector<IntervalBin> bins;
    std::vector<Transition> transitions;
    auto fail = [&](const std::string& why) {
        return Error(Errc::ParseError, fmt::format("model line {}: {}", lineno, why));
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            std::size_t states = 0;
            std::size_t symbols = 0;
            const auto parts = split(line, ' ');
            if (parts.size() != 2 || !parts[0].starts_with("states=") || !parts[1].starts_with("symbols=") ||
                !parse_number(parts[0].substr(7), states) || !parse_number(parts[1].substr(8), symbols)) {
                throw fail("expected 'states=<n> symbols=<m>'");
            }
            header = {states, symbols};
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() == 3) {
            std::uint32_t sym = 0;
            std::int64_t lo = 0;
            std::int64_t hi = 0;
            if (!parse_number(fields[0], sym) || !parse_number(fields[1], lo) || !parse_number(fields[2], hi)) {
                throw fail("bad bin line");
            }
            bins.push_back({Duration{lo}, Duration{hi}, sym});
        } else if (fields.size() == 4) {
            Transition t{};
            if (!parse_number(fields[0], t.from) || !parse_number(fields[1], t.symbol) ||
                !parse_number(fields[2], t.to) || !parse_number(fields[3], t.probability)) {
                throw fail("bad transition line");
            }
            transitions.push_back(t);
        } else {
            throw fail("expected 3 (bin) or 4 (transition) fields");
        }
    }
    if (!header) throw Error(Errc::ParseError, "model text has no header");
    if (bins.size() != header->second) {
        throw Error(Errc::ParseError, fmt::format("header declares {} symbols but {} bins follow",
                                                  header->second, bins.size()));
    }
    return DhmmModel(header->first, std::move(transitions), IntervalAlphabet(std::move(bins)));
}

std::vector<Duration> parse_trace(std::string_view text) {
    std::vector<Duration> out;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::int64_t ms = 0;
        if (!parse_number(line, ms) || ms <= 0) {
            throw Error(Errc::ParseError, fmt::format("trace line {}: expected a positive integer", lineno));
        }
        out.push_back(Duration{ms});
    }
    return out;
}

} // namespace tarn
