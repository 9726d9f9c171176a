#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// None of them call into the library code they check: randomness comes from
// std::mt19937_64 and arithmetic from boost::multiprecision.

#include "tarn/dhmm.hpp"
#include "tarn/time.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tarn::oracle {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// 1 - m!/((m-n)! m^n) with m = 2^bits, evaluated exactly as a rational.
inline double exact_collision_probability(std::uint64_t n, int bits) {
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    const cpp_int m = cpp_int(1) << bits;
    if (cpp_int(n) > m) return 1.0;
    cpp_int distinct = 1;
    cpp_int total = 1;
    for (std::uint64_t i = 0; i < n; ++i) {
        distinct *= m - i;
        total *= m;
    }
    const cpp_rational p = cpp_rational(total - distinct, total);
    return static_cast<double>(p);
}

/// Literal enumeration of all m^n draw sequences; only for tiny spaces.
inline double enumerated_collision_probability(unsigned n, unsigned m) {
    std::vector<unsigned> digits(n, 0);
    std::uint64_t colliding = 0;
    std::uint64_t total = 0;
    for (;;) {
        ++total;
        std::set<unsigned> seen(digits.begin(), digits.end());
        if (seen.size() != n) ++colliding;
        std::size_t i = 0;
        while (i < n && ++digits[i] == m) digits[i++] = 0;
        if (i == n) break;
    }
    return static_cast<double>(colliding) / static_cast<double>(total);
}

/// Share of trials in which n uniform draws over 2^bits values repeat one.
inline double monte_carlo_collision(std::uint64_t n, int bits, std::uint64_t trials, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const std::uint64_t m = std::uint64_t{1} << bits;
    std::uniform_int_distribution<std::uint64_t> draw(0, m - 1);
    // Stamps avoid clearing the seen-table between trials.
    std::vector<std::uint64_t> stamp(m, 0);
    std::uint64_t hits = 0;
    for (std::uint64_t t = 1; t <= trials; ++t) {
        for (std::uint64_t i = 0; i < n; ++i) {
            auto& s = stamp[draw(gen)];
            if (s == t) {
                ++hits;
                break;
            }
            s = t;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Hop distances from `source` over an undirected adjacency map.
inline std::map<std::uint32_t, std::size_t> bfs_distances(
    const std::map<std::uint32_t, std::set<std::uint32_t>>& adjacency, std::uint32_t source) {
    std::map<std::uint32_t, std::size_t> dist{{source, 0}};
    std::queue<std::uint32_t> frontier;
    frontier.push(source);
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (const auto v : adjacency.at(u)) {
            if (dist.emplace(v, dist[u] + 1).second) frontier.push(v);
        }
    }
    return dist;
}

/// Connected graph on nodes base..base+n-1: a random spanning tree plus
/// `extra` random chords.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> random_connected_graph(std::size_t n, std::size_t extra,
                                                                                   std::uint32_t base,
                                                                                   std::mt19937_64& gen) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = base + static_cast<std::uint32_t>(i);
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> parent(0, i - 1);
        const auto a = order[i];
        const auto b = order[parent(gen)];
        edges.emplace(std::min(a, b), std::max(a, b));
    }
    if (n > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t k = 0; k < extra; ++k) {
            const auto a = base + static_cast<std::uint32_t>(pick(gen));
            const auto b = base + static_cast<std::uint32_t>(pick(gen));
            if (a != b) edges.emplace(std::min(a, b), std::max(a, b));
        }
    }
    return {edges.begin(), edges.end()};
}

/// Two-regime interval process standing in for ordinary hosts' address
/// changes: short stays U[1200, 3000] ms, long stays U[4000, 9500] ms, and
/// the regime flips with probability 0.3 after each interval.
inline std::vector<Duration> background_trace(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::int64_t> shorter(1200, 3000);
    std::uniform_int_distribution<std::int64_t> longer(4000, 9500);
    std::bernoulli_distribution flip(0.3);
    bool long_regime = false;
    std::vector<Duration> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.emplace_back(long_regime ? longer(gen) : shorter(gen));
        if (flip(gen)) long_regime = !long_regime;
    }
    return out;
}

/// A random deterministic model whose every state emits every symbol: weights
/// drawn from [1, 2] then normalized, successor of symbol b fixed as f(b) with
/// f onto the states. Every symbol therefore has probability >= 1/(2m-1) at
/// every step, which keeps all histories well sampled.
inline DhmmModel random_full_model(std::mt19937_64& gen, std::size_t max_states, std::size_t max_symbols) {
    std::uniform_int_distribution<std::size_t> pick_states(1, max_states);
    const auto states = pick_states(gen);
    std::uniform_int_distribution<std::size_t> pick_symbols(states, max_symbols);
    const auto symbols = pick_symbols(gen);

    std::vector<StateId> successor(symbols);
    for (std::size_t b = 0; b < symbols; ++b) {
        successor[b] = static_cast<StateId>(b < states ? b : std::uniform_int_distribution<std::size_t>(0, states - 1)(gen));
    }
    std::shuffle(successor.begin(), successor.end(), gen);

    std::vector<Duration> uppers;
    for (std::size_t b = 0; b < symbols; ++b) uppers.emplace_back(1000 * static_cast<std::int64_t>(b + 1));

    std::uniform_real_distribution<double> weight(1.0, 2.0);
    std::vector<Transition> transitions;
    for (std::size_t s = 0; s < states; ++s) {
        std::vector<double> w(symbols);
        double sum = 0;
        for (auto& x : w) sum += (x = weight(gen));
        for (std::size_t b = 0; b < symbols; ++b) {
            transitions.push_back({static_cast<StateId>(s), static_cast<Symbol>(b), successor[b], w[b] / sum});
        }
    }
    return DhmmModel(states, std::move(transitions), IntervalAlphabet::from_upper_edges(uppers));
}

/// P(next symbol | previous symbol) counted directly from a symbol sequence.
inline std::map<std::pair<Symbol, Symbol>, double> conditional_frequencies(const std::vector<Symbol>& symbols) {
    std::map<std::pair<Symbol, Symbol>, std::size_t> pair_count;
    std::map<Symbol, std::size_t> from_count;
    for (std::size_t i = 1; i < symbols.size(); ++i) {
        ++pair_count[{symbols[i - 1], symbols[i]}];
        ++from_count[symbols[i - 1]];
    }
    std::map<std::pair<Symbol, Symbol>, double> out;
    for (const auto& [k, c] : pair_count) out[k] = static_cast<double>(c) / static_cast<double>(from_count[k.first]);
    return out;
}

} // namespace tarn::oracle
