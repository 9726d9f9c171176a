// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "tarn/adversary.hpp"
#include "tarn/covert.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/error.hpp"
#include "tarn/hopping.hpp"
#include "tarn/report.hpp"
#include "tarn/route.hpp"
#include "tarn/scenario_config.hpp"
#include "tarn/session.hpp"

#include "oracles.hpp"
#include "payloads.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

namespace {

using namespace tarn;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

const fs::path kScenarios = fs::path(TARN_SOURCE_DIR) / "scenarios";

struct Outcome {
    bool pass;
    std::string detail;
};

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

Outcome experiment_reproduction() {
    const auto started = std::chrono::steady_clock::now();
    const auto config = load_config(kScenarios / "reproduction.ini");
    const auto r = run_scenario(config);
    const auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto& m = r.metrics;
    const bool ok = m.packets_sent == 672 && m.packets_delivered == 672 && m.distinct_external_ips_used == 111 &&
                    m.mean_dwell_ms < 10000.0 && config.grace_window == 200ms &&
                    config.adversary.policy == AdversaryPolicy::None && wall < 5.0;
    return {ok, fmt::format("delivered={}/{} distinct_ips={} mean_dwell_ms={:.1f} wall_s={:.3f}", m.packets_delivered,
                            m.packets_sent, m.distinct_external_ips_used, m.mean_dwell_ms, wall)};
}

Outcome blocking_resistance() {
    const auto hopping_cfg = load_config(kScenarios / "reactive_tarn.ini");
    const auto hopping = run_scenario(hopping_cfg, {false});
    Duration longest{0};
    for (const auto& e : hopping.server_schedule.entries()) longest = std::max(longest, e.dwell);
    const double hop_rate = ratio(hopping.metrics.packets_delivered, hopping.metrics.packets_sent);

    const auto baseline = run_scenario(load_config(kScenarios / "reactive_static.ini"), {false});
    const auto& b = baseline.metrics;
    const double after = ratio(b.delivered_after_block, b.sent_after_block);
    const bool ok = longest < hopping_cfg.adversary.detect_delay && hopping_cfg.adversary.detect_delay == 5000ms &&
                    hop_rate >= 0.99 && b.block_landed_at.has_value() && b.sent_after_block > 0 && after <= 0.01;
    return {ok, fmt::format("hopping_delivery={:.4f} max_dwell_ms={} static_after_block={}/{}", hop_rate, longest.count(),
                            b.delivered_after_block, b.sent_after_block)};
}

Outcome massage_efficacy() {
    const auto model = std::make_shared<const DhmmModel>(parse_model(oracle::read_file(kScenarios / "background.dhmm")));
    const auto& alphabet = model->alphabet();

    int null_below = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        auto s = start_sampler(model, 1000 + trial);
        null_below += timing_detect(sample_dwells(s, 10000), *model, alphabet) < 0.05 ? 1 : 0;
    }

    // Hop intervals as the massaged schedule emits them.
    const auto massaged = dwell_sequence(DhmmDwell{"background"}, 20161, 10000, {{"background", model}});
    const double massaged_stat = timing_detect(massaged, *model, alphabet);
    const std::vector<Duration> fixed(10000, 10000ms);
    const double fixed_stat = timing_detect(fixed, *model, alphabet);
    const bool ok = null_below >= 95 && massaged_stat < 0.05 && fixed_stat > 0.5;
    return {ok, fmt::format("null_below={}/100 massaged={:.5f} fixed_rate={:.5f}", null_below, massaged_stat, fixed_stat)};
}

Outcome route_oracle() {
    std::mt19937_64 gen(4);
    const Prefix p = Prefix::parse("184.164.243.0/24");
    const Prefix background = Prefix::parse("184.164.244.0/24");
    std::size_t bad_paths = 0;
    std::size_t bad_roundtrips = 0;
    std::size_t nodes = 0;
    for (int graph = 0; graph < 50; ++graph) {
        const std::size_t n = 1 + gen() % 50;
        const auto edges = oracle::random_connected_graph(n, gen() % (n + 1), 1, gen);
        AsGraph g;
        g.add_node(1);
        std::map<std::uint32_t, std::set<std::uint32_t>> adjacency{{1, {}}};
        for (const auto& [a, b] : edges) {
            g.add_link(a, b);
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        announce(g, background, 1 + static_cast<Asn>(gen() % n));
        converge(g);
        const auto before = g.nodes();

        const auto origin = 1 + static_cast<Asn>(gen() % n);
        announce(g, p, origin);
        converge(g);
        const auto dist = oracle::bfs_distances(adjacency, origin);
        for (const auto& [asn, node] : g.nodes()) {
            ++nodes;
            const auto it = node.rib.find(p);
            if (it == node.rib.end() || it->second.path.size() != dist.at(asn)) ++bad_paths;
        }
        withdraw(g, p, origin);
        converge(g);
        for (const auto& [asn, node] : g.nodes()) {
            const auto& old = before.at(asn);
            if (node.rib != old.rib || node.adj_rib_in != old.adj_rib_in || node.originated != old.originated) {
                ++bad_roundtrips;
                break;
            }
        }
    }
    return {bad_paths == 0 && bad_roundtrips == 0,
            fmt::format("graphs=50 nodes={} path_mismatches={} roundtrip_mismatches={}", nodes, bad_paths, bad_roundtrips)};
}

Outcome collision() {
    double worst = 0;
    for (int bits = 1; bits <= 8; ++bits) {
        for (std::uint64_t n = 0; n <= 16; ++n) {
            const double expect = bits <= 4 && n <= 6 ? oracle::enumerated_collision_probability(static_cast<unsigned>(n), 1U << bits)
                                                      : oracle::exact_collision_probability(n, bits);
            worst = std::max(worst, std::abs(collision_probability(n, bits) - expect));
        }
    }
    const double analytic = collision_probability(1000, 16);
    const double mc = oracle::monte_carlo_collision(1000, 16, 1000000, 99);
    const double rel = std::abs(mc - analytic) / analytic;
    const double wide = collision_probability(1ULL << 32, 128);
    const bool ok = worst <= 1e-12 && rel <= 0.02 && std::abs(std::log2(wide) + 65.0) < 1e-6;
    return {ok, fmt::format("max_abs_err={:.3g} mc={:.6f} analytic={:.6f} rel={:.4f} p(2^32,2^128)={:.6g}", worst, mc,
                            analytic, rel, wide)};
}

Outcome covert_channel() {
    const Address anchor = Address::parse("192.0.2.53");
    std::mt19937_64 gen(6);
    std::size_t round_trips = 0;
    std::size_t names = 0;
    std::size_t bad_names = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto p = oracle::random_payload(gen);
        auto records = encode_payload(p, anchor);
        std::shuffle(records.names.begin(), records.names.end(), gen);
        for (const auto& n : records.names) {
            ++names;
            bad_names += oracle::dns_name_ok(n) ? 0 : 1;
        }
        try {
            round_trips += decode_payload(records) == p ? 1 : 0;
        } catch (const Error&) {
        }
    }

    static constexpr std::string_view chars = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::size_t detected = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto p = oracle::random_payload(gen);
        auto records = encode_payload(p, anchor);
        auto& name = records.names[gen() % records.names.size()];
        std::size_t pos = 0;
        do {
            pos = gen() % name.size();
        } while (name[pos] == '.');
        char c = name[pos];
        while (c == name[pos]) c = chars[gen() % chars.size()];
        name[pos] = c;
        try {
            detected += decode_payload(records) == p ? 0 : 1;
        } catch (const Error&) {
            ++detected;
        }
    }
    const bool ok = round_trips == 10000 && bad_names == 0 && detected >= 9990;
    return {ok, fmt::format("round_trips={}/10000 invalid_names={}/{} corruption_detected={}/10000", round_trips, bad_names,
                            names, detected)};
}

Outcome determinism() {
    std::size_t configs = 0;
    std::vector<std::string> diverged;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() == ".ini") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& path : paths) {
        ++configs;
        std::string first_trace;
        std::string first_machine;
        for (int run = 0; run < 2; ++run) {
            const auto config = load_config(path);
            const auto r = run_scenario(config);
            const auto trace = format_trace(r);
            const auto machine = machine_section(format_report({path.string(), config_hash(config), r.metrics, r.detection, 0, ""}));
            if (run == 0) {
                first_trace = trace;
                first_machine = machine;
            } else if (trace != first_trace || machine != first_machine || machine.empty()) {
                diverged.push_back(path.filename().string());
            }
        }
    }
    std::string names;
    for (const auto& d : diverged) names += " " + d;
    return {configs > 0 && diverged.empty(), fmt::format("configs={} diverged={}{}", configs, diverged.size(), names)};
}

Outcome dhmm_fixed_point() {
    std::mt19937_64 gen(2024);
    double worst = 0;
    std::size_t shape_errors = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto model = oracle::random_full_model(gen, 8, 8);
        auto sampler = start_sampler(model, gen());
        const auto trace = sample_dwells(sampler, 100000);
        const auto inferred = infer_dhmm(trace, model.alphabet(), 1);
        // Every state emits every symbol, so the last symbol identifies the state.
        std::map<Symbol, StateId> after;
        for (const auto& t : model.transitions()) after[t.symbol] = t.to;
        if (inferred.num_states() != model.alphabet().size()) ++shape_errors;
        std::size_t matched = 0;
        for (const auto& t : inferred.transitions()) {
            const auto truth = model.find(after.at(t.from), t.symbol);
            if (!truth) {
                ++shape_errors;
                continue;
            }
            ++matched;
            worst = std::max(worst, std::abs(t.probability - truth->probability));
        }
        if (matched != model.alphabet().size() * model.alphabet().size()) ++shape_errors;
    }
    return {shape_errors == 0 && worst <= 0.02, fmt::format("models=20 max_abs_err={:.5f} shape_errors={}", worst, shape_errors)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 experiment reproduction", experiment_reproduction},
        {"2 blocking resistance", blocking_resistance},
        {"3 massage efficacy", massage_efficacy},
        {"4 route simulator oracle", route_oracle},
        {"5 collision probability", collision},
        {"6 covert channel", covert_channel},
        {"7 global determinism", determinism},
        {"8 dhmm fixed point", dhmm_fixed_point},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome v{false, ""};
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << name << ": " << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
