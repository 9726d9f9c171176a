#include "tarn/report.hpp"

#include <fmt/format.h>

namespace tarn {
namespace {

constexpr std::string_view kMachineMarker = "[machine]\n";

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

std::string format_report(const RunReport& r) {
    const auto& m = r.metrics;
    std::string out;
    out += "tarn run report\n";
    out += fmt::format("  config:      {}\n", r.config_path);
    out += fmt::format("  trace:       {}\n", r.trace_path.empty() ? "(not written)" : r.trace_path);
    out += fmt::format("  wall_clock_ms: {}\n", r.wall_clock_ms);
    out += fmt::format("  delivered {} of {} packets ({:.2f}%) across {} addresses, mean dwell {:.1f} ms\n",
                       m.packets_delivered, m.packets_sent, 100.0 * ratio(m.packets_delivered, m.packets_sent),
                       m.distinct_external_ips_used, m.mean_dwell_ms);
    if (r.detection) {
        out += fmt::format("  timing analysis: statistic {:.4f} vs threshold {} ({})\n", r.detection->statistic,
                           r.detection->threshold, r.detection->detected ? "detected" : "undetected");
    }
    out += "\n";
    out += kMachineMarker;
    out += fmt::format("config_hash={}\n", r.config_hash);
    out += fmt::format("packets_sent={}\n", m.packets_sent);
    out += fmt::format("packets_delivered={}\n", m.packets_delivered);
    out += fmt::format("delivery_ratio={:.6f}\n", ratio(m.packets_delivered, m.packets_sent));
    out += fmt::format("distinct_external_ips_used={}\n", m.distinct_external_ips_used);
    out += fmt::format("hop_count={}\n", m.hop_count);
    out += fmt::format("mean_dwell_ms={:.3f}\n", m.mean_dwell_ms);
    out += fmt::format("blocked={}\n", m.blocked);
    out += fmt::format("unroutable={}\n", m.unroutable);
    out += fmt::format("dropped={}\n", m.dropped);
    out += fmt::format("misaddressed={}\n", m.misaddressed);
    out += fmt::format("block_landed_at_ms={}\n",
                       m.block_landed_at ? std::to_string(to_ms(*m.block_landed_at)) : std::string("none"));
    out += fmt::format("sent_after_block={}\n", m.sent_after_block);
    out += fmt::format("delivered_after_block={}\n", m.delivered_after_block);
    std::string per_hop;
    for (const auto& [index, delivered] : m.per_hop_delivery) {
        if (!per_hop.empty()) per_hop += ' ';
        per_hop += fmt::format("{}:{}", index, delivered);
    }
    out += fmt::format("per_hop_delivery={}\n", per_hop);
    if (r.detection) {
        out += "statistic,threshold,verdict\n";
        out += format_detection(*r.detection) + "\n";
    }
    return out;
}

std::string machine_section(std::string_view report_text) {
    const auto pos = report_text.find(kMachineMarker);
    if (pos == std::string_view::npos) return {};
    return std::string(report_text.substr(pos + kMachineMarker.size()));
}

std::string format_trace(const ScenarioResult& result) {
    std::string out;
    for (const auto& line : result.trace) {
        out += line;
        out += '\n';
    }
    return out;
}

} // namespace tarn
