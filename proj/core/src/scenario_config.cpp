#include "tarn/scenario_config.hpp"

#include "tarn/error.hpp"
#include "tarn/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace tarn {
namespace {

namespace pt = boost::property_tree;

constexpr std::uint64_t kServerSeedStream = 0x5e7e;
constexpr std::uint64_t kClientSeedStream = 0xc11e;

[[noreturn]] void fail(std::string_view path, std::string_view msg) {
    throw Error(Errc::ConfigError, fmt::format("{}: {}", path, msg));
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        auto item = trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_int(std::string_view path, std::string_view text) {
    T v{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
        fail(path, fmt::format("expected an integer, got '{}'", text));
    }
    return v;
}

Duration parse_ms(std::string_view path, std::string_view text, bool allow_negative = false) {
    const auto v = parse_int<std::int64_t>(path, text);
    if (v < 0 && !allow_negative) fail(path, "must not be negative");
    return Duration{v};
}

double parse_double(std::string_view path, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(path, fmt::format("expected a number, got '{}'", text));
    }
}

template <class F>
auto wrap(std::string_view path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) throw;
        fail(path, e.what());
    }
}

/// Tracks which keys of a section were consumed so leftovers can be rejected.
class Section {
public:
    Section(const pt::ptree& root, std::string name, std::map<std::string, std::string>& canonical)
        : name_(std::move(name)) {
        if (const auto child = root.get_child_optional(name_)) {
            for (const auto& [key, value] : *child) {
                const auto v = trim(value.data());
                values_[key] = v;
                canonical[name_ + "." + key] = v;
            }
        }
    }

    std::string path(std::string_view key) const { return name_ + "." + std::string(key); }

    std::optional<std::string> get(std::string_view key) {
        const auto it = values_.find(std::string(key));
        if (it == values_.end()) return std::nullopt;
        used_.insert(it->first);
        return it->second;
    }

    std::string require(std::string_view key) {
        auto v = get(key);
        if (!v || v->empty()) fail(path(key), "required");
        return *v;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    void use_all() {
        for (const auto& [k, v] : values_) used_.insert(k);
    }

    void finish() const {
        for (const auto& [key, value] : values_) {
            if (!used_.contains(key)) fail(path(key), "unknown key");
        }
    }

private:
    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

std::string read_file(const std::filesystem::path& path, std::string_view field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(field, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

EndpointConfig parse_endpoint(Section& s) {
    EndpointConfig e;
    e.internal = wrap(s.path("internal"), [&] { return Address::parse(s.require("internal")); });
    e.as = parse_int<Asn>(s.path("as"), s.require("as"));
    if (const auto d = s.get("deployment")) {
        if (*d == "host") {
            e.deployment = Deployment::HostAgent;
        } else if (*d == "gateway") {
            e.deployment = Deployment::Gateway;
        } else {
            fail(s.path("deployment"), fmt::format("expected host or gateway, got '{}'", *d));
        }
    }
    if (const auto v = s.get("pool")) e.pool = wrap(s.path("pool"), [&] { return PrefixPool::parse(*v); });
    if (const auto v = s.get("static")) {
        e.static_address = wrap(s.path("static"), [&] { return Address::parse(*v); });
    }
    if (const auto v = s.get("prefix")) e.prefix = wrap(s.path("prefix"), [&] { return Prefix::parse(*v); });
    if (const auto v = s.get("anchor")) e.anchor = wrap(s.path("anchor"), [&] { return Address::parse(*v); });
    if (const auto v = s.get("seed")) e.seed = parse_int<std::uint64_t>(s.path("seed"), *v);
    s.finish();
    return e;
}

std::vector<Prefix> announced(const EndpointConfig& e) {
    if (e.pool) return e.pool->prefixes();
    if (e.prefix) return {*e.prefix};
    if (e.static_address) return {Prefix::host(*e.static_address)};
    return {};
}

void validate_endpoint(const ScenarioConfig& c, const EndpointConfig& e, std::string_view name) {
    const auto path = [&](std::string_view key) { return fmt::format("{}.{}", name, key); };
    const bool in_topology = std::any_of(c.topology.begin(), c.topology.end(),
                                         [&](const auto& l) { return l.first == e.as || l.second == e.as; });
    if (!in_topology) fail(path("as"), fmt::format("AS{} is not in the topology", e.as));
    if (e.pool && e.static_address) fail(path("static"), "give either pool or static, not both");
    if (e.pool) {
        if (e.pool->version() != e.internal.version()) fail(path("pool"), "IP version differs from internal");
        if (e.pool->contains(e.internal)) fail(path("internal"), "must lie outside the pool");
        if (!e.anchor) fail(path("anchor"), "required for a hopping endpoint");
        if (e.prefix) fail(path("prefix"), "only meaningful for a static endpoint");
        if (c.n_hops == 0) fail("scenario.n_hops", "must be at least 1 for a hopping endpoint");
    } else {
        if (!e.static_address) fail(path("static"), "required unless a pool is given");
        if (e.static_address->version() != e.internal.version()) {
            fail(path("static"), "IP version differs from internal");
        }
        if (e.prefix && !e.prefix->contains(*e.static_address)) {
            fail(path("prefix"), "must contain the static address");
        }
    }
}

std::string sha256_hex(std::string_view text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

} // namespace

std::string_view to_string(Role r) noexcept { return r == Role::Client ? "client" : "server"; }

std::string dwell_source_id(const DwellSource& source) {
    return std::visit(
        [](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, FixedDwell>) {
                return fmt::format("fixed:{}", s.dwell.count());
            } else if constexpr (std::is_same_v<S, UniformDwell>) {
                return fmt::format("uniform:{}-{}", s.min.count(), s.max.count());
            } else {
                return "dhmm:" + s.model_id;
            }
        },
        source);
}

DwellSource parse_dwell_source(std::string_view id) {
    const auto bad = [&] { return Error(Errc::ParseError, "invalid dwell source '" + std::string(id) + "'"); };
    const auto colon = id.find(':');
    if (colon == std::string_view::npos) throw bad();
    const auto kind = id.substr(0, colon);
    const auto arg = id.substr(colon + 1);
    auto number = [&](std::string_view s) {
        std::int64_t v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size() || s.empty() || v <= 0) throw bad();
        return Duration{v};
    };
    if (kind == "fixed") return FixedDwell{number(arg)};
    if (kind == "uniform") {
        const auto dash = arg.find('-');
        if (dash == std::string_view::npos) throw bad();
        UniformDwell u{number(arg.substr(0, dash)), number(arg.substr(dash + 1))};
        if (u.min > u.max) throw bad();
        return u;
    }
    if (kind == "dhmm" && !arg.empty()) return DhmmDwell{std::string(arg)};
    throw bad();
}

ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    pt::ptree root;
    try {
        std::istringstream is{std::string(text)};
        pt::read_ini(is, root);
    } catch (const pt::ini_parser_error& e) {
        fail(fmt::format("line {}", e.line()), e.message());
    }
    static const std::set<std::string> known = {"scenario", "topology", "server", "client", "dwell",
                                                "models",   "traffic",  "adversary", "expect"};
    for (const auto& [name, child] : root) {
        if (!known.contains(name)) fail(name, "unknown section");
        if (child.empty() && !child.data().empty()) fail(name, "key outside any section");
    }

    ScenarioConfig c;
    Section scenario(root, "scenario", c.canonical);
    c.seed = parse_int<std::uint64_t>(scenario.path("seed"), scenario.require("seed"));
    if (const auto v = scenario.get("n_hops")) c.n_hops = parse_int<std::size_t>(scenario.path("n_hops"), *v);
    if (const auto v = scenario.get("grace_window_ms")) c.grace_window = parse_ms(scenario.path("grace_window_ms"), *v);
    if (const auto v = scenario.get("lead_time_ms")) c.lead_time = parse_ms(scenario.path("lead_time_ms"), *v);
    if (const auto v = scenario.get("withdraw_lag_ms")) c.withdraw_lag = parse_ms(scenario.path("withdraw_lag_ms"), *v);
    if (const auto v = scenario.get("link_delay_ms")) c.link_delay = parse_ms(scenario.path("link_delay_ms"), *v);
    if (const auto v = scenario.get("access_delay_ms")) c.access_delay = parse_ms(scenario.path("access_delay_ms"), *v);
    if (const auto v = scenario.get("clock_skew_ms")) c.clock_skew = parse_ms(scenario.path("clock_skew_ms"), *v, true);
    if (const auto v = scenario.get("mode")) {
        if (*v == "one-way") {
            c.mode = HopMode::OneWay;
        } else if (*v == "two-way") {
            c.mode = HopMode::TwoWay;
        } else {
            fail(scenario.path("mode"), fmt::format("expected one-way or two-way, got '{}'", *v));
        }
    }
    scenario.finish();

    Section topology(root, "topology", c.canonical);
    const auto file = topology.get("file");
    const auto edges = topology.get("edges");
    if (file && edges) fail(topology.path("edges"), "give either file or edges, not both");
    if (file) {
        const auto graph = wrap(topology.path("file"), [&] {
            return AsGraph::from_edge_list(read_file(resolve(base_dir, *file), topology.path("file")));
        });
        for (const auto& l : graph.links()) c.topology.push_back(l);
    } else if (edges) {
        std::set<std::pair<Asn, Asn>> links;
        for (const auto& item : split_list(*edges)) {
            const auto link = wrap(topology.path("edges"), [&] { return Link::parse(item); });
            if (link.b == 0) fail(topology.path("edges"), "access links are implicit");
            links.insert({link.a, link.b});
        }
        c.topology.assign(links.begin(), links.end());
    }
    if (c.topology.empty()) fail("topology", "no links given");
    topology.finish();

    Section server(root, "server", c.canonical);
    c.server = parse_endpoint(server);
    Section client(root, "client", c.canonical);
    c.client = parse_endpoint(client);

    Section models(root, "models", c.canonical);
    models.use_all();
    for (const auto& [id, path] : models.values()) {
        const auto field = models.path(id);
        auto model = wrap(field, [&] { return parse_model(read_file(resolve(base_dir, path), field)); });
        c.models.emplace(id, std::make_shared<const DhmmModel>(std::move(model)));
    }

    Section dwell(root, "dwell", c.canonical);
    const auto source = dwell.get("source").value_or("fixed");
    if (source == "fixed") {
        c.dwell = FixedDwell{parse_ms(dwell.path("fixed_ms"), dwell.get("fixed_ms").value_or("5000"))};
    } else if (source == "uniform") {
        c.dwell = UniformDwell{parse_ms(dwell.path("min_ms"), dwell.require("min_ms")),
                               parse_ms(dwell.path("max_ms"), dwell.require("max_ms"))};
    } else if (source == "dhmm") {
        c.dwell = DhmmDwell{dwell.require("model")};
    } else {
        fail(dwell.path("source"), fmt::format("expected fixed, uniform or dhmm, got '{}'", source));
    }
    dwell.finish();

    Section traffic(root, "traffic", c.canonical);
    if (const auto v = traffic.get("packets")) c.traffic.packets = parse_int<std::size_t>(traffic.path("packets"), *v);
    if (const auto v = traffic.get("gap_ms"); v && *v != "spread") c.traffic.gap = parse_ms(traffic.path("gap_ms"), *v);
    if (const auto v = traffic.get("payload_len")) {
        c.traffic.payload_len = parse_int<std::uint32_t>(traffic.path("payload_len"), *v);
    }
    traffic.finish();

    Section adversary(root, "adversary", c.canonical);
    if (const auto v = adversary.get("policy")) {
        if (*v == "none") {
            c.adversary.policy = AdversaryPolicy::None;
        } else if (*v == "static") {
            c.adversary.policy = AdversaryPolicy::Static;
        } else if (*v == "reactive") {
            c.adversary.policy = AdversaryPolicy::Reactive;
        } else {
            fail(adversary.path("policy"), fmt::format("expected none, static or reactive, got '{}'", *v));
        }
    }
    if (const auto v = adversary.get("tap")) c.adversary.tap = wrap(adversary.path("tap"), [&] { return Link::parse(*v); });
    if (const auto v = adversary.get("block")) {
        for (const auto& item : split_list(*v)) {
            c.adversary.block.push_back(wrap(adversary.path("block"), [&] {
                return item.find('/') == std::string::npos ? Prefix::host(Address::parse(item)) : Prefix::parse(item);
            }));
        }
    }
    if (const auto v = adversary.get("detect_delay_ms")) {
        c.adversary.detect_delay = parse_ms(adversary.path("detect_delay_ms"), *v);
    }
    if (const auto v = adversary.get("trigger_count")) {
        c.adversary.trigger_count = parse_int<std::uint32_t>(adversary.path("trigger_count"), *v);
    }
    if (const auto v = adversary.get("timing_model")) c.adversary.timing_model = *v;
    if (const auto v = adversary.get("timing_threshold")) {
        c.adversary.timing_threshold = parse_double(adversary.path("timing_threshold"), *v);
    }
    adversary.finish();

    Section expect(root, "expect", c.canonical);
    if (const auto v = expect.get("delivered")) c.expect.delivered = parse_int<std::size_t>(expect.path("delivered"), *v);
    if (const auto v = expect.get("distinct_ips")) {
        c.expect.distinct_ips = parse_int<std::size_t>(expect.path("distinct_ips"), *v);
    }
    expect.finish();

    validate(c);
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    const auto text = read_file(path, path.string());
    return parse_config(text, path.parent_path());
}

void validate(const ScenarioConfig& c) {
    validate_endpoint(c, c.server, "server");
    validate_endpoint(c, c.client, "client");
    if (c.server.as == c.client.as) fail("client.as", "must differ from server.as");
    if (c.mode == HopMode::OneWay && c.client.hopping()) {
        fail("client.pool", "the client is static in one-way mode; set scenario.mode = two-way");
    }
    if (c.mode == HopMode::TwoWay && (!c.client.hopping() || !c.server.hopping())) {
        fail(c.client.hopping() ? "server.pool" : "client.pool", "both endpoints hop in two-way mode");
    }
    for (const auto& s : announced(c.server)) {
        for (const auto& p : announced(c.client)) {
            if (s.overlaps(p)) {
                fail(c.client.pool ? "client.pool" : "client.prefix",
                     fmt::format("{} overlaps server prefix {}", p.to_string(), s.to_string()));
            }
        }
    }

    if (const auto* f = std::get_if<FixedDwell>(&c.dwell); f && f->dwell <= Duration{0}) {
        fail("dwell.fixed_ms", "must be positive");
    }
    if (const auto* u = std::get_if<UniformDwell>(&c.dwell)) {
        if (u->min <= Duration{0}) fail("dwell.min_ms", "must be positive");
        if (u->max < u->min) fail("dwell.max_ms", "must be at least min_ms");
    }
    if (const auto* d = std::get_if<DhmmDwell>(&c.dwell); d && !c.models.contains(d->model_id)) {
        fail("dwell.model", fmt::format("unknown model '{}'", d->model_id));
    }

    if (c.traffic.gap && *c.traffic.gap <= Duration{0}) fail("traffic.gap_ms", "must be positive");
    if (!c.traffic.gap && c.traffic.packets > 0 && c.n_hops == 0) {
        fail("traffic.gap_ms", "spread traffic needs scenario.n_hops >= 1");
    }

    const auto& a = c.adversary;
    if (a.policy == AdversaryPolicy::Static && a.block.empty()) fail("adversary.block", "static policy needs addresses");
    if (a.policy == AdversaryPolicy::Reactive && a.detect_delay <= Duration{0}) {
        fail("adversary.detect_delay_ms", "must be positive");
    }
    if (a.trigger_count == 0) fail("adversary.trigger_count", "must be at least 1");
    if (a.tap) {
        const bool exists = a.tap->b == 0
                                ? std::any_of(c.topology.begin(), c.topology.end(),
                                              [&](const auto& l) { return l.first == a.tap->a || l.second == a.tap->a; })
                                : std::find(c.topology.begin(), c.topology.end(), std::pair{a.tap->a, a.tap->b}) !=
                                      c.topology.end();
        if (!exists) fail("adversary.tap", fmt::format("link {} is not in the topology", a.tap->to_string()));
    }
    if (a.timing_model && !c.models.contains(*a.timing_model)) {
        fail("adversary.timing_model", fmt::format("unknown model '{}'", *a.timing_model));
    }
    if (a.timing_threshold < 0) fail("adversary.timing_threshold", "must not be negative");
}

void override_seed(ScenarioConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.canonical["scenario.seed"] = std::to_string(seed);
}

const EndpointConfig& endpoint_config(const ScenarioConfig& config, Role role) noexcept {
    return role == Role::Client ? config.client : config.server;
}

std::uint64_t endpoint_seed(const ScenarioConfig& config, Role role) {
    const auto& e = endpoint_config(config, role);
    if (e.seed) return *e.seed;
    return derive_seed(config.seed, role == Role::Client ? kClientSeedStream : kServerSeedStream);
}

std::string config_hash(const ScenarioConfig& config) {
    std::string text;
    for (const auto& [key, value] : config.canonical) text += key + "=" + value + "\n";
    return sha256_hex(text);
}

} // namespace tarn
