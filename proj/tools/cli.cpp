#include "cli.hpp"

#include "tarn/covert.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/error.hpp"
#include "tarn/report.hpp"
#include "tarn/scenario_config.hpp"
#include "tarn/session.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace tarn::cli {
namespace {

namespace fs = std::filesystem;

struct Failure {
    int code;
    std::string message;
};

int exit_code_for(Errc code) {
    switch (code) {
    case Errc::IncompleteSet:
    case Errc::IntegrityFailure:
        return kIntegrityFailure;
    default:
        return kInputError;
    }
}

std::string read_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kInputError, fmt::format("{}: file not found or unreadable", path.string())};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Failure{kInputError, fmt::format("{}: cannot write", path.string())};
}

// Payload files hold `key=value` lines in the order anchor, seed, epoch_ms,
// model, pool; decode writes exactly this form.
struct PayloadFile {
    Address anchor;
    SyncPayload payload;
};

std::string format_payload_file(const PayloadFile& f) {
    return fmt::format("anchor={}\nseed={}\nepoch_ms={}\nmodel={}\npool={}\n", f.anchor.to_string(), f.payload.seed,
                       to_ms(f.payload.epoch), f.payload.dwell_model_id, f.payload.pool.to_string());
}

PayloadFile parse_payload_file(std::string_view text) {
    static constexpr std::string_view keys[] = {"anchor", "seed", "epoch_ms", "model", "pool"};
    std::map<std::string, std::string> values;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::ParseError, "payload line without '=': " + line);
        const auto key = line.substr(0, eq);
        if (std::find(std::begin(keys), std::end(keys), key) == std::end(keys)) {
            throw Error(Errc::ParseError, "unknown payload key '" + key + "'");
        }
        if (!values.emplace(key, line.substr(eq + 1)).second) {
            throw Error(Errc::ParseError, "duplicate payload key '" + key + "'");
        }
    }
    for (auto key : keys) {
        if (!values.contains(std::string(key))) throw Error(Errc::ParseError, fmt::format("payload key '{}' missing", key));
    }
    auto integer = [&](const std::string& key) {
        const auto& v = values.at(key);
        try {
            std::size_t used = 0;
            const auto n = key == "seed" ? static_cast<long long>(std::stoull(v, &used)) : std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, fmt::format("payload key '{}' is not an integer", key));
        }
    };
    return {Address::parse(values.at("anchor")),
            SyncPayload{static_cast<std::uint64_t>(integer("seed")), PrefixPool::parse(values.at("pool")),
                        values.at("model"), at_ms(integer("epoch_ms"))}};
}

struct RunTask {
    fs::path config;
    std::optional<fs::path> trace;
    std::optional<fs::path> report;
};

struct RunOutcome {
    int code = kOk;
    std::string out;
    std::string err;
};

RunOutcome run_one(const RunTask& task, std::optional<std::uint64_t> seed_override) {
    RunOutcome o;
    try {
        const auto started = std::chrono::steady_clock::now();
        auto config = load_config(task.config);
        if (seed_override) override_seed(config, *seed_override);
        const auto result = run_scenario(config);
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

        if (task.trace) write_output(*task.trace, format_trace(result));
        const RunReport report{task.config.string(), config_hash(config), result.metrics, result.detection,
                               elapsed.count(), task.trace ? task.trace->string() : std::string()};
        const auto text = format_report(report);
        if (task.report) {
            write_output(*task.report, text);
        } else {
            o.out = text;
        }
        for (const auto& msg : check_expectations(config, result.metrics)) {
            o.err += fmt::format("{}: scenario assertion failed: {}\n", task.config.string(), msg);
            o.code = kScenarioFailure;
        }
    } catch (const Failure& f) {
        o.code = f.code;
        o.err = f.message + "\n";
    } catch (const Error& e) {
        o.code = exit_code_for(e.code());
        o.err = fmt::format("{}: {}\n", task.config.string(), e.what());
    }
    return o;
}

int cmd_run(const std::vector<std::string>& configs, const std::string& trace, const std::string& report,
            std::optional<std::uint64_t> seed_override, unsigned jobs, std::ostream& out, std::ostream& err) {
    std::vector<RunTask> tasks;
    const bool many = configs.size() > 1;
    for (const auto& c : configs) {
        RunTask t{c, std::nullopt, std::nullopt};
        const auto stem = fs::path(c).stem().string();
        if (!trace.empty()) t.trace = many ? fs::path(trace) / (stem + ".trace") : fs::path(trace);
        if (!report.empty()) t.report = many ? fs::path(report) / (stem + ".report") : fs::path(report);
        tasks.push_back(std::move(t));
    }

    std::vector<RunOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) outcomes[i] = run_one(tasks[i], seed_override);
    };
    const unsigned threads = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int code = kOk;
    for (const auto& o : outcomes) {
        out << o.out;
        err << o.err;
        code = std::max(code, o.code);
    }
    return code;
}

int cmd_train(const std::string& trace_path, std::size_t bins, std::size_t order, const std::string& out_path) {
    const auto trace = parse_trace(read_input(trace_path));
    if (trace.empty()) throw Error(Errc::EmptyInput, trace_path + ": trace holds no intervals");
    const auto alphabet = IntervalAlphabet::quantile(trace, bins);
    const auto model = infer_dhmm(trace, alphabet, order);
    write_output(out_path, format_model(model));
    return kOk;
}

int cmd_covert(const std::string& action, const std::string& in_path, const std::string& out_path) {
    const auto text = read_input(in_path);
    if (action == "encode") {
        const auto file = parse_payload_file(text);
        write_output(out_path, format_zone(encode_payload(file.payload, file.anchor)));
    } else {
        const auto records = parse_zone(text);
        auto payload = decode_payload(records);
        write_output(out_path, format_payload_file({records.anchor_ip, std::move(payload)}));
    }
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deterministic simulator of IP address hopping", "tarn"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed_override;
    unsigned jobs = 1;
    app.add_option("--seed-override", seed_override, "Replace every scenario seed");
    app.add_option("--jobs", jobs, "Scenarios run in parallel")->check(CLI::PositiveNumber);

    std::vector<std::string> configs;
    std::string trace_out;
    std::string report_out;
    auto* run_cmd = app.add_subcommand("run", "Run scenario files");
    run_cmd->add_option("--config", configs, "Scenario file (repeatable)")->required();
    run_cmd->add_option("--trace", trace_out, "Event trace file, or directory with several configs");
    run_cmd->add_option("--report", report_out, "Report file, or directory with several configs");

    std::string train_trace;
    std::string train_out;
    std::size_t bins = 8;
    std::size_t order = 1;
    auto* train_cmd = app.add_subcommand("train", "Infer a dwell model from an interval trace");
    train_cmd->add_option("--trace", train_trace, "One interval in ms per line")->required();
    train_cmd->add_option("--bins", bins, "Alphabet size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--order", order, "History length")->check(CLI::PositiveNumber);
    train_cmd->add_option("--out", train_out, "Model file")->required();

    std::string covert_action;
    std::string covert_in;
    std::string covert_out;
    auto* covert_cmd = app.add_subcommand("covert", "Encode or decode a sync payload as PTR records");
    covert_cmd->add_option("action", covert_action, "encode or decode")
        ->required()
        ->check(CLI::IsMember({"encode", "decode"}));
    covert_cmd->add_option("--in", covert_in, "Payload file (encode) or zone file (decode)")->required();
    covert_cmd->add_option("--out", covert_out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o;
        std::ostringstream eo;
        const int rc = app.exit(e, o, eo);
        out << o.str();
        err << eo.str();
        return rc == 0 ? kOk : kInputError;
    }

    try {
        if (*run_cmd) return cmd_run(configs, trace_out, report_out, seed_override, jobs, out, err);
        if (*train_cmd) return cmd_train(train_trace, bins, order, train_out);
        return cmd_covert(covert_action, covert_in, covert_out);
    } catch (const Failure& f) {
        err << f.message << "\n";
        return f.code;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e.code());
    }
}

} // namespace tarn::cli
