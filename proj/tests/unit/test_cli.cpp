#include "cli.hpp"

#include "tarn/covert.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace tarn {
namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = fs::path(TARN_SOURCE_DIR) / "scenarios";

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "tarn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Machine part of each report in a concatenated multi-config output.
std::vector<std::string> machine_sections(const std::string& text) {
    std::vector<std::string> out;
    const std::string header = "tarn run report\n";
    for (std::size_t pos = text.find(header); pos != std::string::npos;) {
        const auto next = text.find(header, pos + header.size());
        out.push_back(machine_section(text.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
        pos = next;
    }
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tarn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    fs::path dir_;
};

const std::string kSmall = "[scenario]\nseed = 2\nn_hops = 5\n[topology]\nedges = 1-2\n"
                           "[server]\ninternal = 10.0.0.2\nas = 2\npool = 184.164.243.0/29\nanchor = 192.0.2.53\n"
                           "[client]\ninternal = 10.0.1.2\nas = 1\nstatic = 184.164.242.10\n"
                           "[dwell]\nsource = fixed\nfixed_ms = 1000\n[traffic]\npackets = 50\n";

TEST_F(Cli, RunSucceedsAndWritesReportAndTrace) {
    const auto cfg = write("ok.ini", kSmall + "[expect]\ndelivered = 50\ndistinct_ips = 5\n");
    const auto r = invoke({"run", "--config", cfg.string(), "--trace", (dir_ / "t.csv").string()});
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(machine_section(r.out).find("packets_delivered=50"), std::string::npos) << r.out;
    EXPECT_NE(slurp(dir_ / "t.csv").find(",traffic,deliver,"), std::string::npos);
}

TEST_F(Cli, FailedExpectationExitsThree) {
    const auto cfg = write("bad.ini", kSmall + "[expect]\ndelivered = 51\n");
    const auto r = invoke({"run", "--config", cfg.string()});
    EXPECT_EQ(r.code, cli::kScenarioFailure);
    EXPECT_NE(r.err.find("expect.delivered"), std::string::npos) << r.err;
}

TEST_F(Cli, InputErrorsExitTwo) {
    EXPECT_EQ(invoke({"run", "--config", (dir_ / "absent.ini").string()}).code, cli::kInputError);
    const auto cfg = write("typo.ini", kSmall + "[traffic]\ncolour = red\n");
    const auto r = invoke({"run", "--config", cfg.string()});
    EXPECT_EQ(r.code, cli::kInputError);
    EXPECT_EQ(invoke({}).code, cli::kInputError);
    EXPECT_EQ(invoke({"frobnicate"}).code, cli::kInputError);
    EXPECT_EQ(invoke({"covert", "shout", "--in", "a", "--out", "b"}).code, cli::kInputError);
    EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST_F(Cli, MachineSectionIsDeterministicAcrossJobs) {
    std::vector<std::string> args{"--jobs", "3", "run"};
    for (const auto* name : {"reproduction.ini", "two_way.ini", "reactive_tarn.ini"}) {
        args.push_back("--config");
        args.push_back((kScenarios / name).string());
    }
    const auto parallel = invoke(args);
    args[1] = "1";
    const auto serial = invoke(args);
    EXPECT_EQ(parallel.code, cli::kOk) << parallel.err;
    const auto a = machine_sections(parallel.out);
    EXPECT_EQ(a.size(), 3U);
    EXPECT_EQ(a, machine_sections(serial.out));
    for (const auto& m : a) EXPECT_NE(m.find("packets_sent=672"), std::string::npos);
}

TEST_F(Cli, SeedOverrideChangesTheRun) {
    const auto cfg = write("s.ini", kSmall);
    const auto a = invoke({"run", "--config", cfg.string(), "--report", (dir_ / "a.txt").string()});
    const auto b = invoke({"--seed-override", "99", "run", "--config", cfg.string(), "--report",
                           (dir_ / "b.txt").string()});
    ASSERT_EQ(a.code, cli::kOk);
    ASSERT_EQ(b.code, cli::kOk);
    EXPECT_NE(machine_section(slurp(dir_ / "a.txt")), machine_section(slurp(dir_ / "b.txt")));
}

TEST_F(Cli, CovertRoundTripOnDisk) {
    const std::string payload = "anchor=192.0.2.53\nseed=18446744073709551615\nepoch_ms=1000\nmodel=uniform:1001-9999\n"
                                "pool=184.164.243.0/24,184.164.244.0/25\n";
    const auto in = write("p.txt", payload);
    ASSERT_EQ(invoke({"covert", "encode", "--in", in.string(), "--out", (dir_ / "z.txt").string()}).code, cli::kOk);
    const auto zone = slurp(dir_ / "z.txt");
    EXPECT_TRUE(zone.starts_with("53.2.0.192.in-addr.arpa. PTR "));
    ASSERT_EQ(invoke({"covert", "decode", "--in", (dir_ / "z.txt").string(), "--out", (dir_ / "d.txt").string()}).code,
              cli::kOk);
    EXPECT_EQ(parse_zone(zone), encode_payload({18446744073709551615ULL, PrefixPool::parse("184.164.243.0/24,184.164.244.0/25"),
                                                "uniform:1001-9999", at_ms(1000)},
                                               Address::parse("192.0.2.53")));
    EXPECT_EQ(slurp(dir_ / "d.txt"), payload);
}

TEST_F(Cli, CovertIntegrityAndSizeFailures) {
    std::string pool;
    for (int i = 0; i < 900; ++i) pool += (i ? "," : "") + std::to_string(i / 256 + 1) + "." + std::to_string(i % 256) + ".0.0/16";
    const auto big = write("big.txt", "anchor=192.0.2.53\nseed=1\nepoch_ms=0\nmodel=fixed:1000\npool=" + pool + "\n");
    EXPECT_EQ(invoke({"covert", "encode", "--in", big.string(), "--out", (dir_ / "z.txt").string()}).code,
              cli::kInputError);

    const auto in = write("p.txt", "anchor=192.0.2.53\nseed=1\nepoch_ms=0\nmodel=fixed:1000\npool=" +
                                       pool.substr(0, pool.find(",", 400)) + "\n");
    ASSERT_EQ(invoke({"covert", "encode", "--in", in.string(), "--out", (dir_ / "z.txt").string()}).code, cli::kOk);
    auto zone = slurp(dir_ / "z.txt");
    ASSERT_GT(std::count(zone.begin(), zone.end(), '\n'), 1);
    zone.erase(zone.find('\n') + 1);
    const auto truncated = write("t.txt", zone);
    EXPECT_EQ(invoke({"covert", "decode", "--in", truncated.string(), "--out", (dir_ / "d.txt").string()}).code,
              cli::kIntegrityFailure);
    EXPECT_EQ(invoke({"covert", "decode", "--in", (dir_ / "none").string(), "--out", (dir_ / "d.txt").string()}).code,
              cli::kInputError);
}

TEST_F(Cli, TrainWritesModels) {
    const auto out = dir_ / "m.dhmm";
    const auto constant = write("c.trace", "5000\n5000\n5000\n5000\n");
    ASSERT_EQ(invoke({"train", "--trace", constant.string(), "--out", out.string()}).code, cli::kOk);
    EXPECT_EQ(parse_model(slurp(out)).num_states(), 1U);

    const auto alternating = write("a.trace", "1000\n9000\n1000\n9000\n1000\n9000\n1000\n9000\n");
    ASSERT_EQ(invoke({"train", "--trace", alternating.string(), "--bins", "2", "--out", out.string()}).code, cli::kOk);
    const auto model = parse_model(slurp(out));
    EXPECT_EQ(model.num_states(), 2U);
    for (const auto& t : model.transitions()) EXPECT_DOUBLE_EQ(t.probability, 1.0);

    const auto empty = write("e.trace", "");
    EXPECT_EQ(invoke({"train", "--trace", empty.string(), "--out", out.string()}).code, cli::kInputError);
}

} // namespace
} // namespace tarn
