#include "tarn/scenario_config.hpp"
#include "tarn/session.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

namespace {

using namespace tarn;

const std::filesystem::path kScenarios = std::filesystem::path(TARN_SOURCE_DIR) / "scenarios";

void BM_RunScenario(benchmark::State& state, const char* file) {
    const auto config = load_config(kScenarios / file);
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(config, {false}).metrics);
}
BENCHMARK_CAPTURE(BM_RunScenario, reproduction, "reproduction.ini")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RunScenario, two_way, "two_way.ini")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RunScenario, dhmm_massage, "dhmm_massage.ini")->Unit(benchmark::kMillisecond);

} // namespace
