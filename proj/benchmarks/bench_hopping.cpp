#include "tarn/covert.hpp"
#include "tarn/dhmm.hpp"
#include "tarn/hopping.hpp"
#include "tarn/route.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tarn;

void BM_GenerateAddresses(benchmark::State& state) {
    const auto pool = PrefixPool::parse("184.164.243.0/24, 184.164.244.0/22");
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate_addresses(42, pool, n));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateAddresses)->Arg(111)->Arg(1000)->Arg(10000);

void BM_CollisionProbability(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(collision_probability(n, 32));
}
BENCHMARK(BM_CollisionProbability)->Arg(1000)->Arg(1000000);

void BM_SampleDwells(benchmark::State& state) {
    std::vector<Duration> trace;
    for (int i = 0; i < 20000; ++i) trace.emplace_back(1000 + (i * 7919) % 9000);
    const auto model = std::make_shared<const DhmmModel>(infer_dhmm(trace, IntervalAlphabet::quantile(trace, 8), 1));
    for (auto _ : state) {
        auto s = start_sampler(model, 7);
        benchmark::DoNotOptimize(sample_dwells(s, static_cast<std::size_t>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleDwells)->Arg(10000);

void BM_CovertRoundTrip(benchmark::State& state) {
    std::vector<Prefix> prefixes;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(state.range(0)); ++i) {
        prefixes.emplace_back(Address::v4((i + 1) << 16), 16);
    }
    const SyncPayload p{99, PrefixPool(std::move(prefixes)), "uniform:1001-9999", at_ms(1000)};
    const Address anchor = Address::parse("192.0.2.53");
    for (auto _ : state) benchmark::DoNotOptimize(decode_payload(encode_payload(p, anchor)));
}
BENCHMARK(BM_CovertRoundTrip)->Arg(1)->Arg(100);

void BM_RouteConvergeLine(benchmark::State& state) {
    const auto n = static_cast<Asn>(state.range(0));
    const Prefix p = Prefix::parse("184.164.243.0/24");
    for (auto _ : state) {
        AsGraph g;
        for (Asn a = 1; a < n; ++a) g.add_link(a, a + 1);
        announce(g, p, n);
        benchmark::DoNotOptimize(converge(g));
    }
}
BENCHMARK(BM_RouteConvergeLine)->Arg(10)->Arg(50);

} // namespace
