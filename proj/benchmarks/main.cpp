#include <benchmark/benchmark.h>

// Own entry point: the packaged benchmark_main archive carries LTO bytecode
// from a different compiler release.
BENCHMARK_MAIN();
