#include <benchmark/benchmark.h>

// The distro's libbenchmark_main.a ships LTO bytecode from another compiler
// release, so the entry point is compiled here.
BENCHMARK_MAIN();
