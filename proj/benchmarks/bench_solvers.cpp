// Timing harness for the block solvers: serial sweeps against the
// OpenMP-parallel two-worker variants, and the meet-in-the-middle scheme
// against the classic two-filter scheme it is meant to beat.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "btsmooth/sim.hpp"
#include "btsmooth/solvers.hpp"
#include "btsmooth/system.hpp"

namespace {

using namespace bts;

double median_seconds(const std::function<BlockSolution()>& run, int repeats,
                      double* residual_out) {
  std::vector<double> times;
  times.reserve(static_cast<size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const BlockSolution sol = run();
    times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (residual_out) *residual_out = sol.residual_norm;
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  int n = 4;
  int num_blocks = 100000;
  int repeats = 10;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const int value = std::atoi(argv[i + 1]);
    if (flag == "--n") n = value;
    else if (flag == "--N") num_blocks = value;
    else if (flag == "--repeats") repeats = value;
    else {
      std::fprintf(stderr, "usage: bench_solvers [--n B] [--N COUNT] [--repeats R]\n");
      return 2;
    }
  }

#ifdef _OPENMP
  std::printf("openmp: enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled (serial build)\n");
#endif
  std::printf("system: n=%d N=%d, median of %d runs\n\n", n, num_blocks, repeats);

  const BlockTriSystem sys =
      *sim::random_system(20240517, n, num_blocks).system;

  struct Row {
    const char* name;
    std::function<BlockSolution()> run;
  };
  const std::vector<Row> rows = {
      {"fbt (serial)", [&sys] { return fbt_solve(sys); }},
      {"bbt (serial)", [&sys] { return bbt_solve(sys); }},
      {"twofilter (serial)", [&sys] { return twofilter_solve(sys, false); }},
      {"twofilter (2 workers)", [&sys] { return twofilter_solve(sys, true); }},
      {"hybrid (serial)", [&sys] { return hybrid_solve(sys, false); }},
      {"hybrid (2 workers)", [&sys] { return hybrid_solve(sys, true); }},
  };

  std::printf("%-24s %12s %14s\n", "variant", "median (s)", "residual");
  double tf_parallel = 0.0, hy_parallel = 0.0;
  for (const Row& row : rows) {
    double residual = 0.0;
    const double t = median_seconds(row.run, repeats, &residual);
    if (std::string(row.name) == "twofilter (2 workers)") tf_parallel = t;
    if (std::string(row.name) == "hybrid (2 workers)") hy_parallel = t;
    std::printf("%-24s %12.6f %14.3e\n", row.name, t, residual);
  }
  if (tf_parallel > 0.0 && hy_parallel > 0.0)
    std::printf("\nhybrid/twofilter speedup (2 workers): %.2fx\n", tf_parallel / hy_parallel);
  return 0;
}
