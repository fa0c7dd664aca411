// Times the ensemble drivers: serial reference vs OpenMP, identical work.
// The two must produce bit-identical terminal states (counter-based noise);
// the benchmark checks that while measuring the speedup.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ulang/potential.hpp"
#include "ulang/sampler.hpp"

using namespace ulang;

namespace {

double time_run(const Potential& pot, const SamplerConfig& cfg, std::int64_t n_chains,
                ExecMode mode, std::vector<double>& terminals) {
    const auto t0 = std::chrono::steady_clock::now();
    auto ens = run_ensemble(pot, cfg, n_chains,
                            [](std::int64_t) { return std::vector<double>{0.3}; }, mode);
    terminals = std::move(ens.terminal);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::int64_t n_chains = 2000;
    std::int64_t n_steps = 5000;
    if (argc > 1) n_chains = std::atoll(argv[1]);
    if (argc > 2) n_steps = std::atoll(argv[2]);

    const Potential pot = LaplaceGaussian1d({-1.0, 1.0}, 1.0, 0.0, 1.0);
    SamplerConfig cfg{0.001, n_steps, 1.0, 4242, 0};

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("ensemble benchmark: %lld chains x %lld steps, %d thread(s)\n",
                static_cast<long long>(n_chains), static_cast<long long>(n_steps), threads);

    std::vector<double> serial_out, parallel_out;
    const double warm = time_run(pot, cfg, n_chains / 10 + 1, ExecMode::Parallel, parallel_out);
    (void)warm;

    const double ts = time_run(pot, cfg, n_chains, ExecMode::Serial, serial_out);
    const double tp = time_run(pot, cfg, n_chains, ExecMode::Parallel, parallel_out);

    const bool identical = serial_out == parallel_out;
    const double steps = static_cast<double>(n_chains) * static_cast<double>(n_steps);
    std::printf("  serial   %8.3f s   (%.1f Msteps/s)\n", ts, steps / ts / 1e6);
    std::printf("  parallel %8.3f s   (%.1f Msteps/s)\n", tp, steps / tp / 1e6);
    std::printf("  speedup  %.2fx, outputs %s\n", ts / tp,
                identical ? "bit-identical" : "DIFFER (bug)");
    return identical ? 0 : 1;
}
