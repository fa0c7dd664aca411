#pragma once

// Unadjusted Langevin chains: x_{n+1} = x_n - g * grad U(x_n) + sqrt(2g/beta) z_{n+1},
// their continuous interpolation (drift frozen at the last grid state), coupled
// coarse/fine runs sharing one Brownian path, and synchronous pairs.
//
// All drivers are deterministic functions of (seed, chain_id, gamma, n, init):
// noise is counter-based, so ensembles can run serially or under OpenMP with
// bit-identical results.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ulang/brownian.hpp"
#include "ulang/errors.hpp"
#include "ulang/potential.hpp"

namespace ulang {

struct SamplerConfig {
    double gamma = 0.01;
    std::int64_t n_steps = 100;
    double beta = 1.0;  // inverse temperature; +inf gives plain gradient descent
    std::uint64_t seed = 0;
    std::uint64_t chain_id = 0;

    double noise_coeff() const {
        return std::isinf(beta) ? 0.0 : std::sqrt(2.0 / beta);
    }
};

// Warns (returns false) when gamma is at or above the guard mu / (2 L^2).
bool gamma_under_guard(const PotentialInfo& info, double gamma);

// One explicit update from a standard gaussian z, exactly as written.
std::vector<double> ula_step(const Potential& pot, std::span<const double> x, double gamma,
                             std::span<const double> z, double beta);

struct Trajectory {
    SamplerConfig config;
    int dim = 1;
    int dense_level = 3;  // bridge sub-increments available at gamma / 2^dense_level
    std::vector<double> states;  // (n_steps + 1) x dim, row-major

    std::span<const double> state(std::int64_t n) const {
        return {states.data() + static_cast<std::size_t>(n) * dim, static_cast<std::size_t>(dim)};
    }
    std::int64_t n_steps() const { return config.n_steps; }
    BrownianPath path() const {
        return BrownianPath(config.seed, config.chain_id, dim, config.gamma);
    }
};

Trajectory run_chain(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init);

// X_t for t between grid points: the last grid state moved by the frozen
// drift plus the Brownian bridge increment, X_t = X_k - (t - k) grad U(X_k)
// + sqrt(2/beta) (W_t - W_k). t must lie on the trajectory's dense sub-grid
// (resolution gamma / 2^dense_level).
std::vector<double> interpolate(const Trajectory& traj, const Potential& pot, double t);

struct CoupledRun {
    Trajectory coarse;               // stepsize gamma
    Trajectory fine;                 // stepsize gamma / refinement, same path
    int refinement = 1;
    std::vector<double> error_at_grid;  // |fine - coarse| at coarse grid times
};

CoupledRun run_coupled(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init,
                       int refinement);

struct SynchronousPair {
    Trajectory a, b;
    std::vector<double> distance;  // |a_n - b_n| per step
};

SynchronousPair run_synchronous_pair(const Potential& pot, const SamplerConfig& cfg,
                                     std::span<const double> init_a, std::span<const double> init_b);

// --- streaming kernels ----------------------------------------------------

// Advances a state in place by n_steps starting at absolute step index
// step0, reporting each new state to observe(step_index, state). Throws
// NonFinite with the offending step on blow-up.
void advance_chain(const Potential& pot, const SamplerConfig& cfg, const BrownianPath& path,
                   std::span<double> x, std::int64_t step0, std::int64_t n_steps,
                   const std::function<void(std::int64_t, std::span<const double>)>& observe = nullptr);

// Dense view of a chain segment: grid states plus all sub-grid interpolated
// states at resolution gamma / subs; produced by re-materializing the bridge,
// nothing needs to have been stored.
struct DenseWindow {
    double gamma = 0.0;
    int dim = 1;
    int subs = 8;                     // sub-states per step
    std::int64_t n_steps = 0;
    std::vector<double> grid_states;  // (n_steps + 1) x dim
    std::vector<double> sub_states;   // n_steps x (subs-1) x dim; entry j is X at k + (j+1) gamma/subs

    std::span<const double> grid(std::int64_t n) const {
        return {grid_states.data() + static_cast<std::size_t>(n) * dim,
                static_cast<std::size_t>(dim)};
    }
    std::span<const double> sub(std::int64_t n, int j) const {
        return {sub_states.data() + (static_cast<std::size_t>(n) * (subs - 1) + j) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// Runs the chain forward n_steps from (x, step0), filling a DenseWindow with
// sub-resolution gamma / 2^sub_level. x is advanced to the window's end.
DenseWindow sample_dense_window(const Potential& pot, const SamplerConfig& cfg,
                                const BrownianPath& path, std::span<double> x, std::int64_t step0,
                                std::int64_t n_steps, int sub_level);

// --- ensembles -------------------------------------------------------------

enum class ExecMode { Serial, Parallel };

// Runs fn(chain_index) for every chain, serially or under OpenMP. Exceptions
// are captured and the first one rethrown after the loop. fn must only write
// to chain-indexed slots.
void for_each_chain(std::int64_t n_chains, ExecMode mode,
                    const std::function<void(std::int64_t)>& fn);

struct ChainEnsemble {
    SamplerConfig base_config;  // chain c uses chain_id = base.chain_id + c
    int dim = 1;
    std::int64_t n_chains = 0;
    std::vector<double> terminal;       // n_chains x dim
    std::vector<Trajectory> trajectories;  // filled only if keep_trajectories

    std::span<const double> terminal_state(std::int64_t c) const {
        return {terminal.data() + static_cast<std::size_t>(c) * dim, static_cast<std::size_t>(dim)};
    }
};

// init_for(c) provides chain c's start point (deterministic per chain).
ChainEnsemble run_ensemble(const Potential& pot, const SamplerConfig& base, std::int64_t n_chains,
                           const std::function<std::vector<double>(std::int64_t)>& init_for,
                           ExecMode mode, bool keep_trajectories = false);

// --- persistence -----------------------------------------------------------

// Columnar dump: header chain_id,step,t,x0,x1,...
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(std::ostream& os, const ChainEnsemble& ens);

// Binary checkpoint for resuming long runs. Little-endian layout:
//   bytes 0..7   magic "ULANGCP1"
//   u32 version (=1), u32 dim
//   u64 seed, u64 chain_id, i64 step_index
//   f64 gamma, f64 beta
//   f64 state[dim]
struct ChainCheckpoint {
    SamplerConfig config;  // n_steps unused
    std::int64_t step_index = 0;
    std::vector<double> state;
};

void save_checkpoint(std::ostream& os, const ChainCheckpoint& cp);
ChainCheckpoint load_checkpoint(std::istream& is);

}  // namespace ulang
