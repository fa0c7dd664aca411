#include "ulang/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ulang {

namespace {

constexpr int kMaxDim = 16;

template <class P>
void advance_impl(const P& pot, const SamplerConfig& cfg, const BrownianPath& path,
                  std::span<double> x, std::int64_t step0, std::int64_t n_steps,
                  const std::function<void(std::int64_t, std::span<const double>)>& observe) {
    const int d = pot.dimension();
    const double nc = cfg.noise_coeff();
    const double gamma = cfg.gamma;
    double dw[kMaxDim], g[kMaxDim];
    std::span<double> dws{dw, static_cast<std::size_t>(d)};
    std::span<double> gs{g, static_cast<std::size_t>(d)};
    for (std::int64_t s = 0; s < n_steps; ++s) {
        const std::int64_t step = step0 + s;
        path.increment(static_cast<std::uint64_t>(step), dws);
        pot.gradient(x, gs);
        bool finite = true;
        for (int c = 0; c < d; ++c) {
            x[c] = x[c] - gamma * g[c] + nc * dw[c];
            finite &= std::isfinite(x[c]);
        }
        if (!finite) throw NonFinite("chain state became non-finite", step + 1, cfg.chain_id);
        if (observe) observe(step + 1, x);
    }
}

void check_init(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init) {
    if (static_cast<int>(init.size()) != potential_dim(pot))
        throw DimensionMismatch("init has wrong dimension");
    if (!(cfg.gamma > 0.0)) throw OutOfRange("gamma must be > 0");
    if (cfg.n_steps < 0) throw OutOfRange("n_steps must be >= 0");
    const bool on_surface =
        std::visit([&](const auto& q) { return q.on_discontinuity(init); }, pot);
    if (on_surface) throw OnDiscontinuity("initial condition lies on a discontinuity surface");
}

void write_le_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes little-endian");
    write_le_bytes(os, &v, sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("checkpoint: truncated stream");
    return v;
}

}  // namespace

bool gamma_under_guard(const PotentialInfo& info, double gamma) {
    return gamma < info.max_stable_gamma();
}

std::vector<double> ula_step(const Potential& pot, std::span<const double> x, double gamma,
                             std::span<const double> z, double beta) {
    const int d = potential_dim(pot);
    if (static_cast<int>(x.size()) != d || static_cast<int>(z.size()) != d)
        throw DimensionMismatch("ula_step: dim mismatch");
    std::vector<double> g(d), out(d);
    gradient_tiebreak(pot, x, g);
    const double coef = std::isinf(beta) ? 0.0 : std::sqrt(2.0 * gamma / beta);
    for (int c = 0; c < d; ++c) {
        out[c] = x[c] - gamma * g[c] + coef * z[c];
        if (!std::isfinite(out[c])) throw NonFinite("ula_step produced a non-finite state", 0, 0);
    }
    return out;
}

void advance_chain(const Potential& pot, const SamplerConfig& cfg, const BrownianPath& path,
                   std::span<double> x, std::int64_t step0, std::int64_t n_steps,
                   const std::function<void(std::int64_t, std::span<const double>)>& observe) {
    // Dispatch once so the per-step gradient call inlines.
    std::visit([&](const auto& q) { advance_impl(q, cfg, path, x, step0, n_steps, observe); }, pot);
}

Trajectory run_chain(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init) {
    check_init(pot, cfg, init);
    const int d = potential_dim(pot);
    Trajectory traj;
    traj.config = cfg;
    traj.dim = d;
    traj.states.resize(static_cast<std::size_t>(cfg.n_steps + 1) * d);
    std::copy(init.begin(), init.end(), traj.states.begin());
    std::vector<double> x(init.begin(), init.end());
    BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
    advance_chain(pot, cfg, path, x, 0, cfg.n_steps,
                  [&traj, d](std::int64_t step, std::span<const double> s) {
                      std::copy(s.begin(), s.end(),
                                traj.states.begin() + static_cast<std::size_t>(step) * d);
                  });
    return traj;
}

std::vector<double> interpolate(const Trajectory& traj, const Potential& pot, double t) {
    const double gamma = traj.config.gamma;
    const double t_end = gamma * static_cast<double>(traj.n_steps());
    if (!(t >= 0.0) || t > t_end * (1.0 + 1e-12))
        throw OutOfRange("interpolate: t outside [0, n_steps * gamma]");
    if (traj.dense_level < 0)
        throw MissingCheckpoints("interpolate: trajectory has no bridge access");

    std::int64_t k = static_cast<std::int64_t>(std::floor(t / gamma + 1e-12));
    k = std::min<std::int64_t>(k, traj.n_steps());
    const int subs = 1 << traj.dense_level;
    const double h = gamma / subs;
    const double frac = t - gamma * static_cast<double>(k);
    const int j = static_cast<int>(std::llround(frac / h));
    if (std::fabs(frac - j * h) > 1e-9 * gamma)
        throw OutOfRange("interpolate: t is not on the dense sub-grid");
    if (j == 0 || k == traj.n_steps()) {
        auto s = traj.state(k);
        return {s.begin(), s.end()};
    }

    const int d = traj.dim;
    std::vector<double> g(d);
    gradient_tiebreak(pot, traj.state(k), g);
    BrownianPath path = traj.path();
    std::vector<double> sub;
    path.subincrements(static_cast<std::uint64_t>(k), subs, sub);
    std::vector<double> w(d, 0.0);
    for (int i = 0; i < j; ++i)
        for (int c = 0; c < d; ++c) w[c] += sub[static_cast<std::size_t>(i) * d + c];
    const double nc = traj.config.noise_coeff();
    const double dt = j * h;
    std::vector<double> out(d);
    auto xk = traj.state(k);
    for (int c = 0; c < d; ++c) out[c] = xk[c] - dt * g[c] + nc * w[c];
    return out;
}

CoupledRun run_coupled(const Potential& pot, const SamplerConfig& cfg, std::span<const double> init,
                       int refinement) {
    check_init(pot, cfg, init);
    if (refinement < 1) throw OutOfRange("run_coupled: refinement must be >= 1");
    const int d = potential_dim(pot);
    const double nc = cfg.noise_coeff();
    const double hf = cfg.gamma / refinement;

    CoupledRun run;
    run.refinement = refinement;
    run.coarse.config = cfg;
    run.coarse.dim = d;
    run.coarse.states.resize(static_cast<std::size_t>(cfg.n_steps + 1) * d);
    run.fine.config = cfg;
    run.fine.config.gamma = hf;
    run.fine.config.n_steps = cfg.n_steps * refinement;
    run.fine.dim = d;
    run.fine.dense_level = -1;  // fine increments come from bridging, not a level-0 stream
    run.fine.states.resize(static_cast<std::size_t>(cfg.n_steps * refinement + 1) * d);
    run.error_at_grid.resize(cfg.n_steps + 1);

    std::vector<double> xc(init.begin(), init.end());
    std::vector<double> xf(init.begin(), init.end());
    std::copy(init.begin(), init.end(), run.coarse.states.begin());
    std::copy(init.begin(), init.end(), run.fine.states.begin());
    run.error_at_grid[0] = 0.0;

    BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
    std::vector<double> sub, g(d), inc(d);
    std::visit(
        [&](const auto& q) {
            for (std::int64_t n = 0; n < cfg.n_steps; ++n) {
                path.subincrements(static_cast<std::uint64_t>(n), refinement, sub);
                for (int j = 0; j < refinement; ++j) {
                    q.gradient(xf, g);
                    const double* dw = sub.data() + static_cast<std::size_t>(j) * d;
                    bool ok = true;
                    for (int c = 0; c < d; ++c) {
                        xf[c] = xf[c] - hf * g[c] + nc * dw[c];
                        ok &= std::isfinite(xf[c]);
                    }
                    if (!ok)
                        throw NonFinite("fine chain became non-finite", n * refinement + j + 1,
                                        cfg.chain_id);
                    std::copy(xf.begin(), xf.end(),
                              run.fine.states.begin() +
                                  static_cast<std::size_t>(n * refinement + j + 1) * d);
                }
                path.increment(static_cast<std::uint64_t>(n), inc);
                q.gradient(xc, g);
                bool ok = true;
                for (int c = 0; c < d; ++c) {
                    xc[c] = xc[c] - cfg.gamma * g[c] + nc * inc[c];
                    ok &= std::isfinite(xc[c]);
                }
                if (!ok) throw NonFinite("coarse chain became non-finite", n + 1, cfg.chain_id);
                std::copy(xc.begin(), xc.end(),
                          run.coarse.states.begin() + static_cast<std::size_t>(n + 1) * d);
                double e2 = 0.0;
                for (int c = 0; c < d; ++c) e2 += (xf[c] - xc[c]) * (xf[c] - xc[c]);
                run.error_at_grid[n + 1] = std::sqrt(e2);
            }
        },
        pot);
    return run;
}

SynchronousPair run_synchronous_pair(const Potential& pot, const SamplerConfig& cfg,
                                     std::span<const double> init_a,
                                     std::span<const double> init_b) {
    check_init(pot, cfg, init_a);
    check_init(pot, cfg, init_b);
    const int d = potential_dim(pot);
    const double nc = cfg.noise_coeff();

    SynchronousPair pair;
    for (Trajectory* t : {&pair.a, &pair.b}) {
        t->config = cfg;
        t->dim = d;
        t->states.resize(static_cast<std::size_t>(cfg.n_steps + 1) * d);
    }
    std::copy(init_a.begin(), init_a.end(), pair.a.states.begin());
    std::copy(init_b.begin(), init_b.end(), pair.b.states.begin());
    pair.distance.resize(cfg.n_steps + 1);
    {
        double d2 = 0.0;
        for (int c = 0; c < d; ++c) d2 += (init_a[c] - init_b[c]) * (init_a[c] - init_b[c]);
        pair.distance[0] = std::sqrt(d2);
    }

    std::vector<double> xa(init_a.begin(), init_a.end());
    std::vector<double> xb(init_b.begin(), init_b.end());
    BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
    std::vector<double> inc(d), ga(d), gb(d);
    std::visit(
        [&](const auto& q) {
            for (std::int64_t n = 0; n < cfg.n_steps; ++n) {
                path.increment(static_cast<std::uint64_t>(n), inc);
                q.gradient(xa, ga);
                q.gradient(xb, gb);
                bool ok = true;
                double d2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    xa[c] = xa[c] - cfg.gamma * ga[c] + nc * inc[c];
                    xb[c] = xb[c] - cfg.gamma * gb[c] + nc * inc[c];
                    ok &= std::isfinite(xa[c]) && std::isfinite(xb[c]);
                    d2 += (xa[c] - xb[c]) * (xa[c] - xb[c]);
                }
                if (!ok) throw NonFinite("synchronous pair became non-finite", n + 1, cfg.chain_id);
                std::copy(xa.begin(), xa.end(),
                          pair.a.states.begin() + static_cast<std::size_t>(n + 1) * d);
                std::copy(xb.begin(), xb.end(),
                          pair.b.states.begin() + static_cast<std::size_t>(n + 1) * d);
                pair.distance[n + 1] = std::sqrt(d2);
            }
        },
        pot);
    return pair;
}

DenseWindow sample_dense_window(const Potential& pot, const SamplerConfig& cfg,
                                const BrownianPath& path, std::span<double> x, std::int64_t step0,
                                std::int64_t n_steps, int sub_level) {
    const int d = potential_dim(pot);
    const int subs = 1 << sub_level;
    DenseWindow win;
    win.gamma = cfg.gamma;
    win.dim = d;
    win.subs = subs;
    win.n_steps = n_steps;
    win.grid_states.resize(static_cast<std::size_t>(n_steps + 1) * d);
    win.sub_states.resize(static_cast<std::size_t>(n_steps) * (subs - 1) * d);
    std::copy(x.begin(), x.end(), win.grid_states.begin());

    const double nc = cfg.noise_coeff();
    const double h = cfg.gamma / subs;
    std::vector<double> sub, g(d), w(d), inc(d);
    std::visit(
        [&](const auto& q) {
            for (std::int64_t n = 0; n < n_steps; ++n) {
                const std::uint64_t step = static_cast<std::uint64_t>(step0 + n);
                q.gradient(x, g);
                path.subincrements(step, subs, sub);
                std::fill(w.begin(), w.end(), 0.0);
                for (int j = 1; j < subs; ++j) {
                    for (int c = 0; c < d; ++c) w[c] += sub[static_cast<std::size_t>(j - 1) * d + c];
                    double* dst = win.sub_states.data() +
                                  (static_cast<std::size_t>(n) * (subs - 1) + (j - 1)) * d;
                    const double dt = j * h;
                    for (int c = 0; c < d; ++c) dst[c] = x[c] - dt * g[c] + nc * w[c];
                }
                path.increment(step, inc);
                bool ok = true;
                for (int c = 0; c < d; ++c) {
                    x[c] = x[c] - cfg.gamma * g[c] + nc * inc[c];
                    ok &= std::isfinite(x[c]);
                }
                if (!ok)
                    throw NonFinite("chain state became non-finite", step0 + n + 1, cfg.chain_id);
                std::copy(x.begin(), x.end(),
                          win.grid_states.begin() + static_cast<std::size_t>(n + 1) * d);
            }
        },
        pot);
    return win;
}

void for_each_chain(std::int64_t n_chains, ExecMode mode,
                    const std::function<void(std::int64_t)>& fn) {
    if (mode == ExecMode::Serial) {
        for (std::int64_t c = 0; c < n_chains; ++c) fn(c);
        return;
    }
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < n_chains; ++c) {
        try {
            fn(c);
        } catch (...) {
#pragma omp critical
            {
                if (!first_error) first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

ChainEnsemble run_ensemble(const Potential& pot, const SamplerConfig& base, std::int64_t n_chains,
                           const std::function<std::vector<double>(std::int64_t)>& init_for,
                           ExecMode mode, bool keep_trajectories) {
    const int d = potential_dim(pot);
    ChainEnsemble ens;
    ens.base_config = base;
    ens.dim = d;
    ens.n_chains = n_chains;
    ens.terminal.resize(static_cast<std::size_t>(n_chains) * d);
    if (keep_trajectories) ens.trajectories.resize(n_chains);

    for_each_chain(n_chains, mode, [&](std::int64_t c) {
        SamplerConfig cfg = base;
        cfg.chain_id = base.chain_id + static_cast<std::uint64_t>(c);
        const std::vector<double> init = init_for(c);
        if (keep_trajectories) {
            ens.trajectories[c] = run_chain(pot, cfg, init);
            auto last = ens.trajectories[c].state(cfg.n_steps);
            std::copy(last.begin(), last.end(),
                      ens.terminal.begin() + static_cast<std::size_t>(c) * d);
        } else {
            check_init(pot, cfg, init);
            std::vector<double> x(init);
            BrownianPath path(cfg.seed, cfg.chain_id, d, cfg.gamma);
            advance_chain(pot, cfg, path, x, 0, cfg.n_steps);
            std::copy(x.begin(), x.end(), ens.terminal.begin() + static_cast<std::size_t>(c) * d);
        }
    });
    return ens;
}

namespace {

void csv_header(std::ostream& os, int dim) {
    os << "chain_id,step,t";
    for (int c = 0; c < dim; ++c) os << ",x" << c;
    os << "\n";
}

void csv_rows(std::ostream& os, const Trajectory& traj) {
    char buf[64];
    for (std::int64_t n = 0; n <= traj.n_steps(); ++n) {
        os << traj.config.chain_id << ',' << n << ',';
        std::snprintf(buf, sizeof buf, "%.17g", traj.config.gamma * static_cast<double>(n));
        os << buf;
        auto s = traj.state(n);
        for (double v : s) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    csv_header(os, traj.dim);
    csv_rows(os, traj);
}

void write_trajectory_csv(std::ostream& os, const ChainEnsemble& ens) {
    csv_header(os, ens.dim);
    for (const auto& t : ens.trajectories) csv_rows(os, t);
}

void save_checkpoint(std::ostream& os, const ChainCheckpoint& cp) {
    os.write("ULANGCP1", 8);
    write_le<std::uint32_t>(os, 1u);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cp.state.size()));
    write_le<std::uint64_t>(os, cp.config.seed);
    write_le<std::uint64_t>(os, cp.config.chain_id);
    write_le<std::int64_t>(os, cp.step_index);
    write_le<double>(os, cp.config.gamma);
    write_le<double>(os, cp.config.beta);
    for (double v : cp.state) write_le<double>(os, v);
}

ChainCheckpoint load_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "ULANGCP1", 8) != 0)
        throw Error("checkpoint: bad magic");
    const auto version = read_le<std::uint32_t>(is);
    if (version != 1) throw Error("checkpoint: unsupported version");
    const auto dim = read_le<std::uint32_t>(is);
    ChainCheckpoint cp;
    cp.config.seed = read_le<std::uint64_t>(is);
    cp.config.chain_id = read_le<std::uint64_t>(is);
    cp.step_index = read_le<std::int64_t>(is);
    cp.config.gamma = read_le<double>(is);
    cp.config.beta = read_le<double>(is);
    cp.state.resize(dim);
    for (auto& v : cp.state) v = read_le<double>(is);
    return cp;
}

}  // namespace ulang
