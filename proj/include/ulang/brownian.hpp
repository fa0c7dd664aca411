#pragma once

// One Brownian path per chain, addressable at several resolutions.
//
// Level 0 holds the per-step increments W_{(n+1)g} - W_{ng} used by the
// coarse chain. Refinements are conditional (bridge) draws keyed by
// (seed, chain_id, level, index), so:
//   * the sum of the M sub-increments of a step telescopes back to the
//     level-0 increment (exactly up to rounding),
//   * dyadic refinements nest: the same path sampled at g/4 and g/16 agrees,
//   * nothing is ever stored; any window can be re-materialized on demand.
//
// Instances are cheap (key material only) and not thread-safe; each chain
// owns its own.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ulang/errors.hpp"
#include "ulang/rng.hpp"

namespace ulang {

class BrownianPath {
public:
    BrownianPath(std::uint64_t seed, std::uint64_t chain_id, int dim, double gamma)
        : seed_(seed), chain_id_(chain_id), dim_(dim), gamma_(gamma) {
        if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("BrownianPath: dim out of range");
    }

    int dim() const { return dim_; }
    double gamma() const { return gamma_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t chain_id() const { return chain_id_; }

    // W((n+1)g) - W(ng). out must have dim() entries.
    void increment(std::uint64_t step, std::span<double> out) const {
        const GaussianStream& s = stream(0);
        const double sd = std::sqrt(gamma_);
        for (int c = 0; c < dim_; ++c) out[c] = sd * s(step * dim_ + c);
    }

    // The standard gaussian z_n = (W_{(n+1)g} - W_{ng}) / sqrt(g).
    void step_gaussian(std::uint64_t step, std::span<double> out) const {
        const GaussianStream& s = stream(0);
        for (int c = 0; c < dim_; ++c) out[c] = s(step * dim_ + c);
    }

    // Splits step n into m sub-increments (row-major m x dim). Power-of-two m
    // uses nested midpoint bridging; other m a flat sequential bridge.
    void subincrements(std::uint64_t step, int m, std::vector<double>& out) const {
        if (m < 1) throw OutOfRange("subincrements: m must be >= 1");
        out.resize(static_cast<std::size_t>(m) * dim_);
        std::vector<double> inc(dim_);
        increment(step, inc);
        if (m == 1) {
            for (int c = 0; c < dim_; ++c) out[c] = inc[c];
            return;
        }
        if ((m & (m - 1)) == 0) {
            const int level = levels_for(m);
            split_dyadic(step, 0, step, inc.data(), level, -1, out.data(), nullptr);
        } else {
            split_flat(step, m, inc.data(), out.data());
        }
    }

    // Emits the same dyadic tree at two depths: out_a gets 2^level_a rows,
    // out_b gets 2^level_b rows (level_a <= level_b). Used when two chains at
    // different stepsizes must share one path.
    void subincrements_pair(std::uint64_t step, int level_a, int level_b,
                            std::vector<double>& out_a, std::vector<double>& out_b) const {
        if (level_a < 0 || level_b < level_a) throw OutOfRange("subincrements_pair: bad levels");
        out_a.resize((std::size_t(1) << level_a) * dim_);
        out_b.resize((std::size_t(1) << level_b) * dim_);
        std::vector<double> inc(dim_);
        increment(step, inc);
        if (level_a == 0) {
            for (int c = 0; c < dim_; ++c) out_a[c] = inc[c];
        }
        if (level_b == 0) {
            for (int c = 0; c < dim_; ++c) out_b[c] = inc[c];
            return;
        }
        split_dyadic(step, 0, step, inc.data(), level_b, level_a == 0 ? -1 : level_a,
                     out_b.data(), level_a == 0 ? nullptr : out_a.data());
    }

    static int levels_for(int m) {
        int level = 0;
        while ((1 << level) < m) ++level;
        return level;
    }

private:
    // Recursive midpoint split. idx is the global interval index at `level`
    // (the root interval of step n has index n). Gaussians for the two
    // children of (level, idx) come from stream level+1 at indices idx*dim..
    void split_dyadic(std::uint64_t step, int level, std::uint64_t idx, const double* inc,
                      int target_deep, int target_shallow, double* out_deep, double* out_shallow) const {
        if (target_shallow == level && out_shallow) {
            const std::uint64_t local = idx - (step << level);
            double* dst = out_shallow + local * dim_;
            for (int c = 0; c < dim_; ++c) dst[c] = inc[c];
        }
        if (level == target_deep) {
            const std::uint64_t local = idx - (step << level);
            double* dst = out_deep + local * dim_;
            for (int c = 0; c < dim_; ++c) dst[c] = inc[c];
            return;
        }
        const double parent_len = gamma_ / static_cast<double>(1ull << level);
        const double sd = 0.5 * std::sqrt(parent_len);
        const GaussianStream& s = stream(level + 1);
        double left[kMaxDim] = {}, right[kMaxDim] = {};
        for (int c = 0; c < dim_; ++c) {
            const double z = s(idx * dim_ + c);
            left[c] = 0.5 * inc[c] + sd * z;
            right[c] = inc[c] - left[c];
        }
        split_dyadic(step, level + 1, 2 * idx, left, target_deep, target_shallow, out_deep, out_shallow);
        split_dyadic(step, level + 1, 2 * idx + 1, right, target_deep, target_shallow, out_deep, out_shallow);
    }

    // Sequential bridge for non-dyadic m: draw m-1 conditional sub-increments,
    // the last one is the remainder so the sum telescopes.
    void split_flat(std::uint64_t step, int m, const double* inc, double* out) const {
        const GaussianStream& s = flat_stream(m);
        const double h = gamma_ / m;
        double rem[kMaxDim];
        for (int c = 0; c < dim_; ++c) rem[c] = inc[c];
        for (int j = 0; j < m - 1; ++j) {
            const double len_rem = (m - j) * h;
            const double mean_frac = h / len_rem;
            const double sd = std::sqrt(h * (len_rem - h) / len_rem);
            double* row = out + static_cast<std::size_t>(j) * dim_;
            for (int c = 0; c < dim_; ++c) {
                const double z = s((step * static_cast<std::uint64_t>(m - 1) + j) * dim_ + c);
                row[c] = mean_frac * rem[c] + sd * z;
                rem[c] -= row[c];
            }
        }
        double* last = out + static_cast<std::size_t>(m - 1) * dim_;
        for (int c = 0; c < dim_; ++c) last[c] = rem[c];
    }

    const GaussianStream& stream(int level) const {
        auto& slot = dyadic_[level];
        if (!slot) slot.emplace(seed_, chain_id_, static_cast<std::uint64_t>(level));
        return *slot;
    }

    const GaussianStream& flat_stream(int m) const {
        if (!flat_ || flat_m_ != m) {
            flat_.emplace(seed_, chain_id_, (1ull << 32) | static_cast<std::uint64_t>(m));
            flat_m_ = m;
        }
        return *flat_;
    }

    static constexpr int kMaxDim = 16;
    static constexpr int kMaxLevels = 32;

    std::uint64_t seed_, chain_id_;
    int dim_;
    double gamma_;
    mutable std::array<std::optional<GaussianStream>, kMaxLevels> dyadic_{};
    mutable std::optional<GaussianStream> flat_;
    mutable int flat_m_ = -1;
};

}  // namespace ulang
