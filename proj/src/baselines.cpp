#include "mlas/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlas/subspace.hpp"

namespace mlas {

std::string to_string(SpectrumScale s) { return s == SpectrumScale::Linear ? "linear" : "db"; }

SpectrumScale parse_spectrum_scale(const std::string& s) {
    if (s == "linear") return SpectrumScale::Linear;
    if (s == "db") return SpectrumScale::Decibel;
    throw std::invalid_argument("unknown spectrum scale '" + s + "'");
}

double music_combination_value(std::span<const PerPairContext> contexts, const Vec2& position,
                               SpectrumScale scale) {
    double sum = 0.0;
    for (const auto& ctx : contexts) {
        const auto angles = try_angles_for_target(ctx.geometry(), position);
        if (!angles) return kExcluded;
        const double j = music_value(ctx.noise_subspace(), ctx.geometry(), angles->aod, angles->aoa);
        sum += scale == SpectrumScale::Linear ? j : 10.0 * std::log10(j);
    }
    return sum;
}

LikelihoodMap music_combination_map(std::span<const PerPairContext> contexts, const GridSpec& grid,
                                    SpectrumScale scale) {
    grid.validate();
    if (contexts.empty()) throw std::invalid_argument("music combination needs at least one radar pair");
    const int k_count = contexts.front().num_targets();
    for (const auto& ctx : contexts) {
        if (ctx.num_targets() != k_count) throw std::invalid_argument("all radar pairs must share the same K");
    }
    LikelihoodMap map;
    map.grid = grid;
    map.values.resize(grid.nx(), grid.ny());
    for (int i = 0; i < grid.nx(); ++i) {
        for (int j = 0; j < grid.ny(); ++j) {
            map.values(i, j) = music_combination_value(contexts, grid.point(i, j), scale);
        }
    }
    return map;
}

ScalarField MusicCombinationObjective::field_from(const Vec2&) const {
    return [contexts = contexts_, scale = scale_](const Vec2& p) {
        return music_combination_value(contexts, p, scale);
    };
}

BaselineResult soft_fusion_estimate(std::span<const PerPairContext> contexts, std::span<const Vec2> truth) {
    if (truth.empty()) throw std::invalid_argument("soft fusion needs at least one true target");
    const double inf = std::numeric_limits<double>::infinity();

    BaselineResult out;
    out.method = "soft-fusion";
    for (std::size_t p = 0; p < contexts.size(); ++p) {
        const auto& ctx = contexts[p];
        const auto& pairs = ctx.pre_estimates().angle_pairs;
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            LocalEstimate le;
            le.pair_index = static_cast<int>(p);
            le.estimate_index = static_cast<int>(e);
            le.ray = locate_from_angles(ctx.geometry(), pairs[e]);
            if (!le.ray.infinite) {
                double best = inf;
                for (std::size_t t = 0; t < truth.size(); ++t) {
                    const double d = (le.ray.point - truth[t]).norm();
                    if (d < best) {
                        best = d;
                        le.assigned_target = static_cast<int>(t);
                    }
                }
            }
            out.local_estimates.push_back(le);
        }
    }

    out.positions.assign(truth.size(), Vec2(inf, inf));
    out.flagged.assign(truth.size(), true);
    for (std::size_t t = 0; t < truth.size(); ++t) {
        Vec2 sum = Vec2::Zero();
        int count = 0;
        const LocalEstimate* fallback = nullptr;
        for (const auto& le : out.local_estimates) {
            if (le.assigned_target != static_cast<int>(t)) continue;
            if (!le.unusable()) {
                sum += le.ray.point;
                ++count;
            } else if (!fallback || le.ray.crossing_sine > fallback->ray.crossing_sine) {
                fallback = &le;
            }
        }
        if (count > 0) {
            out.positions[t] = sum / count;
            out.flagged[t] = false;
        } else if (fallback) {
            out.positions[t] = fallback->ray.point;
        }
    }
    return out;
}

}  // namespace mlas
