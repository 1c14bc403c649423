#ifndef MLAS_BASELINES_HPP
#define MLAS_BASELINES_HPP

#include <span>
#include <string>
#include <vector>

#include "mlas/detection.hpp"
#include "mlas/likelihood.hpp"

namespace mlas {

/// How per-pair pseudo-spectra are summed in the MUSIC-combination map.
enum class SpectrumScale {
    Linear,
    Decibel,
};

std::string to_string(SpectrumScale s);
SpectrumScale parse_spectrum_scale(const std::string& s);

/// Sum over pairs of J_p at the position's angles (or of 10 log10 J_p).
double music_combination_value(std::span<const PerPairContext> contexts, const Vec2& position,
                               SpectrumScale scale = SpectrumScale::Linear);

/// Uniformly weighted sum of the pairs' MUSIC pseudo-spectra on an x-y grid.
LikelihoodMap music_combination_map(std::span<const PerPairContext> contexts, const GridSpec& grid,
                                    SpectrumScale scale = SpectrumScale::Linear);

class MusicCombinationObjective : public PeakObjective {
public:
    MusicCombinationObjective(std::span<const PerPairContext> contexts, SpectrumScale scale)
        : contexts_(contexts), scale_(scale) {}
    ScalarField field_from(const Vec2& seed) const override;

private:
    std::span<const PerPairContext> contexts_;
    SpectrumScale scale_;
};

/// One pair's intersection of the STx ray at a pre-estimated AoD with the SRx
/// ray at the matching AoA.
struct LocalEstimate {
    int pair_index = 0;
    int estimate_index = 0;
    RayIntersection ray;
    /// True target this estimate was associated with, -1 if none.
    int assigned_target = -1;

    /// Near-parallel, behind an origin, or without a finite crossing.
    bool unusable() const { return ray.degenerate || ray.behind || ray.infinite; }
};

struct BaselineResult {
    std::string method;
    /// One per true target; +infinity coordinates when no estimate exists.
    std::vector<Vec2> positions;
    /// Target had no usable local estimate.
    std::vector<bool> flagged;
    std::vector<LocalEstimate> local_estimates;
};

/**
 * Parametric soft fusion with perfect association.
 *
 * Each pre-estimated angle pair is triangulated by ray intersection, assigned
 * to the nearest true target, and the usable estimates of each target are
 * averaged. A target with only unusable estimates takes the finite one with
 * the largest crossing angle; with none it is flagged and placed at infinity.
 */
BaselineResult soft_fusion_estimate(std::span<const PerPairContext> contexts, std::span<const Vec2> truth);

}  // namespace mlas

#endif  // MLAS_BASELINES_HPP
