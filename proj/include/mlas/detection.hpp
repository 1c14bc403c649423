#ifndef MLAS_DETECTION_HPP
#define MLAS_DETECTION_HPP

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlas/ascent.hpp"
#include "mlas/likelihood.hpp"

namespace mlas {

class DetectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Detection {
    Vec2 position = Vec2::Zero();
    double value = 0.0;
    int cell_i = 0;
    int cell_j = 0;
    bool refined = false;
    /// Not a strict local maximum; added by the fill rule.
    bool fill = false;
    /// Refinement left the one-cell neighbourhood and was reverted.
    bool reverted = false;
};

/// Peaks sorted by descending value.
struct DetectionSet {
    std::vector<Detection> peaks;

    std::vector<Vec2> positions() const;
    int size() const { return static_cast<int>(peaks.size()); }
};

/// Minimum Chebyshev cell distance between fill-in peaks and earlier peaks.
inline constexpr int kFillSeparationCells = 2;

/**
 * K highest strict local maxima of the map (interior cells strictly above all
 * of their finite 8-neighbours). Equal values are ordered by x then y. Missing peaks are
 * filled with the largest remaining cells at least kFillSeparationCells away
 * from those already chosen. Throws DetectionError when the map has no finite
 * cell.
 */
DetectionSet find_peaks(const LikelihoodMap& map, int k);

/// Supplies the field ascended from a given seed. The field may depend on
/// the seed (e.g. active targets frozen at the seed cell).
class PeakObjective {
public:
    virtual ~PeakObjective() = default;
    virtual ScalarField field_from(const Vec2& seed) const = 0;
};

/// Combined alternating-summation likelihood with each pair's active target
/// frozen at the seed.
class CombinedLikelihoodObjective : public PeakObjective {
public:
    explicit CombinedLikelihoodObjective(std::span<const PerPairContext> contexts) : contexts_(contexts) {}
    ScalarField field_from(const Vec2& seed) const override;

private:
    std::span<const PerPairContext> contexts_;
};

struct RefineOptions {
    double initial_step = 0.1;
    double min_step = 1e-4;
    int max_iterations = 200;
    double gradient_step = kGradientStep;
};

/**
 * Gradient ascent from each peak. A refined position farther than one grid
 * cell diagonal (spacing * sqrt 2) from its seed is reverted to the seed and
 * flagged. Output is re-sorted by descending refined value.
 */
DetectionSet refine_peaks(const DetectionSet& detections, const PeakObjective& objective, double grid_spacing,
                          const RefineOptions& options = {});

DetectionSet refine_peaks(const DetectionSet& detections, std::span<const PerPairContext> contexts,
                          double grid_spacing, const RefineOptions& options = {});

/**
 * Peak selection with refinement in the loop: strict local maxima are refined
 * in descending grid order, and a maximum whose ascent ends within one grid
 * spacing of an already accepted peak is treated as the same peak and skipped.
 * Unlike refine_peaks, an accepted ascent may travel any distance while it
 * stays inside the grid bounds; one that leaves them is reverted.
 * Missing peaks come from the fill rule of find_peaks and are refined too.
 * Always returns K peaks sorted by descending value.
 */
DetectionSet detect_peaks(const LikelihoodMap& map, int k, const PeakObjective& objective,
                          const RefineOptions& options = {});

/// CSV rows rank,x,y,value,refined_flag.
void write_detections_csv(std::ostream& os, const DetectionSet& detections);

}  // namespace mlas

#endif  // MLAS_DETECTION_HPP
