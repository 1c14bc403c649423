#ifndef MLAS_LIKELIHOOD_HPP
#define MLAS_LIKELIHOOD_HPP

#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlas/ascent.hpp"
#include "mlas/geometry.hpp"
#include "mlas/subspace.hpp"

namespace mlas {

/// Angular window (both coordinates) within which a candidate column replaces
/// a fixed pre-estimated column.
inline constexpr double kCollisionToleranceRad = 0.2 * 3.14159265358979323846 / 180.0;

/// Smallest/largest singular value ratio below which a steering matrix is
/// treated as rank-deficient.
inline constexpr double kRankTolerance = 1e-8;

inline constexpr double kExcluded = -std::numeric_limits<double>::infinity();

class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Everything the central processor receives from one radar pair.
 *
 * Fusion reads nothing else: no raw channel vectors are needed, only the
 * (M_p N_p)^2 covariance, the noise variance, the subcarrier count and the K
 * MUSIC pre-estimates. Immutable after construction.
 */
class PerPairContext {
public:
    /// Throws std::invalid_argument on dimension mismatch, noise_variance <= 0,
    /// num_subcarriers < 1, an empty pre-estimate or K >= M_p N_p.
    PerPairContext(RadarPairGeometry geometry, CMatrix covariance, double noise_variance, int num_subcarriers,
                   PreEstimate pre_estimates);

    const RadarPairGeometry& geometry() const { return geometry_; }
    const CMatrix& covariance() const { return covariance_; }
    double noise_variance() const { return noise_variance_; }
    int num_subcarriers() const { return num_subcarriers_; }
    const PreEstimate& pre_estimates() const { return pre_estimates_; }
    int num_targets() const { return pre_estimates_.size(); }

    /// Q_p / (2 sigma_p^2).
    double weight() const { return 0.5 * num_subcarriers_ / noise_variance_; }

    /// Noise subspace of the covariance for K = num_targets().
    const NoiseSubspace& noise_subspace() const { return subspace_; }

    /// Joint steering vector of the k-th pre-estimate.
    const CVector& fixed_column(int k) const { return fixed_columns_[static_cast<std::size_t>(k)]; }

private:
    RadarPairGeometry geometry_;
    CMatrix covariance_;
    double noise_variance_;
    int num_subcarriers_;
    PreEstimate pre_estimates_;
    NoiseSubspace subspace_;
    std::vector<CVector> fixed_columns_;
};

/**
 * Tr{A A^+ R} with A^+ = (A^H A)^{-1} A^H, evaluated through a thin QR of A.
 *
 * Throws RankDeficientError when the smallest singular value of A is below
 * kRankTolerance times the largest.
 */
double projection_trace(const CMatrix& a, const CMatrix& r);

/// Mean of the M_p N_p - K smallest covariance eigenvalues.
double estimate_noise_variance(const CMatrix& covariance, int num_sources);

/**
 * Per-target log-likelihood (Q/(2 sigma^2)) Tr{A A^+ R} where A holds the K
 * pre-estimated columns with column k replaced by the candidate angles of
 * `position`.
 *
 * Fixed columns within kCollisionToleranceRad of the candidate are dropped; if
 * the remaining matrix is still rank-deficient the fixed column most aligned
 * with another column is dropped until it is not. Returns kExcluded when the
 * position is outside the pair's field of view.
 */
double per_target_likelihood(const PerPairContext& ctx, int k, const Vec2& position);

struct LocalValue {
    double value = kExcluded;
    int active_target = -1;
};

/// max_k per_target_likelihood and its argmax (lowest k on ties).
LocalValue local_map_evaluate(const PerPairContext& ctx, const Vec2& position);
double local_map_value(const PerPairContext& ctx, const Vec2& position);

struct GridSpec {
    double x_min = -5.0;
    double x_max = 5.0;
    double y_min = 2.0;
    double y_max = 12.0;
    double spacing = 0.25;

    void validate() const;
    int nx() const;
    int ny() const;
    double x(int i) const { return x_min + i * spacing; }
    double y(int j) const { return y_min + j * spacing; }
    Vec2 point(int i, int j) const { return {x(i), y(j)}; }
};

/// Real-valued x-y map; values(i, j) belongs to grid.point(i, j).
struct LikelihoodMap {
    GridSpec grid;
    Eigen::MatrixXd values;
};

/// Sum over pairs of local_map_value at every grid node.
LikelihoodMap combined_map(std::span<const PerPairContext> contexts, const GridSpec& grid);

double combined_value(std::span<const PerPairContext> contexts, const Vec2& position);

/// Active target index of every pair at `position`.
std::vector<int> active_targets(std::span<const PerPairContext> contexts, const Vec2& position);

/// Sum over pairs of the per-target likelihood of the given (frozen) targets.
ScalarField frozen_combined_field(std::span<const PerPairContext> contexts, std::vector<int> active);

inline constexpr double kGradientStep = 1e-4;

/// Combined value and its finite-difference gradient, holding each pair's
/// active target fixed at its argmax at `position`.
ValueGradient combined_value_and_gradient(std::span<const PerPairContext> contexts, const Vec2& position,
                                          double step = kGradientStep);

/// CSV rows x,y,value,value_db where value_db = 10 log10(value / max value).
void write_map_csv(std::ostream& os, const LikelihoodMap& map);

}  // namespace mlas

#endif  // MLAS_LIKELIHOOD_HPP
