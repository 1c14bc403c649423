#ifndef MLAS_SUBSPACE_HPP
#define MLAS_SUBSPACE_HPP

#include <iosfwd>
#include <vector>

#include "mlas/geometry.hpp"

namespace mlas {

/// Upper bound returned by music_value at exact orthogonality poles.
inline constexpr double kMusicCap = 1e12;
/// Refined MUSIC peaks closer than this in both angles count as one peak.
inline constexpr double kDuplicateToleranceRad = 0.2 * 3.14159265358979323846 / 180.0;

/// Orthonormal basis of the noise subspace of a sample covariance.
struct NoiseSubspace {
    /// n x (n - K), eigenvectors of the n - K smallest eigenvalues.
    CMatrix basis;
    /// All eigenvalues of the covariance, ascending.
    Eigen::VectorXd eigenvalues;
    int num_sources = 0;

    /// True when the K-th and (K+1)-th largest eigenvalues coincide to
    /// 1e-9 relative, i.e. the signal/noise split is not identifiable.
    bool split_degenerate() const;
};

/// Throws std::invalid_argument unless 1 <= K < n.
NoiseSubspace noise_subspace(const CMatrix& covariance, int num_sources);

/// 1 / (a^H G G^H a) for the joint steering vector a, capped at kMusicCap.
double music_value(const NoiseSubspace& subspace, const RadarPairGeometry& pair, double aod, double aoa);
double music_value(const NoiseSubspace& subspace, const CVector& steering);

struct AngleGridSpec {
    double spacing_rad = 3.14159265358979323846 / 180.0;
    double refine_initial_step_rad = 0.5 * 3.14159265358979323846 / 180.0;
    double refine_min_step_rad = 1e-5;
    int refine_max_iterations = 100;
    double gradient_step_rad = 1e-6;
};

struct PreEstimate {
    /// Sorted by descending pseudo-spectrum value.
    std::vector<AnglePair> angle_pairs;
    std::vector<double> spectrum_values;
    /// Fewer than K local maxima were found, or the subspace split is degenerate.
    bool low_quality = false;

    int size() const { return static_cast<int>(angle_pairs.size()); }
};

struct AngleSpectrum {
    std::vector<double> aod_grid;
    std::vector<double> aoa_grid;
    /// values(i, j) at (aod_grid[i], aoa_grid[j]).
    Eigen::MatrixXd values;
};

/// Uniform grid strictly inside (-pi/2, pi/2), symmetric about 0.
std::vector<double> angle_grid(double spacing_rad);

AngleSpectrum music_spectrum(const NoiseSubspace& subspace, const RadarPairGeometry& pair,
                             const AngleGridSpec& grid);

/**
 * MUSIC pre-estimation of K angle pairs.
 *
 * Interior grid local maxima (strictly above all 8 neighbours) are ranked
 * and refined in turn by gradient ascent on log J until K distinct peaks are
 * found; a maximum that converges within kDuplicateToleranceRad of an accepted
 * peak is skipped. When fewer than K distinct peaks exist the list is padded
 * from the largest remaining grid values and the estimate is flagged
 * low-quality.
 */
PreEstimate pre_estimate(const CMatrix& covariance, int num_sources, const RadarPairGeometry& pair,
                         const AngleGridSpec& grid = {});

PreEstimate pre_estimate(const NoiseSubspace& subspace, const RadarPairGeometry& pair,
                         const AngleGridSpec& grid = {});

/// CSV rows aod_rad,aoa_rad,value.
void write_spectrum_csv(std::ostream& os, const AngleSpectrum& spectrum);

}  // namespace mlas

#endif  // MLAS_SUBSPACE_HPP
