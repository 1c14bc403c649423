#ifndef MLAS_CHANNEL_HPP
#define MLAS_CHANNEL_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mlas/geometry.hpp"
#include "mlas/random.hpp"

namespace mlas {

inline constexpr double kSpeedOfLight = 299792458.0;

struct OfdmParams {
    int num_subcarriers = 1024;
    double subcarrier_spacing_hz = 156.25e3;
    double carrier_wavelength_m = kSpeedOfLight / 5.2e9;

    void validate() const;
};

enum class CoefficientVariant {
    DeterministicAmplitudeRandomPhase,
    ComplexGaussian,
    /// Independent CN(0, g_k^2) factor per subcarrier (Swerling II across frequency).
    ComplexGaussianPerSubcarrier,
};

std::string to_string(CoefficientVariant v);
CoefficientVariant parse_coefficient_variant(const std::string& s);

struct CoefficientModel {
    CoefficientVariant variant = CoefficientVariant::DeterministicAmplitudeRandomPhase;
    double reference_amplitude = 1.0;

    void validate() const;
};

/// Noisy channel vectors of one radar pair and their sample covariance.
struct RadarPairObservation {
    std::vector<CVector> channels;
    CMatrix covariance;
    double noise_variance = 0.0;
};

/// (|STx->target| + |target->SRx|) / c.
double bistatic_delay(const RadarPairGeometry& pair, const Vec2& target);

/// Bistatic radar-equation amplitude with unit RCS:
/// reference_amplitude * lambda^2 / ((4 pi)^{3/2} d_tx d_rx).
double bistatic_amplitude(const RadarPairGeometry& pair, const Vec2& target, double wavelength,
                          double reference_amplitude);

/**
 * Path coefficients alpha_{q,k} for every subcarrier q and target k (Q x K).
 *
 * Entry (q, k) = c_k * exp(-j 2 pi q df tau_k), where c_k is g_k * exp(j psi_k)
 * with uniform psi_k for the deterministic variant, or a CN(0, g_k^2) draw for
 * the complex-gaussian variant. The per-subcarrier variant draws a fresh c_k
 * for every q. Throws GeometryError for zero-range targets.
 */
CMatrix path_coefficients(const Scene& scene, const RadarPairGeometry& pair, const OfdmParams& ofdm,
                          const CoefficientModel& model, RandomEngine& rng);

/// h_q = A(Psi) alpha_q + n_q, n_q ~ CN(0, noise_variance I). `coefficients` is Q x K.
RadarPairObservation synthesize_observation(const Scene& scene, const RadarPairGeometry& pair,
                                            const CMatrix& coefficients, double noise_variance,
                                            RandomEngine& rng);

/// Draws coefficients from `rng` first, then noise from the same stream.
RadarPairObservation synthesize_observation(const Scene& scene, const RadarPairGeometry& pair,
                                            const OfdmParams& ofdm, const CoefficientModel& model,
                                            double noise_variance, RandomEngine& rng);

/// (1/Q) sum_q h_q h_q^H.
CMatrix sample_covariance(std::span<const CVector> channels);

/**
 * Single noise variance shared by all pairs such that the mean of
 * |alpha|^2 / sigma^2 over pairs, subcarriers and paths is 10^(snr_db/10).
 * Throws std::invalid_argument when every coefficient is zero.
 */
double calibrate_noise_for_snr(std::span<const CMatrix> coefficients, double snr_db);

/// One row per subcarrier: re0,im0,re1,im1,...
void write_observation_csv(std::ostream& os, const RadarPairObservation& obs);

}  // namespace mlas

#endif  // MLAS_CHANNEL_HPP
