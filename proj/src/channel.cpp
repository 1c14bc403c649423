#include "mlas/channel.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace mlas {

void OfdmParams::validate() const {
    if (num_subcarriers < 1) throw std::invalid_argument("num_subcarriers must be >= 1");
    if (!(subcarrier_spacing_hz > 0.0)) throw std::invalid_argument("subcarrier_spacing must be > 0");
    if (!(carrier_wavelength_m > 0.0)) throw std::invalid_argument("carrier_wavelength must be > 0");
}

std::string to_string(CoefficientVariant v) {
    switch (v) {
        case CoefficientVariant::DeterministicAmplitudeRandomPhase:
            return "deterministic-amplitude-random-phase";
        case CoefficientVariant::ComplexGaussian:
            return "complex-gaussian";
        case CoefficientVariant::ComplexGaussianPerSubcarrier:
            return "complex-gaussian-per-subcarrier";
    }
    return "unknown";
}

CoefficientVariant parse_coefficient_variant(const std::string& s) {
    if (s == "deterministic-amplitude-random-phase") return CoefficientVariant::DeterministicAmplitudeRandomPhase;
    if (s == "complex-gaussian") return CoefficientVariant::ComplexGaussian;
    if (s == "complex-gaussian-per-subcarrier") return CoefficientVariant::ComplexGaussianPerSubcarrier;
    throw std::invalid_argument("unknown coefficient model '" + s + "'");
}

void CoefficientModel::validate() const {
    if (!(reference_amplitude > 0.0)) throw std::invalid_argument("reference_amplitude must be > 0");
}

double bistatic_delay(const RadarPairGeometry& pair, const Vec2& target) {
    return ((target - pair.stx.origin()).norm() + (target - pair.srx.origin()).norm()) / kSpeedOfLight;
}

double bistatic_amplitude(const RadarPairGeometry& pair, const Vec2& target, double wavelength,
                          double reference_amplitude) {
    const double d_tx = (target - pair.stx.origin()).norm();
    const double d_rx = (target - pair.srx.origin()).norm();
    if (!(d_tx > 0.0) || !(d_rx > 0.0)) {
        throw GeometryError("target range must be positive");
    }
    const double four_pi_32 = std::pow(4.0 * std::numbers::pi, 1.5);
    return reference_amplitude * wavelength * wavelength / (four_pi_32 * d_tx * d_rx);
}

CMatrix path_coefficients(const Scene& scene, const RadarPairGeometry& pair, const OfdmParams& ofdm,
                          const CoefficientModel& model, RandomEngine& rng) {
    ofdm.validate();
    model.validate();
    const int q_count = ofdm.num_subcarriers;
    const int k_count = scene.num_targets();
    CMatrix alpha(q_count, k_count);
    for (int k = 0; k < k_count; ++k) {
        const Vec2& t = scene.targets[k];
        const double g = bistatic_amplitude(pair, t, ofdm.carrier_wavelength_m, model.reference_amplitude);
        const double tau = bistatic_delay(pair, t);
        std::complex<double> c;
        if (model.variant == CoefficientVariant::DeterministicAmplitudeRandomPhase) {
            c = std::polar(g, uniform_phase(rng));
        } else if (model.variant == CoefficientVariant::ComplexGaussian) {
            c = complex_gaussian(rng, g * g);
        }
        const bool per_subcarrier = model.variant == CoefficientVariant::ComplexGaussianPerSubcarrier;
        const double ramp = -2.0 * std::numbers::pi * ofdm.subcarrier_spacing_hz * tau;
        for (int q = 0; q < q_count; ++q) {
            if (per_subcarrier) c = complex_gaussian(rng, g * g);
            // Reduce the phase before polar() so large q*tau keeps full precision.
            const double phase = std::remainder(ramp * q, 2.0 * std::numbers::pi);
            alpha(q, k) = c * std::polar(1.0, phase);
        }
    }
    return alpha;
}

RadarPairObservation synthesize_observation(const Scene& scene, const RadarPairGeometry& pair,
                                            const CMatrix& coefficients, double noise_variance,
                                            RandomEngine& rng) {
    if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
    if (coefficients.cols() != scene.num_targets()) {
        throw std::invalid_argument("coefficient matrix must have one column per target");
    }
    std::vector<AnglePair> angles;
    angles.reserve(scene.targets.size());
    for (const auto& t : scene.targets) angles.push_back(angles_for_target(pair, t));
    const CMatrix a = steering_matrix(pair, angles);

    RadarPairObservation obs;
    obs.noise_variance = noise_variance;
    obs.channels.reserve(static_cast<std::size_t>(coefficients.rows()));
    for (Eigen::Index q = 0; q < coefficients.rows(); ++q) {
        CVector h = a * coefficients.row(q).transpose();
        if (noise_variance > 0.0) {
            for (Eigen::Index i = 0; i < h.size(); ++i) h[i] += complex_gaussian(rng, noise_variance);
        }
        obs.channels.push_back(std::move(h));
    }
    obs.covariance = sample_covariance(obs.channels);
    return obs;
}

RadarPairObservation synthesize_observation(const Scene& scene, const RadarPairGeometry& pair,
                                            const OfdmParams& ofdm, const CoefficientModel& model,
                                            double noise_variance, RandomEngine& rng) {
    const CMatrix alpha = path_coefficients(scene, pair, ofdm, model, rng);
    return synthesize_observation(scene, pair, alpha, noise_variance, rng);
}

CMatrix sample_covariance(std::span<const CVector> channels) {
    if (channels.empty()) throw std::invalid_argument("sample covariance needs at least one vector");
    const Eigen::Index n = channels.front().size();
    CMatrix stacked(n, static_cast<Eigen::Index>(channels.size()));
    for (std::size_t q = 0; q < channels.size(); ++q) {
        if (channels[q].size() != n) throw std::invalid_argument("channel vectors differ in length");
        stacked.col(static_cast<Eigen::Index>(q)) = channels[q];
    }
    CMatrix r = CMatrix::Zero(n, n);
    r.selfadjointView<Eigen::Lower>().rankUpdate(stacked, 1.0 / static_cast<double>(channels.size()));
    // Exact Hermitian symmetry from the lower triangle.
    CMatrix full = r.selfadjointView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < n; ++i) full(i, i) = full(i, i).real();
    return full;
}

double calibrate_noise_for_snr(std::span<const CMatrix> coefficients, double snr_db) {
    double power = 0.0;
    std::size_t count = 0;
    for (const auto& c : coefficients) {
        power += c.cwiseAbs2().sum();
        count += static_cast<std::size_t>(c.size());
    }
    if (count == 0 || !(power > 0.0)) {
        throw std::invalid_argument("SNR calibration needs at least one nonzero coefficient");
    }
    const double mean_power = power / static_cast<double>(count);
    return mean_power / std::pow(10.0, snr_db / 10.0);
}

void write_observation_csv(std::ostream& os, const RadarPairObservation& obs) {
    os << std::setprecision(17);
    for (const auto& h : obs.channels) {
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            if (i) os << ',';
            os << h[i].real() << ',' << h[i].imag();
        }
        os << '\n';
    }
}

}  // namespace mlas
