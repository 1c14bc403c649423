#include "mlas/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "mlas/ascent.hpp"

namespace mlas {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

struct GridPeak {
    int i = 0;
    int j = 0;
    double value = 0.0;
};

// Border cells lack a full neighbourhood and never qualify.
bool is_strict_local_max(const Eigen::MatrixXd& v, int i, int j) {
    if (i < 1 || j < 1 || i + 1 >= v.rows() || j + 1 >= v.cols()) return false;
    const double c = v(i, j);
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int ii = i + di;
            const int jj = j + dj;
            if (!(c > v(ii, jj))) return false;
        }
    }
    return true;
}

// Descending value, ties by grid index.
bool peak_order(const GridPeak& a, const GridPeak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

}  // namespace

bool NoiseSubspace::split_degenerate() const {
    const Eigen::Index n = eigenvalues.size();
    const double above = eigenvalues[n - num_sources];     // K-th largest
    const double below = eigenvalues[n - num_sources - 1]; // (K+1)-th largest
    const double scale = std::max(std::abs(above), std::abs(eigenvalues[n - 1]));
    return std::abs(above - below) <= 1e-9 * scale;
}

NoiseSubspace noise_subspace(const CMatrix& covariance, int num_sources) {
    const Eigen::Index n = covariance.rows();
    if (covariance.cols() != n) throw std::invalid_argument("covariance must be square");
    if (num_sources < 1 || num_sources >= n) {
        throw std::invalid_argument("noise subspace needs 1 <= K < " + std::to_string(n));
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(covariance);
    if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
    NoiseSubspace out;
    out.eigenvalues = eig.eigenvalues();
    out.basis = eig.eigenvectors().leftCols(n - num_sources);
    out.num_sources = num_sources;
    return out;
}

double music_value(const NoiseSubspace& subspace, const CVector& steering) {
    const double denom = (subspace.basis.adjoint() * steering).squaredNorm();
    if (!(denom > 1.0 / kMusicCap)) return kMusicCap;
    return 1.0 / denom;
}

double music_value(const NoiseSubspace& subspace, const RadarPairGeometry& pair, double aod, double aoa) {
    return music_value(subspace, joint_steering(pair, aod, aoa));
}

std::vector<double> angle_grid(double spacing_rad) {
    if (!(spacing_rad > 0.0)) throw std::invalid_argument("angle grid spacing must be > 0");
    const int half = static_cast<int>(std::ceil(kHalfPi / spacing_rad)) - 1;
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i) g.push_back(i * spacing_rad);
    return g;
}

AngleSpectrum music_spectrum(const NoiseSubspace& subspace, const RadarPairGeometry& pair,
                             const AngleGridSpec& grid) {
    AngleSpectrum s;
    s.aod_grid = angle_grid(grid.spacing_rad);
    s.aoa_grid = s.aod_grid;
    const int na = static_cast<int>(s.aod_grid.size());
    const int m = pair.stx.num_elements();
    const int nr = pair.srx.num_elements();

    // G^H (v_tx (x) v_rx) = sum_m v_tx[m] * G_m^H v_rx with G_m the m-th row block.
    std::vector<CVector> rx_vectors;
    rx_vectors.reserve(static_cast<std::size_t>(na));
    for (double a : s.aoa_grid) rx_vectors.push_back(steering_vector(a, nr));
    std::vector<CMatrix> block_products(static_cast<std::size_t>(m));  // each (n-K) x na
    CMatrix rx_stack(nr, na);
    for (int j = 0; j < na; ++j) rx_stack.col(j) = rx_vectors[static_cast<std::size_t>(j)];
    for (int b = 0; b < m; ++b) {
        block_products[static_cast<std::size_t>(b)] = subspace.basis.middleRows(b * nr, nr).adjoint() * rx_stack;
    }

    s.values.resize(na, na);
    CMatrix acc(subspace.basis.cols(), na);
    for (int i = 0; i < na; ++i) {
        const CVector tx = steering_vector(s.aod_grid[static_cast<std::size_t>(i)], m);
        acc.setZero();
        for (int b = 0; b < m; ++b) acc += tx[b] * block_products[static_cast<std::size_t>(b)];
        for (int j = 0; j < na; ++j) {
            const double denom = acc.col(j).squaredNorm();
            s.values(i, j) = (denom > 1.0 / kMusicCap) ? 1.0 / denom : kMusicCap;
        }
    }
    return s;
}

PreEstimate pre_estimate(const CMatrix& covariance, int num_sources, const RadarPairGeometry& pair,
                         const AngleGridSpec& grid) {
    return pre_estimate(noise_subspace(covariance, num_sources), pair, grid);
}

PreEstimate pre_estimate(const NoiseSubspace& subspace, const RadarPairGeometry& pair,
                         const AngleGridSpec& grid) {
    const int k_count = subspace.num_sources;
    const AngleSpectrum s = music_spectrum(subspace, pair, grid);
    const int na = static_cast<int>(s.aod_grid.size());

    std::vector<GridPeak> maxima;
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < na; ++j) {
            if (is_strict_local_max(s.values, i, j)) maxima.push_back({i, j, s.values(i, j)});
        }
    }
    std::sort(maxima.begin(), maxima.end(), peak_order);

    const double limit = kHalfPi - grid.gradient_step_rad;
    const ScalarField log_spectrum = [&](const Vec2& p) {
        if (std::abs(p.x()) >= limit || std::abs(p.y()) >= limit) {
            return -std::numeric_limits<double>::infinity();
        }
        return std::log(music_value(subspace, pair, p.x(), p.y()));
    };
    AscentOptions opts;
    opts.initial_step = grid.refine_initial_step_rad;
    opts.min_step = grid.refine_min_step_rad;
    opts.max_iterations = grid.refine_max_iterations;
    opts.gradient_step = grid.gradient_step_rad;
    auto refine = [&](const GridPeak& c) {
        const Vec2 seed(s.aod_grid[static_cast<std::size_t>(c.i)], s.aoa_grid[static_cast<std::size_t>(c.j)]);
        const AscentResult r = gradient_ascent(log_spectrum, seed, opts);
        return std::pair<AnglePair, double>{AnglePair{r.position.x(), r.position.y()}, std::exp(r.value)};
    };

    PreEstimate out;
    out.low_quality = subspace.split_degenerate();
    std::vector<std::pair<AnglePair, double>> refined;
    std::vector<GridPeak> used;
    // Maxima that climb onto an already accepted peak are skipped.
    for (const auto& c : maxima) {
        if (static_cast<int>(refined.size()) >= k_count) break;
        auto r = refine(c);
        const bool duplicate = std::any_of(refined.begin(), refined.end(), [&](const auto& e) {
            return std::abs(e.first.aod - r.first.aod) < kDuplicateToleranceRad &&
                   std::abs(e.first.aoa - r.first.aoa) < kDuplicateToleranceRad;
        });
        if (duplicate) continue;
        refined.push_back(r);
        used.push_back(c);
    }
    if (static_cast<int>(refined.size()) < k_count) {
        out.low_quality = true;
        std::vector<GridPeak> all;
        all.reserve(static_cast<std::size_t>(na) * na);
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < na; ++j) all.push_back({i, j, s.values(i, j)});
        std::sort(all.begin(), all.end(), peak_order);
        for (const auto& c : all) {
            if (static_cast<int>(refined.size()) >= k_count) break;
            const bool taken = std::any_of(used.begin(), used.end(),
                                           [&](const GridPeak& p) { return p.i == c.i && p.j == c.j; });
            if (taken) continue;
            used.push_back(c);
            refined.push_back(refine(c));
        }
    }
    std::stable_sort(refined.begin(), refined.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [angles, value] : refined) {
        out.angle_pairs.push_back(angles);
        out.spectrum_values.push_back(value);
    }
    return out;
}

void write_spectrum_csv(std::ostream& os, const AngleSpectrum& spectrum) {
    os << "aod_rad,aoa_rad,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < spectrum.aod_grid.size(); ++i) {
        for (std::size_t j = 0; j < spectrum.aoa_grid.size(); ++j) {
            os << spectrum.aod_grid[i] << ',' << spectrum.aoa_grid[j] << ','
               << spectrum.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
        }
    }
}

}  // namespace mlas
