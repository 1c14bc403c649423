#include "mlas/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>

namespace mlas {

namespace {

// Tr{Q^H R Q} for the thin orthonormal factor of `a`; nullopt if rank-deficient.
std::optional<double> try_projection_trace(const CMatrix& a, const CMatrix& r) {
    const Eigen::Index n = a.rows();
    const Eigen::Index k = a.cols();
    if (k == 0) return 0.0;
    Eigen::HouseholderQR<CMatrix> qr(a);
    // Singular values of A equal those of its triangular factor.
    const CMatrix upper = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<CMatrix>(upper).singularValues();
    if (!(sv[k - 1] >= kRankTolerance * sv[0])) return std::nullopt;
    const CMatrix q = qr.householderQ() * CMatrix::Identity(n, k);
    const std::complex<double> t = (q.adjoint() * r * q).trace();
    if (!(std::abs(t.imag()) <= 1e-8 * std::abs(t.real()) + 1e-12)) {
        throw std::runtime_error("projection trace is not real; covariance is not Hermitian");
    }
    return t.real();
}

double alignment(const CVector& u, const CVector& v) {
    return std::abs(u.dot(v)) / (u.norm() * v.norm());
}

}  // namespace

PerPairContext::PerPairContext(RadarPairGeometry geometry, CMatrix covariance, double noise_variance,
                               int num_subcarriers, PreEstimate pre_estimates)
    : geometry_(std::move(geometry)),
      covariance_(std::move(covariance)),
      noise_variance_(noise_variance),
      num_subcarriers_(num_subcarriers),
      pre_estimates_(std::move(pre_estimates)) {
    const int n = geometry_.dimension();
    if (covariance_.rows() != n || covariance_.cols() != n) {
        throw std::invalid_argument("covariance dimension must equal M_p * N_p");
    }
    if (!(noise_variance_ > 0.0) || !std::isfinite(noise_variance_)) {
        throw std::invalid_argument("noise variance must be finite and > 0");
    }
    if (num_subcarriers_ < 1) throw std::invalid_argument("num_subcarriers must be >= 1");
    if (pre_estimates_.angle_pairs.empty()) throw std::invalid_argument("pre-estimate must hold K >= 1 pairs");
    if (pre_estimates_.spectrum_values.size() != pre_estimates_.angle_pairs.size()) {
        throw std::invalid_argument("pre-estimate spectrum values must match its angle pairs");
    }
    subspace_ = mlas::noise_subspace(covariance_, num_targets());
    fixed_columns_.reserve(pre_estimates_.angle_pairs.size());
    for (const auto& ap : pre_estimates_.angle_pairs) fixed_columns_.push_back(joint_steering(geometry_, ap));
}

double projection_trace(const CMatrix& a, const CMatrix& r) {
    if (r.rows() != a.rows() || r.cols() != a.rows()) {
        throw std::invalid_argument("projection_trace: R must be n x n with n = rows(A)");
    }
    if (a.cols() < 1) throw std::invalid_argument("projection_trace: A needs at least one column");
    if (a.cols() > a.rows()) throw RankDeficientError("projection_trace: more columns than rows");
    auto t = try_projection_trace(a, r);
    if (!t) throw RankDeficientError("projection_trace: steering matrix is rank-deficient");
    return *t;
}

double estimate_noise_variance(const CMatrix& covariance, int num_sources) {
    const NoiseSubspace s = noise_subspace(covariance, num_sources);
    const Eigen::Index m = s.eigenvalues.size() - num_sources;
    const double mean = s.eigenvalues.head(m).mean();
    return std::max(mean, std::numeric_limits<double>::min());
}

double per_target_likelihood(const PerPairContext& ctx, int k, const Vec2& position) {
    const int k_count = ctx.num_targets();
    if (k < 0 || k >= k_count) throw std::out_of_range("target index out of range");
    const auto candidate = try_angles_for_target(ctx.geometry(), position);
    if (!candidate) return kExcluded;

    const auto& fixed = ctx.pre_estimates().angle_pairs;
    CVector cand_col = joint_steering(ctx.geometry(), *candidate);

    // Column order follows the pre-estimates with slot k holding the candidate.
    std::vector<const CVector*> cols;
    std::vector<bool> is_fixed;
    cols.reserve(static_cast<std::size_t>(k_count));
    for (int j = 0; j < k_count; ++j) {
        if (j == k) {
            cols.push_back(&cand_col);
            is_fixed.push_back(false);
            continue;
        }
        const auto& f = fixed[static_cast<std::size_t>(j)];
        if (std::abs(f.aod - candidate->aod) < kCollisionToleranceRad &&
            std::abs(f.aoa - candidate->aoa) < kCollisionToleranceRad) {
            continue;
        }
        cols.push_back(&ctx.fixed_column(j));
        is_fixed.push_back(true);
    }

    const Eigen::Index n = ctx.geometry().dimension();
    while (true) {
        CMatrix a(n, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = *cols[c];
        std::optional<double> t;
        if (a.cols() <= n) t = try_projection_trace(a, ctx.covariance());
        if (t) return ctx.weight() * *t;

        // Still singular: drop the fixed column most aligned with any other column.
        std::size_t worst = cols.size();
        double worst_alignment = -1.0;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (!is_fixed[c]) continue;
            for (std::size_t d = 0; d < cols.size(); ++d) {
                if (d == c) continue;
                const double al = alignment(*cols[c], *cols[d]);
                if (al > worst_alignment) {
                    worst_alignment = al;
                    worst = c;
                }
            }
        }
        if (worst == cols.size()) {
            // Only the candidate is left and it cannot be singular (|a|^2 = n).
            throw std::logic_error("per_target_likelihood: candidate column is singular");
        }
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(worst));
        is_fixed.erase(is_fixed.begin() + static_cast<std::ptrdiff_t>(worst));
    }
}

LocalValue local_map_evaluate(const PerPairContext& ctx, const Vec2& position) {
    LocalValue best;
    if (!in_field_of_view(ctx.geometry(), position)) return best;
    for (int k = 0; k < ctx.num_targets(); ++k) {
        const double v = per_target_likelihood(ctx, k, position);
        if (best.active_target < 0 || v > best.value) {
            best.value = v;
            best.active_target = k;
        }
    }
    return best;
}

double local_map_value(const PerPairContext& ctx, const Vec2& position) {
    return local_map_evaluate(ctx, position).value;
}

void GridSpec::validate() const {
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
    if (!(x_max >= x_min) || !(y_max >= y_min)) throw std::invalid_argument("grid bounds are inverted");
}

int GridSpec::nx() const { return static_cast<int>(std::floor((x_max - x_min) / spacing + 1e-9)) + 1; }
int GridSpec::ny() const { return static_cast<int>(std::floor((y_max - y_min) / spacing + 1e-9)) + 1; }

double combined_value(std::span<const PerPairContext> contexts, const Vec2& position) {
    double sum = 0.0;
    for (const auto& ctx : contexts) {
        const double v = local_map_value(ctx, position);
        if (v == kExcluded) return kExcluded;
        sum += v;
    }
    return sum;
}

LikelihoodMap combined_map(std::span<const PerPairContext> contexts, const GridSpec& grid) {
    grid.validate();
    if (contexts.empty()) throw std::invalid_argument("combined map needs at least one radar pair");
    const int k_count = contexts.front().num_targets();
    for (const auto& ctx : contexts) {
        if (ctx.num_targets() != k_count) throw std::invalid_argument("all radar pairs must share the same K");
    }
    LikelihoodMap map;
    map.grid = grid;
    map.values.resize(grid.nx(), grid.ny());
    for (int i = 0; i < grid.nx(); ++i) {
        for (int j = 0; j < grid.ny(); ++j) {
            map.values(i, j) = combined_value(contexts, grid.point(i, j));
        }
    }
    return map;
}

std::vector<int> active_targets(std::span<const PerPairContext> contexts, const Vec2& position) {
    std::vector<int> out;
    out.reserve(contexts.size());
    for (const auto& ctx : contexts) out.push_back(local_map_evaluate(ctx, position).active_target);
    return out;
}

ScalarField frozen_combined_field(std::span<const PerPairContext> contexts, std::vector<int> active) {
    if (active.size() != contexts.size()) throw std::invalid_argument("one active target per pair required");
    return [contexts, active = std::move(active)](const Vec2& p) {
        double sum = 0.0;
        for (std::size_t c = 0; c < contexts.size(); ++c) {
            if (active[c] < 0) return kExcluded;
            const double v = per_target_likelihood(contexts[c], active[c], p);
            if (v == kExcluded) return kExcluded;
            sum += v;
        }
        return sum;
    };
}

ValueGradient combined_value_and_gradient(std::span<const PerPairContext> contexts, const Vec2& position,
                                          double step) {
    const ScalarField field = frozen_combined_field(contexts, active_targets(contexts, position));
    return finite_difference_gradient(field, position, step);
}

void write_map_csv(std::ostream& os, const LikelihoodMap& map) {
    double peak = kExcluded;
    for (Eigen::Index i = 0; i < map.values.size(); ++i) peak = std::max(peak, map.values.data()[i]);
    os << "x,y,value,value_db\n" << std::setprecision(17);
    for (int i = 0; i < map.grid.nx(); ++i) {
        for (int j = 0; j < map.grid.ny(); ++j) {
            const double v = map.values(i, j);
            const double db = (v > 0.0 && peak > 0.0) ? 10.0 * std::log10(v / peak) : kExcluded;
            os << map.grid.x(i) << ',' << map.grid.y(j) << ',' << v << ',' << db << '\n';
        }
    }
}

}  // namespace mlas
