#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace mlas::oracle {

double explicit_projection_trace(const CMatrix& a, const CMatrix& r) {
    const CMatrix gram_inv = (a.adjoint() * a).inverse();
    return (a * gram_inv * a.adjoint() * r).trace().real();
}

double full_likelihood(const PerPairContext& ctx, std::span<const AnglePair> angles) {
    const CMatrix a = steering_matrix(ctx.geometry(), angles);
    return ctx.num_subcarriers() / (2.0 * ctx.noise_variance()) * explicit_projection_trace(a, ctx.covariance());
}

JointMlResult joint_ml_two_targets(std::span<const PerPairContext> contexts, const GridSpec& grid) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const int cells = nx * ny;

    struct PairData {
        std::vector<CVector> a;
        std::vector<CVector> ra;
        std::vector<double> ara;
        std::vector<bool> visible;
        double weight;
    };
    std::vector<PairData> data(contexts.size());
    for (std::size_t p = 0; p < contexts.size(); ++p) {
        const auto& ctx = contexts[p];
        auto& d = data[p];
        d.weight = ctx.num_subcarriers() / (2.0 * ctx.noise_variance());
        d.a.resize(cells);
        d.ra.resize(cells);
        d.ara.resize(cells);
        d.visible.resize(cells);
        for (int c = 0; c < cells; ++c) {
            const auto angles = try_angles_for_target(ctx.geometry(), grid.point(c / ny, c % ny));
            d.visible[c] = angles.has_value();
            if (!angles) continue;
            d.a[c] = joint_steering(ctx.geometry(), *angles);
            d.ra[c] = ctx.covariance() * d.a[c];
            d.ara[c] = d.a[c].dot(d.ra[c]).real();
        }
    }

    JointMlResult best{Vec2::Zero(), Vec2::Zero(), -std::numeric_limits<double>::infinity()};
    for (int c1 = 0; c1 < cells; ++c1) {
        for (int c2 = c1 + 1; c2 < cells; ++c2) {
            double total = 0.0;
            bool ok = true;
            for (const auto& d : data) {
                if (!d.visible[c1] || !d.visible[c2]) {
                    ok = false;
                    break;
                }
                // Gram = [n, g; conj(g), n] and B = A^H R A; trace(Gram^-1 B) in closed form.
                const double n1 = d.a[c1].squaredNorm();
                const double n2 = d.a[c2].squaredNorm();
                const std::complex<double> g = d.a[c1].dot(d.a[c2]);
                const std::complex<double> b12 = d.a[c1].dot(d.ra[c2]);
                const double det = n1 * n2 - std::norm(g);
                if (!(det > 1e-9 * n1 * n2)) {
                    ok = false;
                    break;
                }
                const double tr = (n2 * d.ara[c1] + n1 * d.ara[c2] - 2.0 * (std::conj(g) * b12).real()) / det;
                total += d.weight * tr;
            }
            if (ok && total > best.value) {
                best = {grid.point(c1 / ny, c1 % ny), grid.point(c2 / ny, c2 % ny), total};
            }
        }
    }
    return best;
}

double binomial_difference_halfwidth(double p1, double p2, long n) {
    const double var = (p1 * (1.0 - p1) + p2 * (1.0 - p2)) / static_cast<double>(n);
    return 1.96 * std::sqrt(var);
}

}  // namespace mlas::oracle
