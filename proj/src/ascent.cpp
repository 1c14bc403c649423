#include "mlas/ascent.hpp"

#include <cmath>

namespace mlas {

ValueGradient finite_difference_gradient(const ScalarField& field, const Vec2& p, double h) {
    ValueGradient out;
    out.value = field(p);
    for (int axis = 0; axis < 2; ++axis) {
        Vec2 fwd = p;
        Vec2 bwd = p;
        fwd[axis] += h;
        bwd[axis] -= h;
        const double f_fwd = field(fwd);
        const double f_bwd = field(bwd);
        const bool ok_fwd = std::isfinite(f_fwd);
        const bool ok_bwd = std::isfinite(f_bwd);
        if (ok_fwd && ok_bwd) {
            out.gradient[axis] = (f_fwd - f_bwd) / (2.0 * h);
        } else if (ok_fwd && std::isfinite(out.value)) {
            out.gradient[axis] = (f_fwd - out.value) / h;
        } else if (ok_bwd && std::isfinite(out.value)) {
            out.gradient[axis] = (out.value - f_bwd) / h;
        } else {
            out.gradient[axis] = 0.0;
        }
    }
    return out;
}

AscentResult gradient_ascent(const ScalarField& field, const Vec2& start, const AscentOptions& options) {
    AscentResult res;
    res.position = start;
    ValueGradient vg = finite_difference_gradient(field, start, options.gradient_step);
    res.value = vg.value;
    if (!std::isfinite(res.value)) return res;

    double step = options.initial_step;
    while (res.iterations < options.max_iterations && step >= options.min_step) {
        ++res.iterations;
        const double norm = vg.gradient.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        const Vec2 trial = res.position + step * (vg.gradient / norm);
        const double f = field(trial);
        if (std::isfinite(f) && f > res.value) {
            res.position = trial;
            vg = finite_difference_gradient(field, trial, options.gradient_step);
            res.value = vg.value;
        } else {
            step *= 0.5;
        }
    }
    return res;
}

}  // namespace mlas
