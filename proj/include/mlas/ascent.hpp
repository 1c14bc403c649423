#ifndef MLAS_ASCENT_HPP
#define MLAS_ASCENT_HPP

#include <functional>

#include "mlas/geometry.hpp"

namespace mlas {

/// Scalar field over a 2-D parameter; -infinity marks points outside the domain.
using ScalarField = std::function<double(const Vec2&)>;

struct ValueGradient {
    double value = 0.0;
    Vec2 gradient = Vec2::Zero();
};

/// Central differences with step h; falls back to one-sided differences along
/// an axis whose forward or backward probe is outside the domain.
ValueGradient finite_difference_gradient(const ScalarField& field, const Vec2& p, double h);

struct AscentOptions {
    double initial_step = 0.1;
    double min_step = 1e-4;
    int max_iterations = 200;
    double gradient_step = 1e-4;
};

struct AscentResult {
    Vec2 position = Vec2::Zero();
    double value = 0.0;
    int iterations = 0;
};

/**
 * Normalized-gradient ascent with backtracking: a trial step along the
 * gradient direction is accepted only if it increases the field, otherwise
 * the step is halved. Stops when the step drops below min_step or after
 * max_iterations trial steps. The returned value is never below field(start).
 */
AscentResult gradient_ascent(const ScalarField& field, const Vec2& start, const AscentOptions& options);

}  // namespace mlas

#endif  // MLAS_ASCENT_HPP
