#include "mlas/geometry.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <sstream>

namespace mlas {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

std::string describe(const Vec2& p) {
    std::ostringstream os;
    os << "(" << p.x() << ", " << p.y() << ")";
    return os.str();
}

}  // namespace

ArraySpec::ArraySpec(Vec2 origin, Vec2 boresight, int num_elements)
    : origin_(std::move(origin)), boresight_(std::move(boresight)), num_elements_(num_elements) {
    if (!origin_.allFinite() || !boresight_.allFinite()) {
        throw GeometryError("array origin and boresight must be finite");
    }
    if (std::abs(boresight_.norm() - 1.0) > 1e-12) {
        throw GeometryError("array boresight must be a unit vector, got norm " +
                            std::to_string(boresight_.norm()));
    }
    if (num_elements_ < 1) {
        throw GeometryError("array needs at least one element");
    }
}

ArraySpec ArraySpec::facing(Vec2 origin, Vec2 direction, int num_elements) {
    const double n = direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw GeometryError("array boresight direction must be nonzero");
    }
    return ArraySpec(std::move(origin), direction / n, num_elements);
}

void Scene::validate() const {
    if (pairs.empty()) throw GeometryError("scene needs at least one radar pair");
    if (targets.empty()) throw GeometryError("scene needs at least one target");
    std::set<int> ids;
    for (const auto& pair : pairs) {
        if (!ids.insert(pair.id).second) {
            throw GeometryError("duplicate radar pair id " + std::to_string(pair.id));
        }
        for (const auto& t : targets) {
            if (!in_field_of_view(pair, t)) {
                throw GeometryError("target " + describe(t) + " is outside the field of view of pair " +
                                    std::to_string(pair.id));
            }
        }
    }
}

std::optional<double> try_signed_angle(const ArraySpec& array, const Vec2& point) {
    const Vec2 d = point - array.origin();
    const double along = array.boresight().dot(d);
    const double across = array.lateral().dot(d);
    if (d.squaredNorm() == 0.0 || !(along > 0.0)) return std::nullopt;
    const double angle = std::atan2(across, along);
    if (!(std::abs(angle) < kHalfPi)) return std::nullopt;
    return angle;
}

double signed_angle(const ArraySpec& array, const Vec2& point) {
    const Vec2 d = point - array.origin();
    if (d.squaredNorm() == 0.0) {
        throw GeometryError("point " + describe(point) + " coincides with an array origin");
    }
    auto angle = try_signed_angle(array, point);
    if (!angle) {
        throw GeometryError("point " + describe(point) + " is outside the array field of view");
    }
    return *angle;
}

bool in_field_of_view(const RadarPairGeometry& pair, const Vec2& point) {
    return try_signed_angle(pair.stx, point).has_value() && try_signed_angle(pair.srx, point).has_value();
}

std::optional<AnglePair> try_angles_for_target(const RadarPairGeometry& pair, const Vec2& target) {
    auto aod = try_signed_angle(pair.stx, target);
    if (!aod) return std::nullopt;
    auto aoa = try_signed_angle(pair.srx, target);
    if (!aoa) return std::nullopt;
    return AnglePair{*aod, *aoa};
}

AnglePair angles_for_target(const RadarPairGeometry& pair, const Vec2& target) {
    return {signed_angle(pair.stx, target), signed_angle(pair.srx, target)};
}

Vec2 ray_direction(const ArraySpec& array, double angle) {
    return std::cos(angle) * array.boresight() + std::sin(angle) * array.lateral();
}

CVector steering_vector(double angle, int n) {
    if (n < 1) throw std::invalid_argument("steering vector needs n >= 1");
    if (!(std::abs(angle) <= kHalfPi)) {
        throw std::invalid_argument("steering angle outside [-pi/2, pi/2]");
    }
    const double phase = std::numbers::pi * std::sin(angle);
    CVector v(n);
    for (int m = 0; m < n; ++m) {
        v[m] = std::polar(1.0, phase * m);
    }
    return v;
}

CVector joint_steering(const RadarPairGeometry& pair, double aod, double aoa) {
    const CVector tx = steering_vector(aod, pair.stx.num_elements());
    const CVector rx = steering_vector(aoa, pair.srx.num_elements());
    const Eigen::Index n_rx = rx.size();
    CVector a(tx.size() * n_rx);
    for (Eigen::Index m = 0; m < tx.size(); ++m) {
        a.segment(m * n_rx, n_rx) = tx[m] * rx;
    }
    return a;
}

CVector joint_steering(const RadarPairGeometry& pair, const AnglePair& angles) {
    return joint_steering(pair, angles.aod, angles.aoa);
}

CMatrix steering_matrix(const RadarPairGeometry& pair, std::span<const AnglePair> angle_pairs) {
    if (angle_pairs.empty()) throw std::invalid_argument("steering matrix needs K >= 1");
    CMatrix a(pair.dimension(), static_cast<Eigen::Index>(angle_pairs.size()));
    for (std::size_t k = 0; k < angle_pairs.size(); ++k) {
        a.col(static_cast<Eigen::Index>(k)) = joint_steering(pair, angle_pairs[k]);
    }
    return a;
}

RayIntersection ray_intersection(const Vec2& stx_origin, const Vec2& aod_direction,
                                 const Vec2& srx_origin, const Vec2& aoa_direction) {
    const double n1 = aod_direction.norm();
    const double n2 = aoa_direction.norm();
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw std::invalid_argument("ray directions must be nonzero");
    }
    const Vec2 d1 = aod_direction / n1;
    const Vec2 d2 = aoa_direction / n2;

    RayIntersection out;
    // cross(d1, d2) is the sine of the angle between the rays.
    const double cross = d1.x() * d2.y() - d1.y() * d2.x();
    out.crossing_sine = std::abs(cross);
    out.degenerate = out.crossing_sine < std::sin(kParallelToleranceRad);

    if (cross == 0.0) {
        // Parallel lines have no unique closest point.
        out.infinite = true;
        out.point = 0.5 * (stx_origin + srx_origin);
        return out;
    }
    // Solve stx_origin + t1*d1 = srx_origin + t2*d2.
    const Vec2 w = srx_origin - stx_origin;
    const double t1 = (w.x() * d2.y() - w.y() * d2.x()) / cross;
    const double t2 = (w.x() * d1.y() - w.y() * d1.x()) / cross;
    out.behind = t1 < 0.0 || t2 < 0.0;
    out.point = stx_origin + t1 * d1;
    if (!out.point.allFinite()) {
        out.infinite = true;
        out.point = 0.5 * (stx_origin + srx_origin);
    }
    return out;
}

RayIntersection locate_from_angles(const RadarPairGeometry& pair, const AnglePair& angles) {
    return ray_intersection(pair.stx.origin(), ray_direction(pair.stx, angles.aod), pair.srx.origin(),
                            ray_direction(pair.srx, angles.aoa));
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace mlas
