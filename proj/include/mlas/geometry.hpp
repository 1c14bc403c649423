#ifndef MLAS_GEOMETRY_HPP
#define MLAS_GEOMETRY_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlas {

using Vec2 = Eigen::Vector2d;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Raised for physically invalid scene configurations (targets behind an
/// array, coincident positions, malformed arrays).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Uniform linear array with half-wavelength element spacing.
 *
 * The array axis is perpendicular to the boresight; angles are measured from
 * the boresight and are positive toward the boresight rotated +90 degrees
 * counterclockwise.
 */
class ArraySpec {
public:
    /// Throws GeometryError unless |boresight| = 1 (1e-12) and num_elements >= 1.
    ArraySpec(Vec2 origin, Vec2 boresight, int num_elements);

    /// Same as the constructor but normalizes `direction` first.
    static ArraySpec facing(Vec2 origin, Vec2 direction, int num_elements);

    const Vec2& origin() const { return origin_; }
    const Vec2& boresight() const { return boresight_; }
    /// Boresight rotated +90 degrees counterclockwise (positive-angle side).
    Vec2 lateral() const { return {-boresight_.y(), boresight_.x()}; }
    int num_elements() const { return num_elements_; }

private:
    Vec2 origin_;
    Vec2 boresight_;
    int num_elements_;
};

struct RadarPairGeometry {
    int id = 0;
    ArraySpec stx;
    ArraySpec srx;

    /// M_p * N_p, the length of a joint steering vector.
    int dimension() const { return stx.num_elements() * srx.num_elements(); }
};

struct AnglePair {
    double aod = 0.0;
    double aoa = 0.0;
};

struct Scene {
    std::vector<RadarPairGeometry> pairs;
    std::vector<Vec2> targets;

    int num_pairs() const { return static_cast<int>(pairs.size()); }
    int num_targets() const { return static_cast<int>(targets.size()); }

    /// Checks K >= 1, P >= 1, unique pair ids and that every target is in
    /// view of every array.
    void validate() const;
};

/// Signed angle of `point` seen from `array`; nullopt when the point is at the
/// origin or not strictly in front of the array.
std::optional<double> try_signed_angle(const ArraySpec& array, const Vec2& point);

/// Throwing variant of try_signed_angle.
double signed_angle(const ArraySpec& array, const Vec2& point);

bool in_field_of_view(const RadarPairGeometry& pair, const Vec2& point);

std::optional<AnglePair> try_angles_for_target(const RadarPairGeometry& pair, const Vec2& target);

/// AoD at the STx and AoA at the SRx of `target`. Throws GeometryError when the
/// target coincides with an array origin or lies outside |angle| < pi/2.
AnglePair angles_for_target(const RadarPairGeometry& pair, const Vec2& target);

/// Unit direction of the ray leaving `array` at `angle` from boresight.
Vec2 ray_direction(const ArraySpec& array, double angle);

/// Element m equals exp(j*pi*m*sin(angle)). Requires |angle| <= pi/2 and n >= 1.
CVector steering_vector(double angle, int n);

/// Kronecker product v(aod) (x) v(aoa), length M_p * N_p.
CVector joint_steering(const RadarPairGeometry& pair, double aod, double aoa);
CVector joint_steering(const RadarPairGeometry& pair, const AnglePair& angles);

/// Columns are joint steering vectors of `angle_pairs`, in order.
CMatrix steering_matrix(const RadarPairGeometry& pair, std::span<const AnglePair> angle_pairs);

struct RayIntersection {
    Vec2 point = Vec2::Zero();
    /// Rays within kParallelToleranceRad of parallel.
    bool degenerate = false;
    /// Crossing lies behind at least one origin.
    bool behind = false;
    /// No finite crossing exists (exactly parallel lines).
    bool infinite = false;
    /// |sin| of the angle between the two directions.
    double crossing_sine = 0.0;
};

inline constexpr double kParallelToleranceRad = 0.5 * 3.14159265358979323846 / 180.0;

/**
 * Least-squares closest point of the lines through the two rays.
 *
 * For non-parallel rays this is the exact crossing. Rays within 0.5 degrees of
 * parallel are flagged degenerate; the crossing point is still reported when
 * it is finite.
 */
RayIntersection ray_intersection(const Vec2& stx_origin, const Vec2& aod_direction,
                                 const Vec2& srx_origin, const Vec2& aoa_direction);

/// Intersects the STx ray at `angles.aod` with the SRx ray at `angles.aoa`.
RayIntersection locate_from_angles(const RadarPairGeometry& pair, const AnglePair& angles);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace mlas

#endif  // MLAS_GEOMETRY_HPP
