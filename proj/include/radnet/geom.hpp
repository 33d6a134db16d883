#pragma once

#include <cmath>
#include <stdexcept>

namespace radnet {

// ============================================================================
// Vectors
// ============================================================================

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Sum of the two propagation legs transmitter->target->receiver.
inline double bistatic_range(const Vec3& target, const Vec3& tx, const Vec3& rx) {
    return (target - tx).norm() + (target - rx).norm();
}

// ============================================================================
// Angles and beams
// ============================================================================
//
// Azimuth is the angle in the XY plane (atan2(y, x)) and elevation the angle
// in the XZ plane (atan2(z, x)). A direction (az, el) therefore satisfies
// y/x = tan(az), z/x = tan(el); both angles live in (-pi, pi] and directions
// within +-pi/2 of the +X boresight round-trip exactly.

inline double wrap_angle(double a) {
    const double two_pi = 6.283185307179586476925286766559;
    a = std::remainder(a, two_pi);
    return a;  // (-pi, pi]
}

struct Spherical {
    double range_m = 0.0;
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;
};

/// Spherical coordinates of `p` about `origin`. Throws if p == origin.
inline Spherical cart_to_sph(const Vec3& p, const Vec3& origin = {}) {
    const Vec3 d = p - origin;
    const double r = d.norm();
    if (r == 0.0) throw std::invalid_argument("cart_to_sph: zero range, angles undefined");
    return {r, std::atan2(d.y, d.x), std::atan2(d.z, d.x)};
}

/// Unit direction for (azimuth, elevation); valid within +-pi/2 of boresight.
inline Vec3 angles_to_dir(double az, double el) {
    const double ca = std::cos(az), sa = std::sin(az);
    const double ce = std::cos(el), se = std::sin(el);
    const double n = std::sqrt(1.0 - sa * sa * se * se);
    return {ca * ce / n, sa * ce / n, ca * se / n};
}

inline Vec3 sph_to_cart(const Spherical& s, const Vec3& origin = {}) {
    return origin + s.range_m * angles_to_dir(s.azimuth_rad, s.elevation_rad);
}

/// Interval on an angular or linear axis, stored as center +- halfwidth.
struct AxisInterval {
    double center = 0.0;
    double halfwidth = 0.0;

    double lo() const { return center - halfwidth; }
    double hi() const { return center + halfwidth; }
    bool contains(double v) const { return v >= lo() && v <= hi(); }
};

/// Box constraint in (azimuth, elevation, range) about a beam origin.
struct Beam {
    AxisInterval azimuth;    // radians
    AxisInterval elevation;  // radians
    double range_min_m = 0.0;
    double range_max_m = 0.0;
};

/// Inclusive membership test of a position in a beam anchored at `origin`.
inline bool in_beam(const Vec3& p, const Beam& beam, const Vec3& origin = {}) {
    const Vec3 d = p - origin;
    const double r = d.norm();
    if (r < beam.range_min_m || r > beam.range_max_m) return false;
    if (r == 0.0) return true;  // range-feasible and direction unconstrained
    const double az = std::atan2(d.y, d.x);
    const double el = std::atan2(d.z, d.x);
    return beam.azimuth.contains(wrap_angle(az - beam.azimuth.center) + beam.azimuth.center) &&
           beam.elevation.contains(wrap_angle(el - beam.elevation.center) + beam.elevation.center);
}

namespace detail {

/// Intersection of [a, b] intervals on one angular axis. An empty overlap
/// collapses to a zero-width interval at a's boundary nearest b's center.
inline AxisInterval intersect_axis(const AxisInterval& a, AxisInterval b, bool angular) {
    if (angular) b.center = a.center + wrap_angle(b.center - a.center);
    const double lo = std::fmax(a.lo(), b.lo());
    const double hi = std::fmin(a.hi(), b.hi());
    if (lo > hi) {
        const double at = b.center > a.center ? a.hi() : a.lo();
        return {at, 0.0};
    }
    return {0.5 * (lo + hi), 0.5 * (hi - lo)};
}

}  // namespace detail

/// Axis-wise intersection of beam `a` (typically the physical beam) with `b`.
/// Empty overlap on an axis collapses to zero width at a's nearest boundary.
inline Beam intersect_beams(const Beam& a, const Beam& b) {
    Beam out;
    out.azimuth = detail::intersect_axis(a.azimuth, b.azimuth, true);
    out.elevation = detail::intersect_axis(a.elevation, b.elevation, true);
    const AxisInterval ar{0.5 * (a.range_min_m + a.range_max_m), 0.5 * (a.range_max_m - a.range_min_m)};
    const AxisInterval br{0.5 * (b.range_min_m + b.range_max_m), 0.5 * (b.range_max_m - b.range_min_m)};
    const AxisInterval rr = detail::intersect_axis(ar, br, false);
    out.range_min_m = rr.lo();
    out.range_max_m = rr.hi();
    return out;
}

}  // namespace radnet
