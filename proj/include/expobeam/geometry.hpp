#pragma once

// Cartesian geometry of the BS array, the UE array and the head sampling points.
// Everything is double-precision SI in the global frame; the UE local frame is
// axis-parallel to it, so no rotations are needed.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "expobeam/errors.hpp"

namespace expobeam {

using Vec3 = Eigen::Vector3d;

struct UePose {
    Vec3 center = Vec3::Zero();
    double tilt_angle = 0.0;   // alpha_t
    double polar_angle = 0.0;  // beta_t
    int n_elements = 4;
    double spacing = 0.005;
};

struct BsGeometry {
    double height = 5.0;
    int n_elements = 64;
    double spacing = 0.005;
};

struct HeadModel {
    Vec3 center = Vec3::Zero();
    double radius = 0.05;
    std::vector<Vec3> sampling_points;

    int n_sampling_points() const { return static_cast<int>(sampling_points.size()); }
};

/// Signed offset of element `index` (1-based) in a centered linear array of n elements.
inline double element_offset(int n, int index) {
    return 0.5 * (n + 1 - 2 * index);
}

/// Dipole orientation unit vector n_t.
inline Vec3 orientation_vector(double tilt, double polar) {
    return {std::sin(polar) * std::sin(tilt), std::sin(polar) * std::cos(tilt), std::cos(polar)};
}

inline Vec3 orientation_vector(const UePose& pose) {
    return orientation_vector(pose.tilt_angle, pose.polar_angle);
}

/// Unit vector along the UE array axis (horizontal, orthogonal to n_t).
inline Vec3 tx_array_axis(const UePose& pose) {
    return {std::cos(pose.tilt_angle), -std::sin(pose.tilt_angle), 0.0};
}

inline std::vector<Vec3> tx_element_positions(const UePose& pose) {
    if (pose.n_elements < 1 || !(pose.spacing > 0.0)) {
        throw GeometryError("UE array needs n_elements >= 1 and spacing > 0");
    }
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(pose.n_elements));
    const Vec3 axis = tx_array_axis(pose);
    for (int t = 1; t <= pose.n_elements; ++t) {
        out.push_back(pose.center + element_offset(pose.n_elements, t) * pose.spacing * axis);
    }
    return out;
}

inline std::vector<Vec3> rx_element_positions(const BsGeometry& bs) {
    if (bs.n_elements < 1 || !(bs.spacing > 0.0)) {
        throw GeometryError("BS array needs n_elements >= 1 and spacing > 0");
    }
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(bs.n_elements));
    for (int r = 1; r <= bs.n_elements; ++r) {
        out.emplace_back(element_offset(bs.n_elements, r) * bs.spacing, 0.0, bs.height);
    }
    return out;
}

inline double pairwise_distance(const Vec3& a, const Vec3& b) {
    return (a - b).norm();
}

/// Closed-form TX/RX element distance in terms of the BS-relative spherical
/// coordinates (d0, theta_r, phi_r) of the UE array center. Agrees with
/// pairwise_distance() on the element positions; kept as a cross-check.
inline double element_distance_expanded(double d0, double theta_r, double phi_r, double tilt,
                                        double delta_r, double d_r, double delta_t,
                                        double d_t) {
    const double dr = delta_r * d_r;
    const double dt = delta_t * d_t;
    const double sq = d0 * d0 + dr * dr + dt * dt - 2.0 * dr * d0 * std::sin(theta_r) * std::cos(phi_r) -
                      2.0 * dr * dt * std::cos(tilt) +
                      2.0 * d0 * dt * std::sin(theta_r) * std::cos(phi_r + tilt);
    return std::sqrt(sq);
}

/// M points equally spaced in azimuth on the horizontal great circle through the
/// head center; azimuth 0 is the +x axis.
inline HeadModel head_sampling_points(const Vec3& center, double radius, int m) {
    if (m < 1) {
        throw GeometryError("head model needs at least one sampling point");
    }
    if (!(radius > 0.0)) {
        throw GeometryError("head radius must be positive");
    }
    HeadModel head;
    head.center = center;
    head.radius = radius;
    head.sampling_points.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / m;
        head.sampling_points.push_back(center + radius * Vec3(std::cos(phi), std::sin(phi), 0.0));
    }
    return head;
}

}  // namespace expobeam
