#pragma once

// Dipole radiation, mutual impedance and array-level field/power relations.
//
// Conventions: time dependence e^{+j omega t} is implicit, so propagation
// carries e^{-jkd}. Port currents are I_0; the sinusoidal current peak is
// I_m = I_0 / sin(kh).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "expobeam/errors.hpp"
#include "expobeam/geometry.hpp"
#include "expobeam/quadrature.hpp"

namespace expobeam {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kFreeSpaceImpedance = 376.730313668;
inline constexpr cplx kJ{0.0, 1.0};

/// Below this sin(psi) the direction is treated as lying on the dipole axis.
inline constexpr double kAxialEpsilon = 1e-6;

struct EmConstants {
    double frequency = 30e9;
    double wavelength = kSpeedOfLight / 30e9;
    double wavenumber = 2.0 * std::numbers::pi * 30e9 / kSpeedOfLight;
    double eta = kFreeSpaceImpedance;

    static EmConstants from_frequency(double f) {
        if (!(f > 0.0)) {
            throw DomainError("frequency must be positive");
        }
        EmConstants c;
        c.frequency = f;
        c.wavelength = kSpeedOfLight / f;
        c.wavenumber = 2.0 * std::numbers::pi / c.wavelength;
        return c;
    }
};

struct DipoleSpec {
    double half_length = 0.0025;
    double wire_radius = 1e-5;
    Vec3 orientation = Vec3::UnitZ();

    /// Half-wave dipole with wire radius lambda/1000.
    static DipoleSpec half_wave(const EmConstants& c, const Vec3& n = Vec3::UnitZ()) {
        return {0.25 * c.wavelength, 1e-3 * c.wavelength, n};
    }
};

struct DipoleElement {
    DipoleSpec spec;
    Vec3 position = Vec3::Zero();
};

/// g(psi) = (cos(kh cos psi) - cos kh) / sin psi, with the axial limit 0.
inline double normalized_gain(double psi, double k, double h) {
    const double s = std::sin(psi);
    if (std::abs(s) < kAxialEpsilon) {
        return 0.0;
    }
    return (std::cos(k * h * std::cos(psi)) - std::cos(k * h)) / s;
}

inline double normalized_gain_cos(double cos_psi, double k, double h) {
    const double s = std::sqrt(std::max(0.0, 1.0 - cos_psi * cos_psi));
    if (s < kAxialEpsilon) {
        return 0.0;
    }
    return (std::cos(k * h * cos_psi) - std::cos(k * h)) / s;
}

/// rho = [(n.r)r - n] / sin psi. Unit norm, orthogonal to r_hat.
inline Vec3 polarization_unit_vector(const Vec3& n, const Vec3& r_hat) {
    const double c = n.dot(r_hat);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    if (s < kAxialEpsilon) {
        throw DegeneratePolarizationError("polarization undefined along the dipole axis");
    }
    return (c * r_hat - n) / s;
}

/// Far-zone field of one sinusoidal-current dipole fed with port current I_0.
inline CVec3 single_dipole_field(const DipoleSpec& spec, const Vec3& feed, cplx port_current,
                                 const Vec3& observation, const EmConstants& c) {
    const Vec3 diff = observation - feed;
    const double d = diff.norm();
    if (d <= spec.wire_radius) {
        throw SingularityError("observation point coincides with the dipole feed");
    }
    const Vec3 r_hat = diff / d;
    const double cos_psi = spec.orientation.dot(r_hat);
    const double g = normalized_gain_cos(cos_psi, c.wavenumber, spec.half_length);
    if (g == 0.0) {
        return CVec3::Zero();
    }
    const cplx i_m = port_current / std::sin(c.wavenumber * spec.half_length);
    const cplx scale = kJ * c.eta * i_m / (2.0 * std::numbers::pi * d) * g *
                       std::exp(-kJ * (c.wavenumber * d));
    return polarization_unit_vector(spec.orientation, r_hat).cast<cplx>() * scale;
}

struct MutualImpedanceOptions {
    double abs_tol_ohm = 1e-3;
    int max_evaluations = 1 << 14;
};

namespace detail {

// One-sided induced-EMF integral: current distribution of `p` observed against
// the field of `q`. `delta` = r_p - r_q.
inline QuadratureResult<cplx> impedance_integral(const Vec3& delta, const Vec3& n, double hp,
                                                 double hq, const EmConstants& c,
                                                 const MutualImpedanceOptions& opt) {
    const double k = c.wavenumber;
    const double cos_khq = std::cos(k * hq);
    auto green = [k](double r) { return std::exp(-kJ * (k * r)) / r; };
    auto kernel = [&](double l) -> cplx {
        const double r0 = (delta + l * n).norm();
        const double r1 = (delta + (l - hq) * n).norm();
        const double r2 = (delta + (l + hq) * n).norm();
        cplx bracket = green(r1) + green(r2);
        if (cos_khq != 0.0) {
            bracket -= 2.0 * cos_khq * green(r0);
        }
        return bracket * std::sin(k * (hp - std::abs(l)));
    };
    const double prefactor_mag =
        c.eta / (4.0 * std::numbers::pi * std::abs(std::sin(k * hp) * std::sin(k * hq)));

    // Kinks and near-singular points of the kernel on panel edges.
    const double axial = delta.dot(n);
    std::vector<double> bps = {-hp, 0.0, hp};
    for (double x : {-axial, hq - axial, -hq - axial}) {
        if (x > -hp && x < hp && std::abs(x) > 1e-15 * hp) {
            bps.push_back(x);
        }
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end(),
                          [hp](double a, double b) { return std::abs(a - b) < 1e-14 * hp; }),
              bps.end());
    return integrate_adaptive<cplx>(kernel, bps, opt.abs_tol_ohm / prefactor_mag,
                                    opt.max_evaluations);
}

}  // namespace detail

/// Z_pq by the induced-EMF method. For p == q (same position) the transverse
/// separation is replaced by the wire radius. Distinct elements are integrated
/// in both directions and averaged, which makes Z_pq == Z_qp exactly.
inline cplx mutual_impedance(const DipoleElement& p, const DipoleElement& q, const EmConstants& c,
                             const MutualImpedanceOptions& opt = {}) {
    const Vec3 n = p.spec.orientation.normalized();
    if ((q.spec.orientation.normalized() - n).norm() > 1e-9) {
        throw GeometryError("mutual impedance requires parallel dipoles");
    }
    const double k = c.wavenumber;
    const double hp = p.spec.half_length;
    const double hq = q.spec.half_length;
    const cplx prefactor =
        kJ * c.eta / (4.0 * std::numbers::pi * std::sin(k * hp) * std::sin(k * hq));

    Vec3 delta = p.position - q.position;
    const double axial = delta.dot(n);
    const double transverse = (delta - axial * n).norm();
    const bool self = delta.norm() == 0.0;
    if (self) {
        Vec3 perp = n.unitOrthogonal();
        delta = p.spec.wire_radius * perp;
        return prefactor * detail::impedance_integral(delta, n, hp, hq, c, opt).value;
    }
    const double min_sep = p.spec.wire_radius + q.spec.wire_radius;
    if (transverse < min_sep && std::abs(axial) < hp + hq) {
        throw GeometryError("distinct dipoles overlap (separation below two wire radii)");
    }
    const cplx forward = detail::impedance_integral(delta, n, hp, hq, c, opt).value;
    const cplx backward = detail::impedance_integral(-delta, n, hq, hp, c, opt).value;
    return prefactor * 0.5 * (forward + backward);
}

struct ImpedanceMatrix {
    CMat z;
    CMat inverse;
    double condition = 1.0;

    int size() const { return static_cast<int>(z.rows()); }
};

inline constexpr double kMaxImpedanceCondition = 1e12;

inline ImpedanceMatrix make_impedance_matrix(CMat z) {
    Eigen::JacobiSVD<CMat> svd(z);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    ImpedanceMatrix out;
    out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(out.condition < kMaxImpedanceCondition)) {
        throw ConditioningError("impedance matrix is numerically singular (condition " +
                                std::to_string(out.condition) + ")");
    }
    out.inverse = z.partialPivLu().inverse();
    out.z = std::move(z);
    return out;
}

inline ImpedanceMatrix impedance_matrix(const std::vector<DipoleElement>& elems, const EmConstants& c,
                                        const MutualImpedanceOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(elems.size());
    if (n == 0) {
        throw GeometryError("impedance matrix of an empty array");
    }
    CMat z(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = p; q < n; ++q) {
            const cplx v = mutual_impedance(elems[static_cast<std::size_t>(p)],
                                            elems[static_cast<std::size_t>(q)], c, opt);
            z(p, q) = v;
            z(q, p) = v;
        }
    }
    return make_impedance_matrix(std::move(z));
}

/// Per-element gain/spreading/phase and polarization towards one observation point.
struct ArrayResponse {
    CVec a;
    Eigen::Matrix3Xd polarization;
};

/// Entry t is g(psi_t) e^{-jk d_t} / (d_t sin(kh)) with exact element distances.
/// The 1/sin(kh) turns port current into peak current and is 1 for half-wave dipoles.
inline ArrayResponse array_response(const std::vector<Vec3>& tx_positions, const DipoleSpec& spec,
                                    const Vec3& observation, const EmConstants& c) {
    const auto n = static_cast<Eigen::Index>(tx_positions.size());
    ArrayResponse out{CVec(n), Eigen::Matrix3Xd(3, n)};
    const double k = c.wavenumber;
    const double current_scale = 1.0 / std::sin(k * spec.half_length);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Vec3 diff = observation - tx_positions[static_cast<std::size_t>(t)];
        const double d = diff.norm();
        if (d <= spec.wire_radius) {
            throw SingularityError("observation point coincides with a transmit element");
        }
        const Vec3 r_hat = diff / d;
        const double cos_psi = spec.orientation.dot(r_hat);
        const double g = normalized_gain_cos(cos_psi, k, spec.half_length);
        out.a(t) = current_scale * g * std::exp(-kJ * (k * d)) / d;
        if (g == 0.0) {
            // Gain vanishes on the axis; any transverse unit vector keeps the column valid.
            out.polarization.col(t) = r_hat.unitOrthogonal();
        } else {
            out.polarization.col(t) = polarization_unit_vector(spec.orientation, r_hat);
        }
    }
    return out;
}

/// P(w) = (v0^2 / 2) Re(w^H Z^-1 w).
inline double transmit_power(const CVec& w, const ImpedanceMatrix& z, double v0) {
    return 0.5 * v0 * v0 * (w.adjoint() * z.inverse * w)(0).real();
}

/// v0 = sqrt(2 / lambda_max(Re Z^-1)) so that P(w) <= ||w||^2.
inline double power_normalization(const ImpedanceMatrix& z) {
    const Eigen::MatrixXd re = z.inverse.real();
    const Eigen::MatrixXd sym = 0.5 * (re + re.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 0.0)) {
        throw NonRadiatingError("Re(Z^-1) has no positive eigenvalue");
    }
    return std::sqrt(2.0 / lmax);
}

/// Total field P (j eta / 2 pi)(a .* Z^-1 v) for drive voltages v.
inline CVec3 array_field(const ArrayResponse& resp, const ImpedanceMatrix& z, const CVec& v,
                         const EmConstants& c) {
    const CVec currents = z.inverse * v;
    const CVec amp = (kJ * c.eta / (2.0 * std::numbers::pi)) * resp.a.cwiseProduct(currents);
    return resp.polarization.cast<cplx>() * amp;
}

/// Transmit-array state for one slot: element layout, orientation and the shared
/// coupling/normalization (pose-independent for a rigid parallel array).
struct TxArrayState {
    std::vector<Vec3> positions;
    DipoleSpec spec;
    std::shared_ptr<const ImpedanceMatrix> z;
    double v0 = 1.0;
    EmConstants consts;

    Vec3 center() const {
        Vec3 s = Vec3::Zero();
        for (const auto& p : positions) s += p;
        return s / static_cast<double>(positions.size());
    }
};

inline std::vector<DipoleElement> dipole_elements(const std::vector<Vec3>& positions,
                                                  const DipoleSpec& spec) {
    std::vector<DipoleElement> out;
    out.reserve(positions.size());
    for (const auto& p : positions) out.push_back({spec, p});
    return out;
}

}  // namespace expobeam
