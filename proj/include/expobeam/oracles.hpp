#pragma once

// Reference computations used to check the production code. Each one takes a
// different numerical route from the code it checks.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "expobeam/em.hpp"
#include "expobeam/errors.hpp"
#include "expobeam/thermal.hpp"

namespace expobeam::oracle {

/// Field of a sinusoidal-current dipole by summing `segments` Hertzian elements,
/// each with its exact (near + far) field. Peak current I_m = I_0 / sin(kh).
inline CVec3 segment_dipole_field(const DipoleSpec& spec, const Vec3& feed, cplx port_current,
                                  const Vec3& observation, const EmConstants& c, int segments = 20000) {
    if (segments < 1) throw DomainError("segment count must be positive");
    const double k = c.wavenumber;
    const double h = spec.half_length;
    const Vec3 n = spec.orientation.normalized();
    const cplx i_m = port_current / std::sin(k * h);
    const double dl = 2.0 * h / segments;
    CVec3 e = CVec3::Zero();
    for (int s = 0; s < segments; ++s) {
        const double l = -h + (s + 0.5) * dl;
        const cplx current = i_m * std::sin(k * (h - std::abs(l)));
        const Vec3 diff = observation - (feed + l * n);
        const double r = diff.norm();
        const Vec3 r_hat = diff / r;
        const double cos_t = n.dot(r_hat);
        const cplx ph = std::exp(-kJ * (k * r));
        const cplx kr = k * r;
        // E_theta theta_hat sin(theta) = (n.r)r - n, plus the radial term.
        const cplx trans = kJ * c.eta * k * current * dl / (4.0 * std::numbers::pi * r) *
                           (1.0 + 1.0 / (kJ * kr) - 1.0 / (kr * kr)) * ph;
        const cplx radial = c.eta * current * dl * cos_t / (2.0 * std::numbers::pi * r * r) *
                            (1.0 + 1.0 / (kJ * kr)) * ph;
        e += trans * (cos_t * r_hat - n).cast<cplx>() + radial * r_hat.cast<cplx>();
    }
    return e;
}

/// erf from the everywhere-positive series
/// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (1 3 5 ... (2n+1)).
inline double erf_series(double x) {
    if (x < 0.0) return -erf_series(-x);
    long double term = x;
    long double sum = term;
    const long double x2 = static_cast<long double>(x) * x;
    for (int n = 1; n < 2000; ++n) {
        term *= 2.0L * x2 / (2.0L * n + 1.0L);
        sum += term;
        if (term < 1e-22L * sum) break;
    }
    return static_cast<double>(2.0L / std::sqrt(std::numbers::pi_v<long double>) * std::exp(-x2) * sum);
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

/// Mutual impedance from the closed-form axial near field of dipole q,
/// E_z = -j eta I_m/(4 pi) [e^{-jkR1}/R1 + e^{-jkR2}/R2 - 2 cos(kh) e^{-jkR0}/R0],
/// reacted with the current of p: Z = -(1/(I_p(0) I_q(0))) int E_z I_p dl.
/// Composite Gauss-Legendre with about `nodes` nodes in equal panels.
inline cplx mutual_impedance_gl(const DipoleSpec& p_spec, const Vec3& p_pos, const DipoleSpec& q_spec,
                                const Vec3& q_pos, const EmConstants& c, int nodes) {
    const double k = c.wavenumber;
    const double hp = p_spec.half_length;
    const double hq = q_spec.half_length;
    const Vec3 n = p_spec.orientation.normalized();
    Vec3 delta = p_pos - q_pos;
    if (delta.norm() == 0.0) delta = p_spec.wire_radius * n.unitOrthogonal();
    const double axial = delta.dot(n);
    const double rho = (delta - axial * n).norm();

    constexpr int kOrder = 20;
    std::vector<double> gx, gw;
    gauss_legendre(kOrder, gx, gw);
    int panels = std::max(2, nodes / kOrder);
    panels += panels % 2;  // panel edge at the feed kink
    const double width = 2.0 * hp / panels;

    // Unit peak current on both dipoles; port currents are sin(kh).
    auto ez = [&](double z) {
        auto g = [&](double dz) {
            const double r = std::hypot(rho, dz);
            return std::exp(-kJ * (k * r)) / r;
        };
        return -kJ * c.eta / (4.0 * std::numbers::pi) * (g(z - hq) + g(z + hq) - 2.0 * std::cos(k * hq) * g(z));
    };
    cplx acc = 0.0;
    for (int pnl = 0; pnl < panels; ++pnl) {
        const double a = -hp + pnl * width;
        for (int i = 0; i < kOrder; ++i) {
            const double l = a + 0.5 * width * (gx[static_cast<std::size_t>(i)] + 1.0);
            acc += 0.5 * width * gw[static_cast<std::size_t>(i)] * ez(axial + l) * std::sin(k * (hp - std::abs(l)));
        }
    }
    return -acc / (std::sin(k * hp) * std::sin(k * hq));
}

/// Untruncated convolution T[n] = prefactor sum_{i<=n} I[i] xi_{n-i}, with every xi
/// evaluated directly from erf.
inline std::vector<double> dense_convolution(const TissueParams& p, double dt, const std::vector<double>& pd) {
    const auto [tau, r_th] = characteristic_scales(p);
    const double prefactor = p.transmission_coeff * r_th / p.thermal_conductivity;
    const std::size_t n = pd.size();
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) {
        xi[i] = std::erf(std::sqrt((i + 1.0) * dt / tau)) - std::erf(std::sqrt(i * dt / tau));
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i <= t; ++i) acc += pd[i] * xi[t - i];
        out[t] = prefactor * acc;
    }
    return out;
}

inline CVec random_unit_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    CVec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = cplx(normal(rng), normal(rng));
    return x.normalized();
}

/// max over `samples` random unit x of x^H A x.
inline double rayleigh_sample_max(const CMat& a, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const CVec x = random_unit_vector(a.rows(), rng);
        best = std::max(best, (x.adjoint() * a * x)(0).real());
    }
    return best;
}

}  // namespace expobeam::oracle
