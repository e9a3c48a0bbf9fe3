#pragma once

// Oracle checks shared by the `validate` command and the acceptance binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "expobeam/control.hpp"
#include "expobeam/em.hpp"
#include "expobeam/oracles.hpp"
#include "expobeam/thermal.hpp"

namespace expobeam {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline std::string printf_string(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

template <class F>
CheckResult timed(const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r = body();
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace detail

/// tau in [495, 515] s and R_th in [6.9, 7.2] mm.
inline CheckResult check_thermal_scales(const TissueParams& p = TissueParams::skin()) {
    return detail::timed("thermal scales", [&] {
        const auto [tau, r_th] = characteristic_scales(p);
        CheckResult r;
        r.pass = tau >= 495.0 && tau <= 515.0 && r_th >= 6.9e-3 && r_th <= 7.2e-3;
        r.detail = detail::printf_string("tau = %.2f s (495..515), R_th = %.4f mm (6.9..7.2)", tau, r_th * 1e3);
        return r;
    });
}

/// Truncated convolution under constant PD vs the closed-form step response on
/// [10 s, 360 s] (1%), and the steady-state value 0.306 +- 0.01 C at 20 W/m^2.
inline CheckResult check_step_response(const TissueParams& p = TissueParams::skin(), double dt = 0.1) {
    return detail::timed("step response", [&] {
        const ThermalKernel k = kernel_coefficients(p, dt);
        const double pd = 20.0;
        const long n_max = std::lround(360.0 / dt);
        ThermalState st(k, 1);
        Eigen::VectorXd in = Eigen::VectorXd::Constant(1, pd);
        double worst = 0.0;
        for (long n = 1; n <= n_max; ++n) {
            const double t = st.step(in)(0);
            const double time = n * dt;
            if (time >= 10.0 - 1e-9) {
                const double ref = pd * step_response(k, time);
                worst = std::max(worst, std::abs(t / ref - 1.0));
            }
        }
        const double steady = pd * k.prefactor;
        CheckResult r;
        r.pass = worst <= 0.01 && std::abs(steady - 0.306) <= 0.01;
        r.detail = detail::printf_string("max rel err %.2e on [10, 360] s (<= 1e-2), steady state %.4f C (0.306 +- 0.01)",
                                         worst, steady);
        return r;
    });
}

/// Far-field formula vs Hertzian-segment summation, half-wave dipole, 20 directions at 100 lambda.
inline CheckResult check_dipole_field(int segments = 20000) {
    return detail::timed("dipole field", [&] {
        const EmConstants c = EmConstants::from_frequency(30e9);
        DipoleSpec spec = DipoleSpec::half_wave(c);
        spec.wire_radius = c.wavelength / 1000.0;
        const double d = 100.0 * c.wavelength;
        double mag = 0.0, phase = 0.0;
        for (int i = 0; i < 20; ++i) {
            const double theta = 0.1 + i * (std::numbers::pi - 0.2) / 19.0;
            const double phi = 0.7 * i;
            const Vec3 dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
            const CVec3 e = single_dipole_field(spec, Vec3::Zero(), 1.0, d * dir, c);
            const CVec3 o = oracle::segment_dipole_field(spec, Vec3::Zero(), 1.0, d * dir, c, segments);
            mag = std::max(mag, std::abs(e.norm() / o.norm() - 1.0));
            const cplx proj = (o.adjoint() * e)(0) / o.squaredNorm();
            phase = std::max(phase, std::abs(std::arg(proj)) * 180.0 / std::numbers::pi);
        }
        CheckResult r;
        r.pass = mag <= 5e-3 && phase <= 1.0;
        r.detail = detail::printf_string("%d segments: max magnitude err %.2e (<= 5e-3), max phase err %.3f deg (<= 1)",
                                         segments, mag, phase);
        return r;
    });
}

/// Self impedance 73.1 +- 0.5 ohm, lambda/2 mutual -12.5 - j29.9 (+-0.5 each),
/// both within 0.5 ohm of a 10x-node Gauss-Legendre oracle, and Z_pq = Z_qp.
inline CheckResult check_impedance() {
    return detail::timed("impedance", [&] {
        const EmConstants c = EmConstants::from_frequency(30e9);
        DipoleSpec spec = DipoleSpec::half_wave(c);
        spec.wire_radius = c.wavelength / 1000.0;
        const DipoleElement p{spec, Vec3::Zero()};
        const DipoleElement q{spec, Vec3(0.5 * c.wavelength, 0.0, 0.0)};
        const cplx z11 = mutual_impedance(p, p, c);
        const cplx z12 = mutual_impedance(p, q, c);
        const cplx z21 = mutual_impedance(q, p, c);

        const double hp = spec.half_length;
        const int evals_self =
            detail::impedance_integral(spec.wire_radius * spec.orientation.unitOrthogonal(), spec.orientation, hp, hp,
                                       c, {})
                .evaluations;
        const int evals_mut = detail::impedance_integral(p.position - q.position, spec.orientation, hp, hp, c, {})
                                  .evaluations;
        const cplx o11 = oracle::mutual_impedance_gl(spec, p.position, spec, p.position, c, 10 * evals_self);
        const cplx o12 = oracle::mutual_impedance_gl(spec, p.position, spec, q.position, c, 10 * evals_mut);
        const double sym = std::abs(z12 - z21) / std::abs(z12);

        CheckResult r;
        r.pass = std::abs(z11.real() - 73.1) <= 0.5 && std::abs(z12.real() + 12.5) <= 0.5 &&
                 std::abs(z12.imag() + 29.9) <= 0.5 && std::abs(z11.real() - o11.real()) <= 0.5 &&
                 std::abs(z11.imag() - o11.imag()) <= 0.5 && std::abs(z12.real() - o12.real()) <= 0.5 &&
                 std::abs(z12.imag() - o12.imag()) <= 0.5 && sym <= 1e-9;
        r.detail = detail::printf_string(
            "Z11 = %.4f%+.4fj (oracle %.4f%+.4fj, |dR from 73.1| = %.3f), Z12 = %.4f%+.4fj (oracle %.4f%+.4fj), "
            "|Z12-Z21|/|Z12| = %.1e",
            z11.real(), z11.imag(), o11.real(), o11.imag(), std::abs(z11.real() - 73.1), z12.real(), z12.imag(),
            o12.real(), o12.imag(), sym);
        return r;
    });
}

/// erf against the positive-term series on |x| <= 6.
inline CheckResult check_erf() {
    return detail::timed("erf", [&] {
        double worst = 0.0;
        for (int i = -600; i <= 600; ++i) {
            const double x = i * 0.01;
            worst = std::max(worst, std::abs(expobeam::erf(x) - oracle::erf_series(x)));
        }
        CheckResult r;
        r.pass = worst <= 1e-12;
        r.detail = detail::printf_string("max |erf - series| on [-6, 6] = %.2e (<= 1e-12)", worst);
        return r;
    });
}

/// Dominant eigenpair of random Hermitian matrices vs Rayleigh-quotient sampling.
inline CheckResult check_eigenpair(int samples = 10000) {
    return detail::timed("eigenpair", [&] {
        std::mt19937_64 rng(7);
        bool ok = true;
        double worst_residual = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            CMat b(4, 4);
            std::normal_distribution<double> normal;
            for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = cplx(normal(rng), normal(rng));
            const CMat a = 0.5 * (b + b.adjoint());
            const EigenPair ep = dominant_eigenpair(a);
            const double sampled = oracle::rayleigh_sample_max(a, samples, 100 + trial);
            const double residual = (a * ep.vector - ep.lambda * ep.vector).norm() / a.norm();
            worst_residual = std::max(worst_residual, residual);
            ok = ok && ep.lambda >= sampled && residual <= 1e-10;
        }
        CheckResult r;
        r.pass = ok;
        r.detail = detail::printf_string("lambda_max >= %d Rayleigh samples on 5 matrices, max residual %.1e", samples,
                                         worst_residual);
        return r;
    });
}

inline std::vector<CheckResult> run_validation_suite(const TissueParams& tissue = TissueParams::skin()) {
    return {check_thermal_scales(tissue), check_step_response(tissue), check_erf(), check_dipole_field(),
            check_impedance(), check_eigenpair()};
}

}  // namespace expobeam
