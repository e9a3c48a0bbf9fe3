#pragma once

// Surface-heating bioheat model: perfusion time/length scales, the closed-form
// impulse and step responses, and discrete temperature dynamics driven by
// per-slot incident power density.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expobeam/errors.hpp"

namespace expobeam {

/// Converts blood perfusion from ml/(min kg) to m^3/(s kg).
inline constexpr double perfusion_from_ml_per_min_kg(double v) { return v * 1e-6 / 60.0; }

struct TissueParams {
    double thermal_conductivity = 0.37;                            // W/(m C)
    double density = 1109.0;                                       // kg/m^3
    double specific_heat = 3390.0;                                 // J/(kg C)
    double blood_perfusion = perfusion_from_ml_per_min_kg(106.0);  // m^3/(s kg)
    double transmission_coeff = 0.8;

    /// Skin values with T_tr = 0.8.
    static TissueParams skin() { return {}; }

    void validate() const {
        if (!(thermal_conductivity > 0.0 && density > 0.0 && specific_heat > 0.0 && blood_perfusion > 0.0)) {
            throw DomainError("tissue parameters must be positive");
        }
        if (!(transmission_coeff > 0.0 && transmission_coeff <= 1.0)) {
            throw DomainError("transmission coefficient must lie in (0, 1]");
        }
    }
};

inline double erf(double x) { return std::erf(x); }

struct ThermalScales {
    double tau = 0.0;   // s
    double r_th = 0.0;  // m
};

inline ThermalScales characteristic_scales(const TissueParams& p) {
    return {1.0 / (p.blood_perfusion * p.density),
            std::sqrt(p.thermal_conductivity / (p.density * p.density * p.specific_heat * p.blood_perfusion))};
}

/// Steady-state surface temperature rise per unit incident PD, C/(W/m^2).
inline double steady_state_gain(const TissueParams& p) {
    return p.transmission_coeff * characteristic_scales(p).r_th / p.thermal_conductivity;
}

struct ThermalKernel {
    double tau = 0.0;
    double r_th = 0.0;
    double prefactor = 0.0;  // T_tr R_th / kappa
    double dt = 0.0;
    std::vector<double> xi;
    int truncation_index = 0;
    double tail = 0.0;  // kernel mass beyond the window

    /// Temperature gained in the current slot per W/m^2.
    double slot_gain() const { return prefactor * xi.front(); }
    double decay_per_slot() const { return std::exp(-dt / tau); }
};

inline double impulse_response(const ThermalKernel& k, double t) {
    if (!(t > 0.0)) {
        throw DomainError("impulse response is defined for t > 0");
    }
    return k.prefactor * std::exp(-t / k.tau) / std::sqrt(std::numbers::pi * k.tau * t);
}

inline double step_response(const ThermalKernel& k, double t) {
    if (t < 0.0) {
        throw DomainError("step response is defined for t >= 0");
    }
    return k.prefactor * expobeam::erf(std::sqrt(t / k.tau));
}

/// xi_i = erf(sqrt((i+1) dt / tau)) - erf(sqrt(i dt / tau)), truncated once the
/// omitted tail erfc(sqrt(n dt / tau)) drops below eps_xi.
inline ThermalKernel kernel_coefficients(const TissueParams& p, double dt, double eps_xi = 1e-4) {
    if (!(dt > 0.0)) {
        throw DomainError("slot duration must be positive");
    }
    if (!(eps_xi > 0.0 && eps_xi < 1.0)) {
        throw DomainError("kernel tail tolerance must lie in (0, 1)");
    }
    p.validate();
    const auto [tau, r_th] = characteristic_scales(p);
    ThermalKernel k;
    k.tau = tau;
    k.r_th = r_th;
    k.prefactor = p.transmission_coeff * r_th / p.thermal_conductivity;
    k.dt = dt;

    auto tail_after = [&](long n) { return std::erfc(std::sqrt(static_cast<double>(n) * dt / tau)); };
    long hi = 1;
    while (tail_after(hi) >= eps_xi) hi *= 2;
    long lo = hi / 2;  // tail_after(lo) >= eps (or lo == 0)
    while (hi - lo > 1) {
        const long mid = (lo + hi) / 2;
        (tail_after(mid) < eps_xi ? hi : lo) = mid;
    }
    k.truncation_index = static_cast<int>(hi);
    k.xi.resize(static_cast<std::size_t>(hi));
    double prev = 0.0;
    for (long i = 0; i < hi; ++i) {
        const double cur = expobeam::erf(std::sqrt(static_cast<double>(i + 1) * dt / tau));
        k.xi[static_cast<std::size_t>(i)] = cur - prev;
        prev = cur;
    }
    k.tail = tail_after(hi);
    return k;
}

/// Per-point temperature rise by truncated discrete convolution with the kernel.
/// PD histories live in one ring buffer per sampling point.
class ThermalState {
public:
    ThermalState(const ThermalKernel& kernel, int n_points)
        : kernel_(kernel),
          window_(kernel.truncation_index),
          history_(static_cast<std::size_t>(n_points), std::vector<double>(static_cast<std::size_t>(kernel.truncation_index), 0.0)),
          temps_(Eigen::VectorXd::Zero(n_points)) {}

    int n_points() const { return static_cast<int>(history_.size()); }
    long slots() const { return count_; }
    const Eigen::VectorXd& temperatures() const { return temps_; }

    /// Push one slot of PD (W/m^2, one entry per point) and return the new temperatures.
    const Eigen::VectorXd& step(const Eigen::VectorXd& pd) {
        if (pd.size() != n_points()) {
            throw DomainError("PD vector size does not match the number of sampling points");
        }
        if ((pd.array() < 0.0).any()) {
            throw DomainError("incident power density must be non-negative");
        }
        head_ = (count_ == 0) ? 0 : (head_ + 1) % window_;
        ++count_;
        const long used = std::min<long>(count_, window_);
        const double* xi = kernel_.xi.data();
        for (int m = 0; m < n_points(); ++m) {
            auto& h = history_[static_cast<std::size_t>(m)];
            h[static_cast<std::size_t>(head_)] = pd(m);
            // Newest sample sits at head_, older ones walk backwards around the ring.
            double acc = 0.0;
            const long first = std::min<long>(used, head_ + 1);
            for (long j = 0; j < first; ++j) {
                acc += xi[j] * h[static_cast<std::size_t>(head_ - j)];
            }
            for (long j = first; j < used; ++j) {
                acc += xi[j] * h[static_cast<std::size_t>(head_ - j + window_)];
            }
            temps_(m) = kernel_.prefactor * acc;
        }
        return temps_;
    }

private:
    ThermalKernel kernel_;
    long window_;
    std::vector<std::vector<double>> history_;
    Eigen::VectorXd temps_;
    long head_ = 0;
    long count_ = 0;
};

/// First-order recursion T[n] = e^{-dt/tau} T[n-1] + prefactor xi_0 I[n].
/// An approximation of the convolution; it overstates accumulation when dt << tau.
class MarkovThermalState {
public:
    MarkovThermalState(const ThermalKernel& kernel, int n_points)
        : decay_(kernel.decay_per_slot()), gain_(kernel.slot_gain()), temps_(Eigen::VectorXd::Zero(n_points)) {}

    const Eigen::VectorXd& temperatures() const { return temps_; }

    const Eigen::VectorXd& step(const Eigen::VectorXd& pd) {
        if (pd.size() != temps_.size()) {
            throw DomainError("PD vector size does not match the number of sampling points");
        }
        if ((pd.array() < 0.0).any()) {
            throw DomainError("incident power density must be non-negative");
        }
        temps_ = decay_ * temps_ + gain_ * pd;
        return temps_;
    }

private:
    double decay_;
    double gain_;
    Eigen::VectorXd temps_;
};

/// Longest run the surface-response approximation is trusted for (a = 2 cm units).
inline constexpr double kThermalModelValiditySeconds = 360.0;

inline std::string thermal_validity_warning(double run_seconds) {
    if (run_seconds > kThermalModelValiditySeconds) {
        return "run length " + std::to_string(run_seconds) +
               " s exceeds the 360 s validity window of the surface thermal response";
    }
    return {};
}

}  // namespace expobeam
