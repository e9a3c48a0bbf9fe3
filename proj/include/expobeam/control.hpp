#pragma once

// Online exposure-aware beamforming: virtual temperature queues, the
// drift-plus-penalty decision matrix and its closed-form maximizer, plus the
// instantaneous-PD baselines used for comparison.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "expobeam/channel.hpp"
#include "expobeam/em.hpp"
#include "expobeam/errors.hpp"
#include "expobeam/exposure.hpp"
#include "expobeam/thermal.hpp"

namespace expobeam {

struct ControlConfig {
    double v_param = 5e-4;
    double temp_threshold = 0.2;  // C
    double p_max = 5.0;           // W
    double pd_limit = 20.0;       // W/m^2, baselines only
    double eig_tolerance = 1e-10;

    void validate() const {
        if (!(v_param >= 0.0)) throw DomainError("V must be non-negative");
        if (!(temp_threshold > 0.0 && p_max > 0.0 && pd_limit > 0.0)) {
            throw DomainError("thresholds must be positive");
        }
    }
};

struct VirtualQueues {
    Eigen::VectorXd q;

    explicit VirtualQueues(int m = 0) : q(Eigen::VectorXd::Zero(m)) {}
    int size() const { return static_cast<int>(q.size()); }
};

/// Q_m <- max(0, Q_m + T_m - T_th)
inline VirtualQueues queue_update(const VirtualQueues& q, const Eigen::VectorXd& temps, double t_th) {
    if (temps.size() != q.q.size()) {
        throw DomainError("temperature vector size does not match the queue count");
    }
    VirtualQueues out(q.size());
    out.q = (q.q + temps.array().matrix() - Eigen::VectorXd::Constant(q.size(), t_th)).cwiseMax(0.0);
    return out;
}

/// Penalty weight on sum_m Q_m ||Phi_m w||^2: the current slot's temperature
/// gain per W/m^2 divided by 2 eta.
inline double penalty_coefficient(const ThermalKernel& kernel, double eta) {
    return kernel.slot_gain() / (2.0 * eta);
}

/// A = V H^H H - (c_pen / 2 eta) sum_m Q_m Phi_m^H Phi_m, with c_pen = xi_0 T_tr R_th / kappa.
inline CMat decision_matrix(const CMat& h, const ExposureManifold& manifold, const VirtualQueues& q,
                            const ThermalKernel& kernel, const ControlConfig& cfg, double eta) {
    if (manifold.size() != q.size()) {
        throw DomainError("queue count does not match the number of sampling points");
    }
    CMat a = cfg.v_param * (h.adjoint() * h);
    if ((q.q.array() > 0.0).any()) {
        a -= penalty_coefficient(kernel, eta) * manifold.weighted_gram(q.q);
    }
    return 0.5 * (a + a.adjoint());
}

struct EigenPair {
    double lambda = 0.0;
    CVec vector;
};

/// Fixes the phase so the first non-negligible component is real and positive.
inline void canonical_phase(CVec& v) {
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-8 * scale) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = std::abs(v(i));
            return;
        }
    }
}

inline EigenPair dominant_eigenpair(const CMat& a, double tol = 1e-10) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DomainError("eigenpair requires a non-empty square matrix");
    }
    const double norm = a.norm();
    if ((a - a.adjoint()).norm() > std::max(tol, 1e-12) * std::max(norm, 1e-300)) {
        throw DomainError("dominant_eigenpair requires a Hermitian matrix");
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(a);
    if (es.info() != Eigen::Success) {
        throw DomainError("Hermitian eigensolver did not converge");
    }
    const Eigen::Index top = a.rows() - 1;  // eigenvalues ascend
    EigenPair out{es.eigenvalues()(top), es.eigenvectors().col(top)};
    out.vector.normalize();
    canonical_phase(out.vector);
    return out;
}

struct BeamDecision {
    CVec w;
    double lambda_max = std::numeric_limits<double>::quiet_NaN();
    bool silent = false;
};

/// w* = sqrt(P_max) v_max if lambda_max(A) > 0, else silent (w = 0).
inline BeamDecision lyapunov_beamformer(const CMat& a, double p_max) {
    const EigenPair ep = dominant_eigenpair(a);
    BeamDecision d;
    d.lambda_max = ep.lambda;
    if (ep.lambda > 0.0) {
        d.w = std::sqrt(p_max) * ep.vector;
    } else {
        d.w = CVec::Zero(a.rows());
        d.silent = true;
    }
    return d;
}

/// Unit direction maximizing ||Hu||.
inline CVec unconstrained_direction(const CMat& h) {
    return dominant_eigenpair(h.adjoint() * h).vector;
}

inline CVec unconstrained_beamformer(const CMat& h, double p_max) {
    return std::sqrt(p_max) * unconstrained_direction(h);
}

/// Largest power along `unit_dir` that keeps every sampling point at or below the
/// PD limit, capped at p_max. PD is linear in power, so this is closed form.
inline double backoff_power(const CVec& unit_dir, const ExposureManifold& manifold, double eta,
                            const ControlConfig& cfg) {
    const Eigen::VectorXd pd_unit = incident_pd(manifold, unit_dir, eta);
    const double worst = pd_unit.size() ? pd_unit.maxCoeff() : 0.0;
    if (!(worst > 0.0)) return cfg.p_max;
    return std::min(cfg.p_max, cfg.pd_limit / worst);
}

inline CVec adaptive_backoff_beamformer(const CMat& h, const ExposureManifold& manifold, double eta,
                                        const ControlConfig& cfg) {
    const CVec dir = unconstrained_direction(h);
    return std::sqrt(backoff_power(dir, manifold, eta, cfg)) * dir;
}

/// One candidate UE state for the worst-case search.
struct ExposureSnapshot {
    CMat h;
    ExposureManifold manifold;
};

/// Fixed power that keeps the unconstrained beam PD-compliant at every pose of
/// the grid. `snapshot` builds the channel and manifolds for one pose.
template <class Pose>
double worst_case_backoff_power(const std::vector<Pose>& grid,
                                const std::function<ExposureSnapshot(const Pose&)>& snapshot, double eta,
                                const ControlConfig& cfg) {
    if (grid.empty()) {
        throw DomainError("worst-case back-off needs a non-empty pose grid");
    }
    double p = cfg.p_max;
    for (const auto& pose : grid) {
        const ExposureSnapshot s = snapshot(pose);
        p = std::min(p, backoff_power(unconstrained_direction(s.h), s.manifold, eta, cfg));
    }
    return p;
}

struct PerSlotOptions {
    int starts = 16;
    int max_iterations = 200;
    std::uint64_t seed = 0;
};

namespace detail {

// Objective of a unit direction once scaled to the largest feasible power.
struct FeasibleObjective {
    const CMat& gram;                    // H^H H
    const std::vector<CMat>& pd_forms;  // Phi_m^H Phi_m / 2 eta
    double p_max;
    double pd_limit;

    struct Eval {
        double value = 0.0;
        double power = 0.0;
        double gain = 0.0;  // u^H G u
        std::vector<double> pd_unit;
    };

    Eval operator()(const CVec& u) const {
        Eval e;
        e.gain = std::max(0.0, (u.adjoint() * gram * u)(0).real());
        e.power = p_max;
        e.pd_unit.resize(pd_forms.size());
        for (std::size_t m = 0; m < pd_forms.size(); ++m) {
            const double pd = std::max(0.0, (u.adjoint() * pd_forms[m] * u)(0).real());
            e.pd_unit[m] = pd;
            if (pd > 0.0) e.power = std::min(e.power, pd_limit / pd);
        }
        e.value = e.gain * e.power;
        return e;
    }
};

}  // namespace detail

/// Approximate maximizer of ||Hw||^2 subject to ||w||^2 <= P_max and I_m(w) <= I_th.
/// Works on unit directions u scaled to their largest feasible power, and runs
/// projected gradient ascent with backtracking from several starts: the
/// unconstrained direction, Lyapunov-form directions (top eigenvectors of
/// H^H H - mu sum_m Phi_m^H Phi_m over a range of mu), caller-provided starts and
/// seeded random directions. The result is always feasible.
inline CVec per_slot_optimal_beamformer(const CMat& h, const ExposureManifold& manifold, double eta,
                                        const ControlConfig& cfg, const PerSlotOptions& opt = {},
                                        const std::vector<CVec>& extra_starts = {}) {
    const Eigen::Index n = h.cols();
    const CMat gram = h.adjoint() * h;
    std::vector<CMat> forms;
    forms.reserve(manifold.phi.size());
    CMat form_sum = CMat::Zero(n, n);
    for (const auto& phi : manifold.phi) {
        forms.push_back((phi.adjoint() * phi) / (2.0 * eta));
        form_sum += forms.back();
    }
    const detail::FeasibleObjective objective{gram, forms, cfg.p_max, cfg.pd_limit};

    std::vector<CVec> starts;
    const CVec u_unc = unconstrained_direction(h);
    starts.push_back(u_unc);
    for (const auto& s : extra_starts) {
        if (s.norm() > 0.0) starts.push_back(s.normalized());
    }
    const double form_scale = form_sum.norm();
    if (form_scale > 0.0) {
        const double mu0 = gram.norm() / form_scale;
        for (double f : {0.1, 1.0, 10.0, 100.0}) {
            CMat a = gram - (f * mu0) * form_sum;
            starts.push_back(dominant_eigenpair(0.5 * (a + a.adjoint())).vector);
        }
    }
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    while (static_cast<int>(starts.size()) < opt.starts) {
        CVec u(n);
        for (Eigen::Index i = 0; i < n; ++i) u(i) = cplx(normal(rng), normal(rng));
        starts.push_back(u.normalized());
    }

    CVec best = u_unc;
    auto best_eval = objective(u_unc);
    for (const CVec& s : starts) {
        CVec u = s;
        auto cur = objective(u);
        double step = 0.1;
        for (int it = 0; it < opt.max_iterations && cur.value > 0.0; ++it) {
            // Ascent direction of log(gain) - log(binding PD); near-ties between
            // PD constraints are blended with soft-min weights.
            CVec grad = gram * u / std::max(cur.gain, 1e-300);
            if (cur.power < cfg.p_max) {
                const double pd_star = cfg.pd_limit / cur.power;
                double wsum = 0.0;
                CVec pen = CVec::Zero(n);
                for (std::size_t m = 0; m < forms.size(); ++m) {
                    const double pd = cur.pd_unit[m];
                    if (pd <= 0.0) continue;
                    const double wgt = std::exp(-50.0 * (pd_star / pd - 1.0));
                    if (wgt < 1e-6) continue;
                    pen += wgt * (forms[m] * u) / pd;
                    wsum += wgt;
                }
                grad -= pen / wsum;
            }
            grad -= u * (u.adjoint() * grad)(0);
            const double gnorm = grad.norm();
            if (gnorm < 1e-12) break;
            bool improved = false;
            step = std::min(1.0, step * 2.0);
            while (step > 1e-10) {
                CVec trial = (u + (step / gnorm) * grad).normalized();
                auto e = objective(trial);
                if (e.value > cur.value) {
                    const double gain = e.value - cur.value;
                    u = std::move(trial);
                    cur = std::move(e);
                    improved = gain > 1e-12 * cur.value;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
        }
        if (cur.value > best_eval.value) {
            best = u;
            best_eval = cur;
        }
    }

    CVec w = std::sqrt(best_eval.power) * best;
    // Round-off guard on both constraints.
    const Eigen::VectorXd pd = incident_pd(manifold, w, eta);
    const double worst = pd.size() ? pd.maxCoeff() : 0.0;
    if (worst > cfg.pd_limit) w *= std::sqrt(cfg.pd_limit / worst);
    if (w.squaredNorm() > cfg.p_max) w *= std::sqrt(cfg.p_max / w.squaredNorm());
    return w;
}

struct BoundParams {
    double t_max = 0.0;
    double b_const = 0.0;
};

/// B = (M / 2)(T_max + T_th)^2
inline BoundParams make_bound_params(int m, double t_max, double t_th) {
    return {t_max, 0.5 * m * (t_max + t_th) * (t_max + t_th)};
}

/// avg ||Hw||^2 - (G_ref - B / V); non-negative when the drift-plus-penalty bound
/// holds against the reference. Diagnostic only: G_ref is a proxy for the
/// unattainable long-term optimum.
inline double bound_gap(double avg_received_power, double g_ref, const BoundParams& bound, double v) {
    if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
    return avg_received_power - (g_ref - bound.b_const / v);
}

}  // namespace expobeam
