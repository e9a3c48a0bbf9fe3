#pragma once

// Exposure array manifolds and incident power density at the head sampling points.
// Uses exact per-element distances and polarizations (near zone, no parallel-ray step).

#include <Eigen/Dense>

#include <numbers>
#include <vector>

#include "expobeam/em.hpp"
#include "expobeam/geometry.hpp"

namespace expobeam {

struct ExposureManifold {
    std::vector<CMat> phi;  // one 3 x N_t matrix per sampling point
    long slot_index = 0;

    int size() const { return static_cast<int>(phi.size()); }

    /// sum_m weight_m Phi_m^H Phi_m
    CMat weighted_gram(const Eigen::VectorXd& weights) const {
        const auto n = phi.empty() ? 0 : phi.front().cols();
        CMat g = CMat::Zero(n, n);
        for (std::size_t m = 0; m < phi.size(); ++m) {
            const double wm = weights(static_cast<Eigen::Index>(m));
            if (wm != 0.0) {
                g.noalias() += wm * (phi[m].adjoint() * phi[m]);
            }
        }
        return g;
    }
};

/// Phi_m = (j eta v0 / 2 pi) P_m diag(a_m) Z^-1.
inline CMat exposure_manifold_at(const Vec3& point, const TxArrayState& tx) {
    const ArrayResponse resp = array_response(tx.positions, tx.spec, point, tx.consts);
    const cplx scale = kJ * tx.consts.eta * tx.v0 / (2.0 * std::numbers::pi);
    const CMat pa = resp.polarization.cast<cplx>() * resp.a.asDiagonal();
    return scale * pa * tx.z->inverse;
}

inline ExposureManifold exposure_manifold(const HeadModel& head, const TxArrayState& tx, long slot = 0) {
    ExposureManifold out;
    out.slot_index = slot;
    out.phi.reserve(head.sampling_points.size());
    for (const auto& s : head.sampling_points) {
        out.phi.push_back(exposure_manifold_at(s, tx));
    }
    return out;
}

/// I_m = ||Phi_m w||^2 / (2 eta) for every sampling point, W/m^2.
inline Eigen::VectorXd incident_pd(const ExposureManifold& manifold, const CVec& w, double eta) {
    Eigen::VectorXd pd(manifold.size());
    for (int m = 0; m < manifold.size(); ++m) {
        pd(m) = (manifold.phi[static_cast<std::size_t>(m)] * w).squaredNorm() / (2.0 * eta);
    }
    return pd;
}

}  // namespace expobeam
