#pragma once

// Equivalent UE -> BS channel built from the radiated-field model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "expobeam/em.hpp"
#include "expobeam/geometry.hpp"

namespace expobeam {

struct ReceiverSpec {
    Vec3 polarization = Vec3::UnitZ();
    double antenna_factor = 1.0;
};

struct ChannelMatrix {
    CMat h;  // N_r x N_t
    long slot_index = 0;
};

/// |rho_r . rho_t| per transmit element. With `far_field` every entry takes the
/// common value computed from the array-center direction `center_dir`.
inline Eigen::RowVectorXd polarization_mismatch(const ReceiverSpec& rx,
                                                const Eigen::Matrix3Xd& pol_matrix,
                                                bool far_field = false,
                                                const Vec3& orientation = Vec3::UnitZ(),
                                                const Vec3& center_dir = Vec3::UnitX()) {
    const auto n = pol_matrix.cols();
    Eigen::RowVectorXd mu(n);
    if (far_field) {
        const double c = orientation.dot(center_dir);
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double common =
            s < kAxialEpsilon ? 0.0
                              : std::abs(rx.polarization.dot(polarization_unit_vector(orientation, center_dir)));
        mu.setConstant(common);
        return mu;
    }
    for (Eigen::Index t = 0; t < n; ++t) {
        mu(t) = std::abs(rx.polarization.dot(pol_matrix.col(t)));
    }
    return mu;
}

/// h_r = (j eta A_F v0 / 2 pi) mu_r diag(a(r_r)) Z^-1, a 1 x N_t row.
inline Eigen::RowVectorXcd channel_vector(const Vec3& rx_position, const ReceiverSpec& rx,
                                          const TxArrayState& tx, bool far_field_mismatch = true) {
    const ArrayResponse resp = array_response(tx.positions, tx.spec, rx_position, tx.consts);
    const Vec3 center_dir = (rx_position - tx.center()).normalized();
    const Eigen::RowVectorXd mu =
        polarization_mismatch(rx, resp.polarization, far_field_mismatch, tx.spec.orientation, center_dir);
    const cplx scale = kJ * tx.consts.eta * rx.antenna_factor * tx.v0 / (2.0 * std::numbers::pi);
    const Eigen::RowVectorXcd weighted = (mu.cast<cplx>().array() * resp.a.transpose().array()).matrix();
    return scale * weighted * tx.z->inverse;
}

inline ChannelMatrix channel_matrix(const std::vector<Vec3>& rx_positions, const ReceiverSpec& rx,
                                    const TxArrayState& tx, bool far_field_mismatch = true,
                                    long slot = 0) {
    ChannelMatrix out{CMat(static_cast<Eigen::Index>(rx_positions.size()),
                           static_cast<Eigen::Index>(tx.positions.size())),
                      slot};
    for (std::size_t r = 0; r < rx_positions.size(); ++r) {
        out.h.row(static_cast<Eigen::Index>(r)) = channel_vector(rx_positions[r], rx, tx, far_field_mismatch);
    }
    return out;
}

inline ChannelMatrix channel_matrix(const BsGeometry& bs, const ReceiverSpec& rx, const TxArrayState& tx,
                                    bool far_field_mismatch = true, long slot = 0) {
    return channel_matrix(rx_element_positions(bs), rx, tx, far_field_mismatch, slot);
}

struct Snr {
    double linear = 0.0;
    double db = -std::numeric_limits<double>::infinity();
};

/// ||Hw||^2 / sigma^2 (matched-filter combining, unit symbol).
inline Snr received_snr(const CMat& h, const CVec& w, double noise_variance) {
    if (!(noise_variance > 0.0)) {
        throw DomainError("noise variance must be positive");
    }
    Snr s;
    s.linear = (h * w).squaredNorm() / noise_variance;
    s.db = 10.0 * std::log10(s.linear);
    return s;
}

}  // namespace expobeam
