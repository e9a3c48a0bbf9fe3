#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "expobeam/control.hpp"
#include "expobeam/oracles.hpp"
#include "expobeam/sim.hpp"

using namespace expobeam;

namespace {

constexpr double kEta = kFreeSpaceImpedance;

CMat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g;
    CMat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = scale * cplx(g(rng), g(rng));
    return m;
}

ExposureManifold random_manifold(int points, Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    ExposureManifold man;
    for (int m = 0; m < points; ++m) man.phi.push_back(random_mat(3, n, rng, scale));
    return man;
}

double max_pd(const ExposureManifold& man, const CVec& w) {
    const Eigen::VectorXd pd = incident_pd(man, w, kEta);
    return pd.size() ? pd.maxCoeff() : 0.0;
}

const ThermalKernel& kernel() {
    static const ThermalKernel k = kernel_coefficients(TissueParams::skin(), 0.1);
    return k;
}

}  // namespace

TEST(Queues, UpdateExamples) {
    VirtualQueues q(2);
    EXPECT_EQ(q.q.norm(), 0.0);
    q.q << 0.0, 1.0;
    Eigen::VectorXd t(2);
    t << 0.05, 0.3;
    const auto next = queue_update(q, t, 0.1);
    EXPECT_EQ(next.q(0), 0.0);
    EXPECT_NEAR(next.q(1), 1.2, 1e-15);
    EXPECT_THROW(queue_update(q, Eigen::VectorXd::Zero(3), 0.1), DomainError);
}

TEST(DecisionMatrix, ZeroQueuesNegativeV0AndHermitian) {
    std::mt19937_64 rng(41);
    const CMat h = random_mat(16, 4, rng);
    const auto man = random_manifold(5, 4, rng, 100.0);
    ControlConfig cfg;
    const CMat a0 = decision_matrix(h, man, VirtualQueues(5), kernel(), cfg, kEta);
    EXPECT_LE((a0 - cfg.v_param * h.adjoint() * h).norm(), 1e-14 * a0.norm());

    VirtualQueues q(5);
    q.q << 0.1, 0.0, 2.0, 0.3, 5.0;
    cfg.v_param = 0.0;
    const CMat neg = decision_matrix(h, man, q, kernel(), cfg, kEta);
    Eigen::SelfAdjointEigenSolver<CMat> es(neg);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-12 * neg.norm());

    for (int trial = 0; trial < 20; ++trial) {
        cfg.v_param = std::uniform_real_distribution<double>(0.0, 1e-3)(rng);
        const CMat a = decision_matrix(random_mat(8, 4, rng), random_manifold(5, 4, rng, 50.0), q, kernel(), cfg, kEta);
        EXPECT_LE((a - a.adjoint()).norm(), 1e-12 * a.norm());
    }
    EXPECT_THROW(decision_matrix(h, man, VirtualQueues(4), kernel(), cfg, kEta), DomainError);
}

TEST(DecisionMatrix, PenaltyUsesSlotGain) {
    std::mt19937_64 rng(42);
    const CMat h = random_mat(4, 3, rng);
    const auto man = random_manifold(2, 3, rng);
    VirtualQueues q(2);
    q.q << 0.5, 1.5;
    ControlConfig cfg;
    const CMat a = decision_matrix(h, man, q, kernel(), cfg, kEta);
    const double c_pen = kernel().prefactor * kernel().xi[0];
    CMat expect = cfg.v_param * h.adjoint() * h;
    for (int m = 0; m < 2; ++m) expect -= c_pen / (2 * kEta) * q.q(m) * man.phi[m].adjoint() * man.phi[m];
    EXPECT_LE((a - expect).norm(), 1e-13 * expect.norm());
}

TEST(Eigenpair, KnownMatrices) {
    CMat d = CMat::Identity(4, 4);
    d(0, 0) = 3.0;
    const auto e = dominant_eigenpair(d);
    EXPECT_NEAR(e.lambda, 3.0, 1e-14);
    EXPECT_LE((e.vector - CVec::Unit(4, 0)).norm(), 1e-14);
    EXPECT_NEAR(dominant_eigenpair(-CMat::Identity(3, 3)).lambda, -1.0, 1e-14);
    CMat bad = CMat::Zero(2, 2);
    bad(0, 1) = 1.0;
    EXPECT_THROW(dominant_eigenpair(bad), DomainError);
}

TEST(Eigenpair, RayleighOracleAndPhaseConvention) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        const CMat b = random_mat(4, 4, rng);
        const CMat a = 0.5 * (b + b.adjoint());
        const auto e = dominant_eigenpair(a);
        EXPECT_GE(e.lambda, oracle::rayleigh_sample_max(a, 10000, 500 + trial));
        EXPECT_LE((a * e.vector - e.lambda * e.vector).norm(), 1e-10 * a.norm());
        EXPECT_NEAR(e.vector.norm(), 1.0, 1e-14);
        EXPECT_EQ(e.vector(0).imag(), 0.0);
        EXPECT_GT(e.vector(0).real(), 0.0);
    }
}

TEST(Lyapunov, SilentAndClosedForm) {
    const auto s = lyapunov_beamformer(-CMat::Identity(4, 4), 5.0);
    EXPECT_TRUE(s.silent);
    EXPECT_EQ(s.w.norm(), 0.0);
    EXPECT_TRUE(lyapunov_beamformer(CMat::Zero(3, 3), 5.0).silent);

    CMat d = CMat::Identity(4, 4);
    d(0, 0) = 3.0;
    const auto b = lyapunov_beamformer(d, 5.0);
    EXPECT_FALSE(b.silent);
    EXPECT_LE((b.w - std::sqrt(5.0) * CVec::Unit(4, 0)).norm(), 1e-13);
    EXPECT_NEAR(b.w.squaredNorm(), 5.0, 1e-12);
}

TEST(Lyapunov, SphereSamplingOptimality) {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 5; ++trial) {
        const CMat h = random_mat(16, 4, rng, 1e-2);
        VirtualQueues q(6);
        for (int m = 0; m < 6; ++m) q.q(m) = std::uniform_real_distribution<double>(0, 0.5)(rng);
        const CMat a = decision_matrix(h, random_manifold(6, 4, rng, 30.0), q, kernel(), ControlConfig{}, kEta);
        const auto d = lyapunov_beamformer(a, 5.0);
        const double val = d.silent ? 0.0 : (d.w.adjoint() * a * d.w)(0).real();
        std::mt19937_64 srng(600 + trial);
        for (int i = 0; i < 10000; ++i) {
            const CVec x = std::sqrt(5.0) * oracle::random_unit_vector(4, srng);
            ASSERT_GE(val, (x.adjoint() * a * x)(0).real() - 1e-12 * a.norm() * 5.0);
        }
    }
}

TEST(Lyapunov, ArgmaxInvariantUnderJointScaling) {
    std::mt19937_64 rng(45);
    const CMat h = random_mat(16, 4, rng);
    const auto man = random_manifold(4, 4, rng, 30.0);
    VirtualQueues q(4);
    q.q << 0.1, 0.4, 0.0, 0.2;
    ControlConfig cfg;
    const auto d1 = lyapunov_beamformer(decision_matrix(h, man, q, kernel(), cfg, kEta), 5.0);
    ASSERT_FALSE(d1.silent);
    const CVec w1 = d1.w;
    cfg.v_param *= 7.5;
    q.q *= 7.5;
    const auto w2 = lyapunov_beamformer(decision_matrix(h, man, q, kernel(), cfg, kEta), 5.0).w;
    EXPECT_NEAR(std::abs(w1.dot(w2)), 5.0, 1e-9);
}

TEST(Unconstrained, MatchedAndScaleInvariant) {
    std::mt19937_64 rng(46);
    const CVec u = random_mat(6, 1, rng);
    const CVec hv = random_mat(4, 1, rng);
    const CMat h = u * hv.transpose();
    const CVec w = unconstrained_beamformer(h, 5.0);
    const CVec matched = hv.conjugate().normalized();
    EXPECT_NEAR(std::abs(w.dot(matched)), std::sqrt(5.0), 1e-12);
    const CVec w2 = unconstrained_beamformer(cplx(-3.0, 2.0) * h, 5.0);
    EXPECT_NEAR(std::abs(w.dot(w2)), 5.0, 1e-12);

    const CMat g = random_mat(12, 4, rng);
    const double best = (g * unconstrained_beamformer(g, 5.0)).squaredNorm();
    for (int i = 0; i < 10000; ++i) {
        const CVec x = std::sqrt(5.0) * oracle::random_unit_vector(4, rng);
        ASSERT_LE((g * x).squaredNorm(), best * (1 + 1e-12));
    }
}

TEST(AdaptiveBackoff, Examples) {
    std::mt19937_64 rng(47);
    const CMat h = random_mat(8, 4, rng);
    ControlConfig cfg;
    ExposureManifold none;
    none.phi.assign(3, CMat::Zero(3, 4));
    EXPECT_NEAR(adaptive_backoff_beamformer(h, none, kEta, cfg).squaredNorm(), cfg.p_max, 1e-12);

    auto man = random_manifold(3, 4, rng);
    const CVec full = unconstrained_beamformer(h, cfg.p_max);
    const double pd_full = max_pd(man, full);

    ExposureManifold boundary = man;
    for (auto& phi : boundary.phi) phi *= std::sqrt(cfg.pd_limit / pd_full);
    EXPECT_NEAR(adaptive_backoff_beamformer(h, boundary, kEta, cfg).squaredNorm(), cfg.p_max, 1e-9);

    ExposureManifold four = man;
    for (auto& phi : four.phi) phi *= std::sqrt(4.0 * cfg.pd_limit / pd_full);
    const CVec w = adaptive_backoff_beamformer(h, four, kEta, cfg);
    EXPECT_NEAR(w.squaredNorm(), cfg.p_max / 4.0, 1e-9 * cfg.p_max);
    EXPECT_NEAR(max_pd(four, w), cfg.pd_limit, 1e-9 * cfg.pd_limit);
}

TEST(WorstCase, GridProperties) {
    ScenarioConfig cfg;
    const Scenario sc(cfg);
    const auto grid = worst_case_grid(cfg, 3, 2, 4);
    ASSERT_EQ(grid.size(), 24u);
    const double p = worst_case_power(sc, grid);
    for (const auto& pose : grid) {
        EXPECT_NEAR((pose.center - cfg.head_center()).norm(), cfg.d_min, 1e-12);
        const auto s = sc.snapshot(pose);
        const double adaptive = adaptive_backoff_beamformer(s.h, s.manifold, sc.consts.eta, cfg.control()).squaredNorm();
        EXPECT_LE(p, adaptive * (1 + 1e-12));
    }
    const std::vector<UePose> one{grid[5]};
    const auto s = sc.snapshot(grid[5]);
    EXPECT_NEAR(worst_case_power(sc, one),
                adaptive_backoff_beamformer(s.h, s.manifold, sc.consts.eta, cfg.control()).squaredNorm(), 1e-12);
    EXPECT_THROW(worst_case_power(sc, std::vector<UePose>{}), DomainError);
}

TEST(PerSlotOptimal, InactiveConstraintsMatchUnconstrained) {
    std::mt19937_64 rng(48);
    const CMat h = random_mat(16, 4, rng);
    const auto man = random_manifold(5, 4, rng, 1e-3);
    ControlConfig cfg;
    const CVec w = per_slot_optimal_beamformer(h, man, kEta, cfg);
    const double unc = (h * unconstrained_beamformer(h, cfg.p_max)).squaredNorm();
    EXPECT_NEAR((h * w).squaredNorm() / unc, 1.0, 1e-6);
}

TEST(PerSlotOptimal, FeasibleAndDominatesAdaptive) {
    std::mt19937_64 rng(49);
    ControlConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const CMat h = random_mat(16, 4, rng);
        const auto man = random_manifold(8, 4, rng, 3.0);
        PerSlotOptions opt;
        opt.seed = trial;
        const CVec w = per_slot_optimal_beamformer(h, man, kEta, cfg, opt);
        EXPECT_LE(w.squaredNorm(), cfg.p_max * (1 + 1e-12));
        EXPECT_LE(max_pd(man, w), cfg.pd_limit * (1 + 1e-9));
        const CVec a = adaptive_backoff_beamformer(h, man, kEta, cfg);
        EXPECT_GE((h * w).squaredNorm(), (h * a).squaredNorm() * (1 - 1e-12));
    }
}

TEST(PerSlotOptimal, TwoElementGridSearchOracle) {
    std::mt19937_64 rng(50);
    ControlConfig cfg;
    int active = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const CMat h = random_mat(8, 2, rng);
        ExposureManifold man;
        man.phi.push_back(random_mat(3, 2, rng));
        // Make the single constraint bind at the unconstrained direction.
        const double pd_full = max_pd(man, unconstrained_beamformer(h, cfg.p_max));
        man.phi[0] *= std::sqrt(3.0 * cfg.pd_limit / pd_full);

        // Directions modulo global phase: (cos a, sin a e^{jb}); power = min(P, I_th / pd(unit)).
        auto value = [&](double a, double b) {
            CVec u(2);
            u << std::cos(a), std::sin(a) * std::exp(cplx(0.0, b));
            const double pd = max_pd(man, u);
            const double p = pd > 0 ? std::min(cfg.p_max, cfg.pd_limit / pd) : cfg.p_max;
            return p * (h * u).squaredNorm();
        };
        const int na = 1200, nb = 2400;
        double best = 0.0, ba = 0.0, bb = 0.0;
        for (int i = 0; i <= na; ++i) {
            for (int j = 0; j < nb; ++j) {
                const double a = 0.5 * std::numbers::pi * i / na, b = 2 * std::numbers::pi * j / nb;
                const double v = value(a, b);
                if (v > best) best = v, ba = a, bb = b;
            }
        }
        for (double step = 1e-3; step > 1e-7; step *= 0.5) {
            for (int it = 0; it < 20; ++it) {
                for (auto [da, db] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
                    const double v = value(ba + da, bb + db);
                    if (v > best) best = v, ba += da, bb += db;
                }
            }
        }
        const CVec w = per_slot_optimal_beamformer(h, man, kEta, cfg);
        if (max_pd(man, w) > 0.99 * cfg.pd_limit) ++active;
        EXPECT_GE((h * w).squaredNorm(), 0.995 * best) << "trial " << trial;
        // The kinked objective can leave the coordinate refinement slightly short.
        EXPECT_LE((h * w).squaredNorm(), best * (1 + 1e-3));
    }
    EXPECT_GT(active, 0);
}

TEST(Bound, ParamsAndGap) {
    const auto b = make_bound_params(15, 0.25, 0.2);
    EXPECT_NEAR(b.b_const, 7.5 * 0.45 * 0.45, 1e-15);
    EXPECT_NEAR(bound_gap(3.0, 4.0, b, 1e12), -1.0, 1e-9);
    EXPECT_NEAR(bound_gap(3.0, 4.0, b, 2.0), 3.0 - (4.0 - b.b_const / 2.0), 1e-15);
    EXPECT_TRUE(std::isinf(bound_gap(3.0, 4.0, b, 0.0)));
}
