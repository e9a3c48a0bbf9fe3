#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "expobeam/sim.hpp"

using namespace expobeam;

namespace {

ScenarioConfig short_cfg(const std::string& scheme, long n) {
    ScenarioConfig cfg;
    cfg.scheme = scheme;
    cfg.n_slots = n;
    return cfg;
}

}  // namespace

TEST(PoseSampling, DegenerateAnnulus) {
    ScenarioConfig cfg;
    cfg.d_min = cfg.d_max = 0.2;
    for (long n = 1; n <= 200; ++n) {
        const auto p = sample_ue_pose(cfg, n);
        EXPECT_NEAR((p.center - cfg.head_center()).norm(), 0.2, 1e-12);
        EXPECT_EQ(p.center.z(), cfg.head_z);
    }
}

TEST(PoseSampling, RadiusFollowsAreaUniformLaw) {
    ScenarioConfig cfg;
    cfg.d_min = 0.1;
    cfg.d_max = 0.5;
    const int n = 100000;
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
        const auto p = sample_ue_pose(cfg, i + 1);
        r[i] = (p.center - cfg.head_center()).norm();
        ASSERT_GE(p.tilt_angle, deg2rad(cfg.tilt_min_deg));
        ASSERT_LE(p.tilt_angle, deg2rad(cfg.tilt_max_deg));
        ASSERT_GE(p.polar_angle, deg2rad(cfg.polar_center_deg + cfg.polar_min_deg));
        ASSERT_LE(p.polar_angle, deg2rad(cfg.polar_center_deg + cfg.polar_max_deg));
    }
    std::sort(r.begin(), r.end());
    const double a2 = cfg.d_min * cfg.d_min, b2 = cfg.d_max * cfg.d_max;
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = (r[i] * r[i] - a2) / (b2 - a2);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    EXPECT_LT(ks, 0.01);
}

TEST(PoseSampling, DeterministicPerSeedAndSlot) {
    ScenarioConfig cfg;
    const auto a = sample_ue_pose(cfg, 17);
    const auto b = sample_ue_pose(cfg, 17);
    EXPECT_EQ(a.center, b.center);
    EXPECT_EQ(a.tilt_angle, b.tilt_angle);
    cfg.seed = 2;
    EXPECT_NE(sample_ue_pose(cfg, 17).center, a.center);
}

TEST(Config, ValidationRejectsBadValues) {
    ScenarioConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    auto bad = cfg;
    bad.d_min = 0.2;
    bad.d_max = 0.1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.n_slots = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.scheme = "greedy";
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.d_min = 0.05;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Run, SingleSlotZeroVIsSilent) {
    auto cfg = short_cfg("lyapunov", 1);
    cfg.v_param = 0.0;
    const auto t = run_simulation(cfg);
    ASSERT_EQ(t.slots.size(), 1u);
    EXPECT_TRUE(t.slots[0].silent);
    EXPECT_EQ(t.slots[0].w.norm(), 0.0);
    EXPECT_EQ(t.slots[0].pd.norm(), 0.0);
    EXPECT_EQ(t.slots[0].lambda_max, 0.0);
}

TEST(Run, UnconstrainedSelfConsistency) {
    const auto cfg = short_cfg("unconstrained", 40);
    const auto t = run_simulation(cfg);
    const Scenario sc(cfg);
    for (const auto& r : t.slots) {
        const auto snap = sc.snapshot(r.pose);
        const auto ep = dominant_eigenpair(snap.h.adjoint() * snap.h);
        const double snr = received_snr(snap.h, std::sqrt(cfg.p_max) * ep.vector, cfg.noise_variance).linear;
        EXPECT_NEAR(r.snr.linear, snr, 1e-9 * snr);
        EXPECT_NEAR(r.w.squaredNorm(), cfg.p_max, 1e-12);
    }
}

TEST(Run, BaselinesRespectPdLimit) {
    for (const char* scheme : {"adaptive_backoff", "worst_case", "per_slot_optimal"}) {
        const auto cfg = short_cfg(scheme, scheme == std::string("per_slot_optimal") ? 60 : 300);
        const auto t = run_simulation(cfg);
        for (const auto& r : t.slots) {
            ASSERT_LE(r.pd.maxCoeff(), cfg.pd_limit * (1 + 1e-9)) << scheme << " slot " << r.slot;
            ASSERT_LE(r.w.squaredNorm(), cfg.p_max * (1 + 1e-12));
        }
    }
}

TEST(Run, LyapunovInvariants) {
    const auto cfg = short_cfg("lyapunov", 600);
    const auto t = run_simulation(cfg);
    ASSERT_EQ(t.slots.size(), 600u);
    for (const auto& r : t.slots) {
        ASSERT_LE(r.w.squaredNorm(), cfg.p_max + 1e-12);
        ASSERT_GE(r.temps.minCoeff(), 0.0);
        ASSERT_GE(r.queues.minCoeff(), 0.0);
        if (r.lambda_max <= 0.0) {
            ASSERT_TRUE(r.silent);
            ASSERT_EQ(r.w.norm(), 0.0);
            ASSERT_EQ(r.pd.norm(), 0.0);
        } else {
            ASSERT_NEAR(r.w.squaredNorm(), cfg.p_max, 1e-9);
        }
    }
    const auto s = summarize(t);
    // Queue bound: mean temperature minus threshold never exceeds Q[N+1]/N.
    EXPECT_GE(s.min_queue_bound_slack, -1e-12);
}

TEST(Run, DeterministicTrace) {
    const auto cfg = short_cfg("lyapunov", 50);
    const auto a = run_simulation(cfg), b = run_simulation(cfg);
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
        ASSERT_EQ(a.slots[i].w, b.slots[i].w);
        ASSERT_EQ(a.slots[i].temps, b.slots[i].temps);
    }
}

TEST(Run, WorstCasePowerHoldsOnFinerGrid) {
    ScenarioConfig cfg;
    const Scenario sc(cfg);
    const double p = worst_case_power(sc);
    EXPECT_LE(p, worst_case_power(sc, worst_case_grid(cfg, cfg.worst_case_tilt_points, cfg.worst_case_polar_points,
                                                      cfg.n_sampling_points)));
    const auto fine = worst_case_grid(cfg, 4 * cfg.worst_case_tilt_points, 4 * cfg.worst_case_polar_points,
                                      cfg.n_sampling_points);
    double worst = 0.0;
    for (const auto& pose : fine) {
        const auto snap = sc.snapshot(pose);
        const CVec w = std::sqrt(p) * unconstrained_direction(snap.h);
        worst = std::max(worst, incident_pd(snap.manifold, w, sc.consts.eta).maxCoeff());
    }
    EXPECT_LE(worst, cfg.pd_limit * (1 + 1e-9)) << "fixed power " << p;
}

TEST(Run, ReferenceRunFinalTemperature) {
    // Defaults: V = 5e-4, T_th = 0.2 C, 3600 slots.
    const auto t = run_simulation(ScenarioConfig{});
    const auto s = summarize(t);
    EXPECT_GE(s.final_avg_temperature, 0.0);
    EXPECT_LE(s.final_avg_temperature, 0.2 * 1.1);
    EXPECT_TRUE(t.thermal_warning.empty());  // exactly 360 s
    const auto ab = summarize(run_simulation(short_cfg("adaptive_backoff", 3600)));
    EXPECT_GE(s.snr_db_quantiles[3].second, ab.snr_db_quantiles[3].second);
}

TEST(Summary, QuantilesAndSilentTrace) {
    EXPECT_EQ(quantile({1.0, 2.0, 3.0}, 0.5), 2.0);
    EXPECT_NEAR(quantile({0.0, 10.0}, 0.1), 1.0, 1e-15);
    EXPECT_THROW(quantile({}, 0.5), DomainError);

    SimulationTrace t;
    t.cfg = ScenarioConfig{};
    for (long n = 1; n <= 10; ++n) {
        SlotRecord r;
        r.slot = n;
        r.w = CVec::Zero(4);
        r.silent = true;
        r.pd = r.temps = r.queues = Eigen::VectorXd::Zero(3);
        t.slots.push_back(r);
    }
    auto s = summarize(t);
    EXPECT_EQ(s.avg_snr_linear, 0.0);
    EXPECT_EQ(s.max_temperature, 0.0);
    EXPECT_EQ(s.silent_fraction, 1.0);

    for (auto& r : t.slots) r.snr = {4.0, 10 * std::log10(4.0)};
    s = summarize(t);
    for (const auto& [p, v] : s.snr_db_quantiles) EXPECT_EQ(v, 10 * std::log10(4.0));
    EXPECT_THROW(summarize(SimulationTrace{}), DomainError);
}
