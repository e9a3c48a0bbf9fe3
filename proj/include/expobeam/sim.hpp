#pragma once

// Scenario sampling and the slot loop: pose -> channel/exposure -> beamformer ->
// PD -> temperature -> queues, for the Lyapunov scheme and the four baselines.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "expobeam/channel.hpp"
#include "expobeam/control.hpp"
#include "expobeam/em.hpp"
#include "expobeam/errors.hpp"
#include "expobeam/exposure.hpp"
#include "expobeam/geometry.hpp"
#include "expobeam/thermal.hpp"

namespace expobeam {

enum class Scheme { lyapunov, worst_case, adaptive_backoff, per_slot_optimal, unconstrained };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::lyapunov: return "lyapunov";
        case Scheme::worst_case: return "worst_case";
        case Scheme::adaptive_backoff: return "adaptive_backoff";
        case Scheme::per_slot_optimal: return "per_slot_optimal";
        case Scheme::unconstrained: return "unconstrained";
    }
    return "?";
}

inline bool is_scheme(const std::string& s) {
    for (Scheme x : {Scheme::lyapunov, Scheme::worst_case, Scheme::adaptive_backoff, Scheme::per_slot_optimal,
                     Scheme::unconstrained}) {
        if (s == scheme_name(x)) return true;
    }
    return false;
}

inline Scheme parse_scheme(const std::string& s) {
    for (Scheme x : {Scheme::lyapunov, Scheme::worst_case, Scheme::adaptive_backoff, Scheme::per_slot_optimal,
                     Scheme::unconstrained}) {
        if (s == scheme_name(x)) return x;
    }
    throw DomainError("unknown scheme '" + s + "'");
}

struct ScenarioConfig {
    std::string scheme = "lyapunov";
    double frequency = 30e9;
    int n_tx = 4;
    int n_rx = 64;
    double tx_spacing_wavelengths = 0.5;
    double rx_spacing_wavelengths = 0.5;
    double wire_radius_wavelengths = 1e-3;
    double bs_height = 5.0;
    double head_x = 100.0;
    double head_y = 100.0;
    double head_z = 1.5;
    double head_radius_wavelengths = 5.0;
    int n_sampling_points = 15;
    double d_ref = 0.1;
    double d_min = 0.1;
    double d_max = 0.12;
    double tilt_min_deg = -90.0;
    double tilt_max_deg = 90.0;
    double polar_min_deg = -20.0;
    double polar_max_deg = 20.0;
    double polar_center_deg = 0.0;  // beta = polar_center + U(polar_min, polar_max)
    double dt = 0.1;
    int n_slots = 3600;
    double p_max = 5.0;
    double noise_variance = 0.1;
    double temp_threshold = 0.2;
    double pd_limit = 20.0;
    double v_param = 5e-4;
    double antenna_factor = 1.0;
    double thermal_conductivity = 0.37;
    double density = 1109.0;
    double specific_heat = 3390.0;
    double blood_perfusion_ml_per_min_kg = 106.0;
    double transmission_coeff = 0.8;
    double kernel_eps = 1e-4;
    std::string thermal_mode = "convolution";  // or "markov"
    bool far_field_mismatch = true;
    int worst_case_tilt_points = 16;
    int worst_case_polar_points = 8;
    bool worst_case_refine = true;  // local search around the worst grid poses
    int per_slot_starts = 16;
    std::string bound_reference = "unconstrained";  // or "per_slot_optimal"
    double bound_t_max = 0.0;                       // 0: use the observed maximum
    std::uint64_t seed = 1;

    EmConstants constants() const { return EmConstants::from_frequency(frequency); }
    double wavelength() const { return constants().wavelength; }
    double head_radius() const { return head_radius_wavelengths * wavelength(); }
    Vec3 head_center() const { return {head_x, head_y, head_z}; }

    TissueParams tissue() const {
        return {thermal_conductivity, density, specific_heat,
                perfusion_from_ml_per_min_kg(blood_perfusion_ml_per_min_kg), transmission_coeff};
    }

    ControlConfig control() const { return {v_param, temp_threshold, p_max, pd_limit, 1e-10}; }

    void validate() const {
        auto require = [](bool ok, const char* key, const char* msg) {
            if (!ok) throw ConfigError(key, 0, std::string(key) + ": " + msg);
        };
        require(is_scheme(scheme), "scheme",
                "must be one of lyapunov, worst_case, adaptive_backoff, per_slot_optimal, unconstrained");
        require(frequency > 0.0, "frequency", "must be positive");
        require(n_tx >= 1, "n_tx", "must be at least 1");
        require(n_rx >= 1, "n_rx", "must be at least 1");
        require(tx_spacing_wavelengths > 0.0, "tx_spacing_wavelengths", "must be positive");
        require(rx_spacing_wavelengths > 0.0, "rx_spacing_wavelengths", "must be positive");
        require(wire_radius_wavelengths > 0.0 && wire_radius_wavelengths < 0.05, "wire_radius_wavelengths",
                "must lie in (0, 0.05)");
        require(bs_height > 0.0, "bs_height", "must be positive");
        require(head_radius_wavelengths > 0.0, "head_radius_wavelengths", "must be positive");
        require(n_sampling_points >= 1, "n_sampling_points", "must be at least 1");
        require(d_min > 0.0, "d_min", "must be positive");
        require(d_min <= d_max, "d_max", "must not be smaller than d_min");
        require(d_ref > 0.0, "d_ref", "must be positive");
        const double half_span = 0.5 * (n_tx - 1) * tx_spacing_wavelengths * wavelength() + 0.25 * wavelength();
        require(d_min > head_radius() + half_span, "d_min", "UE array would intersect the head");
        require(d_ref > head_radius() + half_span, "d_ref", "UE array would intersect the head");
        require(tilt_min_deg <= tilt_max_deg, "tilt_max_deg", "must not be smaller than tilt_min_deg");
        require(polar_min_deg <= polar_max_deg, "polar_max_deg", "must not be smaller than polar_min_deg");
        require(dt > 0.0, "dt", "must be positive");
        require(n_slots >= 1, "n_slots", "must be at least 1");
        require(p_max > 0.0, "p_max", "must be positive");
        require(noise_variance > 0.0, "noise_variance", "must be positive");
        require(temp_threshold > 0.0, "temp_threshold", "must be positive");
        require(pd_limit > 0.0, "pd_limit", "must be positive");
        require(v_param >= 0.0, "v_param", "must be non-negative");
        require(antenna_factor >= 0.0, "antenna_factor", "must be non-negative");
        require(thermal_conductivity > 0.0, "thermal_conductivity", "must be positive");
        require(density > 0.0, "density", "must be positive");
        require(specific_heat > 0.0, "specific_heat", "must be positive");
        require(blood_perfusion_ml_per_min_kg > 0.0, "blood_perfusion_ml_per_min_kg", "must be positive");
        require(transmission_coeff > 0.0 && transmission_coeff <= 1.0, "transmission_coeff", "must lie in (0, 1]");
        require(kernel_eps > 0.0 && kernel_eps < 1.0, "kernel_eps", "must lie in (0, 1)");
        require(thermal_mode == "convolution" || thermal_mode == "markov", "thermal_mode",
                "must be convolution or markov");
        require(worst_case_tilt_points >= 1, "worst_case_tilt_points", "must be at least 1");
        require(worst_case_polar_points >= 1, "worst_case_polar_points", "must be at least 1");
        require(per_slot_starts >= 1, "per_slot_starts", "must be at least 1");
        require(bound_reference == "unconstrained" || bound_reference == "per_slot_optimal", "bound_reference",
                "must be unconstrained or per_slot_optimal");
        require(bound_t_max >= 0.0, "bound_t_max", "must be non-negative");
    }
};

// ---- randomness ---------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Small counter-based stream: every (seed, slot) pair gets its own sequence, so a
/// slot's pose never depends on how many draws earlier slots consumed.
class SlotRng {
public:
    SlotRng(std::uint64_t seed, std::uint64_t slot) : state_(splitmix64(seed ^ splitmix64(slot + 0x51ed27))) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
    std::uint64_t state_;
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// UE pose for one slot: area-uniform in the annulus around the head center (same
/// height), uniform tilt, polar angle uniform about polar_center_deg.
inline UePose sample_ue_pose(const ScenarioConfig& cfg, long slot) {
    SlotRng rng(cfg.seed, static_cast<std::uint64_t>(slot));
    const double r2 = rng.uniform(cfg.d_min * cfg.d_min, cfg.d_max * cfg.d_max);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    UePose pose;
    const double r = std::sqrt(r2);
    pose.center = cfg.head_center() + Vec3(r * std::cos(phi), r * std::sin(phi), 0.0);
    pose.tilt_angle = deg2rad(rng.uniform(cfg.tilt_min_deg, cfg.tilt_max_deg));
    pose.polar_angle = deg2rad(cfg.polar_center_deg + rng.uniform(cfg.polar_min_deg, cfg.polar_max_deg));
    pose.n_elements = cfg.n_tx;
    pose.spacing = cfg.tx_spacing_wavelengths * cfg.wavelength();
    return pose;
}

// ---- per-run static state -----------------------------------------------------

/// Everything that does not change across slots.
struct Scenario {
    ScenarioConfig cfg;
    EmConstants consts;
    BsGeometry bs;
    std::vector<Vec3> rx_positions;
    HeadModel head;
    ReceiverSpec rx;
    std::shared_ptr<const ImpedanceMatrix> z;
    double v0 = 0.0;
    ThermalKernel kernel;

    explicit Scenario(const ScenarioConfig& c) : cfg(c) {
        cfg.validate();
        consts = cfg.constants();
        bs = {cfg.bs_height, cfg.n_rx, cfg.rx_spacing_wavelengths * consts.wavelength};
        rx_positions = rx_element_positions(bs);
        head = head_sampling_points(cfg.head_center(), cfg.head_radius(), cfg.n_sampling_points);
        rx.antenna_factor = cfg.antenna_factor;
        // Parallel, rigidly spaced elements: Z only depends on spacing and length.
        UePose ref;
        ref.center = Vec3::Zero();
        ref.n_elements = cfg.n_tx;
        ref.spacing = cfg.tx_spacing_wavelengths * consts.wavelength;
        DipoleSpec spec = dipole_spec(orientation_vector(ref));
        z = std::make_shared<const ImpedanceMatrix>(
            impedance_matrix(dipole_elements(tx_element_positions(ref), spec), consts));
        v0 = power_normalization(*z);
        kernel = kernel_coefficients(cfg.tissue(), cfg.dt, cfg.kernel_eps);
    }

    DipoleSpec dipole_spec(const Vec3& orientation) const {
        DipoleSpec s = DipoleSpec::half_wave(consts, orientation);
        s.wire_radius = cfg.wire_radius_wavelengths * consts.wavelength;
        return s;
    }

    TxArrayState tx_state(const UePose& pose) const {
        return {tx_element_positions(pose), dipole_spec(orientation_vector(pose)), z, v0, consts};
    }

    ExposureSnapshot snapshot(const UePose& pose, long slot = 0) const {
        const TxArrayState tx = tx_state(pose);
        return {channel_matrix(rx_positions, rx, tx, cfg.far_field_mismatch, slot).h,
                exposure_manifold(head, tx, slot)};
    }
};

/// Poses at distance d_min facing each sampling point, over a uniform tilt x polar grid.
inline std::vector<UePose> worst_case_grid(const ScenarioConfig& cfg, int tilt_points, int polar_points,
                                           int azimuth_points) {
    auto lin = [](double a, double b, int n, int i) { return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1); };
    std::vector<UePose> grid;
    grid.reserve(static_cast<std::size_t>(tilt_points) * polar_points * azimuth_points);
    const double spacing = cfg.tx_spacing_wavelengths * cfg.wavelength();
    for (int a = 0; a < azimuth_points; ++a) {
        const double phi = 2.0 * std::numbers::pi * a / azimuth_points;
        const Vec3 center = cfg.head_center() + cfg.d_min * Vec3(std::cos(phi), std::sin(phi), 0.0);
        for (int i = 0; i < tilt_points; ++i) {
            for (int j = 0; j < polar_points; ++j) {
                UePose p;
                p.center = center;
                p.tilt_angle = deg2rad(lin(cfg.tilt_min_deg, cfg.tilt_max_deg, tilt_points, i));
                p.polar_angle =
                    deg2rad(cfg.polar_center_deg + lin(cfg.polar_min_deg, cfg.polar_max_deg, polar_points, j));
                p.n_elements = cfg.n_tx;
                p.spacing = spacing;
                grid.push_back(p);
            }
        }
    }
    return grid;
}

inline double worst_case_power(const Scenario& sc, const std::vector<UePose>& grid) {
    const std::function<ExposureSnapshot(const UePose&)> snap = [&](const UePose& p) { return sc.snapshot(p); };
    return worst_case_backoff_power(grid, snap, sc.consts.eta, sc.cfg.control());
}

/// Lowers a grid result by pattern search over (tilt, polar), started from the
/// `per_azimuth` lowest grid poses of every azimuth block and kept inside the
/// configured angle ranges. The back-off power is not smooth in the angles, so
/// the grid alone can miss narrow minima.
inline double refine_worst_case_power(const Scenario& sc, const std::vector<UePose>& grid, int per_azimuth = 2) {
    const ScenarioConfig& cfg = sc.cfg;
    const ControlConfig ctl = cfg.control();
    auto power_at = [&](const UePose& p) {
        const ExposureSnapshot s = sc.snapshot(p);
        return backoff_power(unconstrained_direction(s.h), s.manifold, sc.consts.eta, ctl);
    };
    const std::size_t block = static_cast<std::size_t>(cfg.worst_case_tilt_points) * cfg.worst_case_polar_points;
    if (grid.empty() || block == 0 || grid.size() % block != 0) {
        throw DomainError("refinement expects the azimuth-major grid from worst_case_grid");
    }
    std::vector<std::pair<double, std::size_t>> starts;
    double best = cfg.p_max;
    for (std::size_t b0 = 0; b0 < grid.size(); b0 += block) {
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = b0; i < b0 + block; ++i) ranked.emplace_back(power_at(grid[i]), i);
        const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(per_azimuth, 1)), block);
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(keep), ranked.end());
        starts.insert(starts.end(), ranked.begin(), ranked.begin() + static_cast<long>(keep));
        best = std::min(best, ranked.front().first);
    }

    const double t_lo = deg2rad(cfg.tilt_min_deg), t_hi = deg2rad(cfg.tilt_max_deg);
    const double p_lo = deg2rad(cfg.polar_center_deg + cfg.polar_min_deg);
    const double p_hi = deg2rad(cfg.polar_center_deg + cfg.polar_max_deg);
    const double t_step0 = (t_hi - t_lo) / std::max(cfg.worst_case_tilt_points - 1, 1);
    const double p_step0 = (p_hi - p_lo) / std::max(cfg.worst_case_polar_points - 1, 1);
    for (const auto& [val0, idx] : starts) {
        UePose cur = grid[idx];
        double val = val0;
        for (double scale = 0.5; scale * std::max(t_step0, p_step0) > 1e-6; scale *= 0.5) {
            for (bool moved = true; moved;) {
                moved = false;
                for (auto [dt, dp] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}, {1.0, 1.0},
                                      {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}}) {
                    UePose trial = cur;
                    trial.tilt_angle = std::clamp(cur.tilt_angle + dt * scale * t_step0, t_lo, t_hi);
                    trial.polar_angle = std::clamp(cur.polar_angle + dp * scale * p_step0, p_lo, p_hi);
                    const double v = power_at(trial);
                    if (v < val) {
                        val = v;
                        cur = trial;
                        moved = true;
                    }
                }
            }
        }
        best = std::min(best, val);
    }
    return best;
}

inline double worst_case_power(const Scenario& sc) {
    const auto grid = worst_case_grid(sc.cfg, sc.cfg.worst_case_tilt_points, sc.cfg.worst_case_polar_points,
                                      sc.cfg.n_sampling_points);
    return sc.cfg.worst_case_refine ? refine_worst_case_power(sc, grid) : worst_case_power(sc, grid);
}

// ---- trace --------------------------------------------------------------------

struct SlotRecord {
    long slot = 0;  // 1-based
    UePose pose;
    CVec w;
    double power = 0.0;           // P(w), W
    double received_power = 0.0;  // ||Hw||^2
    double reference_power = 0.0; // bound reference for this slot
    Snr snr;
    Eigen::VectorXd pd;
    Eigen::VectorXd temps;
    Eigen::VectorXd queues;  // after this slot's update
    double lambda_max = 0.0;
    bool silent = false;
};

struct SimulationSummary {
    long n_slots = 0;
    double avg_snr_linear = 0.0;
    double avg_snr_db = 0.0;
    std::vector<std::pair<double, double>> snr_db_quantiles;  // (probability, dB)
    double avg_received_power = 0.0;
    double avg_transmit_power = 0.0;
    double avg_queue = 0.0;
    double final_avg_temperature = 0.0;
    double max_temperature = 0.0;
    double max_avg_temperature = 0.0;
    double silent_fraction = 0.0;
    double avg_pd = 0.0;
    double max_pd = 0.0;
    double max_final_queue_ratio = 0.0;  // max_m Q_m[N+1] / N
    double min_queue_bound_slack = 0.0;       // min_m Q_m[N+1]/N - (mean_n T_m[n] - T_th)
    double reference_power = 0.0;        // G_ref
    double bound_b = 0.0;
    double bound_t_max = 0.0;
    bool bound_t_max_violated = false;
    double bound_gap = 0.0;
    std::vector<double> avg_temperature_series;
};

struct SimulationTrace {
    ScenarioConfig cfg;
    std::vector<SlotRecord> slots;
    double worst_case_power = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
    std::string thermal_warning;
};

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw DomainError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double f = pos - static_cast<double>(lo);
    if (f == 0.0 || v[lo] == v[hi]) return v[lo];
    return v[lo] + f * (v[hi] - v[lo]);
}

inline SimulationSummary summarize(const SimulationTrace& trace) {
    if (trace.slots.empty()) throw DomainError("cannot summarize an empty trace");
    SimulationSummary s;
    const auto n = static_cast<double>(trace.slots.size());
    s.n_slots = static_cast<long>(trace.slots.size());
    const int m = static_cast<int>(trace.slots.front().temps.size());
    Eigen::VectorXd temp_sum = Eigen::VectorXd::Zero(m);
    std::vector<double> snr_db;
    snr_db.reserve(trace.slots.size());
    double pd_sum = 0.0, q_sum = 0.0, silent = 0.0;
    for (const auto& r : trace.slots) {
        s.avg_snr_linear += r.snr.linear;
        s.avg_received_power += r.received_power;
        s.avg_transmit_power += r.power;
        s.reference_power += r.reference_power;
        snr_db.push_back(r.snr.db);
        temp_sum += r.temps;
        q_sum += r.queues.sum();
        pd_sum += r.pd.sum();
        s.max_pd = std::max(s.max_pd, r.pd.maxCoeff());
        s.max_temperature = std::max(s.max_temperature, r.temps.maxCoeff());
        const double avg_t = r.temps.mean();
        s.avg_temperature_series.push_back(avg_t);
        s.max_avg_temperature = std::max(s.max_avg_temperature, avg_t);
        silent += r.silent ? 1.0 : 0.0;
    }
    s.avg_snr_linear /= n;
    s.avg_snr_db = 10.0 * std::log10(s.avg_snr_linear);
    for (double p : {0.01, 0.02, 0.10, 0.50, 0.90}) s.snr_db_quantiles.emplace_back(p, quantile(snr_db, p));
    s.avg_received_power /= n;
    s.avg_transmit_power /= n;
    s.reference_power /= n;
    s.avg_queue = q_sum / (n * m);
    s.avg_pd = pd_sum / (n * m);
    s.final_avg_temperature = trace.slots.back().temps.mean();
    s.silent_fraction = silent / n;

    const Eigen::VectorXd& q_final = trace.slots.back().queues;
    const Eigen::VectorXd slack =
        q_final / n - (temp_sum / n - Eigen::VectorXd::Constant(m, trace.cfg.temp_threshold));
    s.max_final_queue_ratio = q_final.maxCoeff() / n;
    s.min_queue_bound_slack = slack.minCoeff();

    s.bound_t_max = trace.cfg.bound_t_max > 0.0 ? trace.cfg.bound_t_max : s.max_temperature;
    s.bound_t_max_violated = s.max_temperature > s.bound_t_max;
    const BoundParams bp = make_bound_params(m, s.bound_t_max, trace.cfg.temp_threshold);
    s.bound_b = bp.b_const;
    s.bound_gap = bound_gap(s.avg_received_power, s.reference_power, bp, trace.cfg.v_param);
    return s;
}

// ---- main loop ----------------------------------------------------------------

/// Pose source for a run: the random annulus by default, or a caller-supplied sequence.
using PoseSampler = std::function<UePose(const ScenarioConfig&, long)>;

inline SimulationTrace run_simulation(const ScenarioConfig& cfg_in, const PoseSampler& sampler = sample_ue_pose) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario sc(cfg_in);
    const ScenarioConfig& cfg = sc.cfg;
    const Scheme scheme = parse_scheme(cfg.scheme);
    const ControlConfig ctl = cfg.control();
    const double eta = sc.consts.eta;
    const int m = cfg.n_sampling_points;

    SimulationTrace trace;
    trace.cfg = cfg;
    trace.thermal_warning = thermal_validity_warning(cfg.n_slots * cfg.dt);
    trace.slots.reserve(static_cast<std::size_t>(cfg.n_slots));
    if (scheme == Scheme::worst_case) trace.worst_case_power = worst_case_power(sc);

    const bool markov = cfg.thermal_mode == "markov";
    ThermalState conv(sc.kernel, markov ? 0 : m);
    MarkovThermalState mk(sc.kernel, markov ? m : 0);
    VirtualQueues q(m);
    const bool per_slot_reference = cfg.bound_reference == "per_slot_optimal";

    for (long n = 1; n <= cfg.n_slots; ++n) {
        SlotRecord rec;
        rec.slot = n;
        rec.pose = sampler(cfg, n);
        const ExposureSnapshot snap = sc.snapshot(rec.pose, n);
        const CMat& h = snap.h;

        const CMat a = decision_matrix(h, snap.manifold, q, sc.kernel, ctl, eta);
        const BeamDecision lyap = lyapunov_beamformer(a, cfg.p_max);
        rec.lambda_max = lyap.lambda_max;

        const CVec u = unconstrained_direction(h);
        switch (scheme) {
            case Scheme::lyapunov: rec.w = lyap.w; break;
            case Scheme::unconstrained: rec.w = std::sqrt(cfg.p_max) * u; break;
            case Scheme::adaptive_backoff: rec.w = adaptive_backoff_beamformer(h, snap.manifold, eta, ctl); break;
            case Scheme::worst_case: rec.w = std::sqrt(trace.worst_case_power) * u; break;
            case Scheme::per_slot_optimal: {
                PerSlotOptions opt;
                opt.starts = cfg.per_slot_starts;
                opt.seed = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(n));
                std::vector<CVec> extra;
                if (!lyap.silent) extra.push_back(lyap.w);
                rec.w = per_slot_optimal_beamformer(h, snap.manifold, eta, ctl, opt, extra);
                break;
            }
        }
        rec.silent = rec.w.squaredNorm() == 0.0;
        rec.power = transmit_power(rec.w, *sc.z, sc.v0);
        rec.received_power = (h * rec.w).squaredNorm();
        rec.snr = received_snr(h, rec.w, cfg.noise_variance);
        if (per_slot_reference) {
            PerSlotOptions opt;
            opt.starts = cfg.per_slot_starts;
            opt.seed = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(n));
            rec.reference_power = (h * per_slot_optimal_beamformer(h, snap.manifold, eta, ctl, opt)).squaredNorm();
        } else {
            rec.reference_power = cfg.p_max * (h * u).squaredNorm();
        }
        rec.pd = incident_pd(snap.manifold, rec.w, eta);
        rec.temps = markov ? mk.step(rec.pd) : conv.step(rec.pd);
        q = queue_update(q, rec.temps, cfg.temp_threshold);
        rec.queues = q.q;
        trace.slots.push_back(std::move(rec));
    }
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

/// Average incident PD over the sampling points with equal-weight drive at P_max,
/// UE at head center + (0, d, 0) with the given angles.
inline double reference_pd(const Scenario& sc, double d, double tilt, double polar) {
    UePose p;
    p.center = sc.cfg.head_center() + Vec3(0.0, d, 0.0);
    p.tilt_angle = tilt;
    p.polar_angle = polar;
    p.n_elements = sc.cfg.n_tx;
    p.spacing = sc.cfg.tx_spacing_wavelengths * sc.consts.wavelength;
    const ExposureManifold man = exposure_manifold(sc.head, sc.tx_state(p));
    const CVec w = CVec::Constant(sc.cfg.n_tx, cplx(std::sqrt(sc.cfg.p_max / sc.cfg.n_tx), 0.0));
    return incident_pd(man, w, sc.consts.eta).mean();
}

}  // namespace expobeam
