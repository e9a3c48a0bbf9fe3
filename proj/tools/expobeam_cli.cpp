// expobeam: run scenarios, sweeps and the oracle suite.
//
//   expobeam run <config> [--out DIR] [--seed N]
//   expobeam sweep <manifest> [--jobs K]
//   expobeam validate [--strict]
//
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error.
// EXPOBEAM_OUT sets the default output root (default "out").

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "expobeam/expobeam.hpp"

namespace fs = std::filesystem;
using namespace expobeam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

fs::path output_root() {
    const char* env = std::getenv("EXPOBEAM_OUT");
    return (env && *env) ? fs::path(env) : fs::path("out");
}

void write_outputs(const fs::path& dir, const SimulationTrace& trace, const SimulationSummary& s) {
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "trace.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
        write_trace_csv(csv, trace);
    }
    std::ofstream js(dir / "summary.json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    js << summary_json(trace, s).dump(2) << '\n';
}

void print_config_error(const ConfigError& e) {
    std::cerr << "config error";
    if (!e.key().empty()) std::cerr << " [key " << e.key() << "]";
    std::cerr << ": " << e.what() << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
    ScenarioConfig cfg;
    try {
        cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitConfig;
    }
    const fs::path dir = out.empty() ? output_root() / fs::path(config_path).stem() : fs::path(out);
    const SimulationTrace trace = run_simulation(cfg);
    const SimulationSummary s = summarize(trace);
    write_outputs(dir, trace, s);
    if (!trace.thermal_warning.empty()) std::cerr << "warning: " << trace.thermal_warning << '\n';
    std::printf("%s: %ld slots, avg SNR %.3f dB, final avg temperature %.4f C, max temperature %.4f C, "
                "silent %.1f%%, %.2f s -> %s\n",
                cfg.scheme.c_str(), s.n_slots, s.avg_snr_db, s.final_avg_temperature, s.max_temperature,
                100.0 * s.silent_fraction, trace.wall_seconds, dir.string().c_str());
    return kExitOk;
}

int cmd_sweep(const std::string& manifest_path, int jobs) {
    RunManifest m;
    ScenarioConfig base;
    const fs::path manifest_dir = fs::path(manifest_path).parent_path();
    try {
        std::ifstream in(manifest_path);
        if (!in) throw ConfigError("", 0, "cannot open manifest '" + manifest_path + "'");
        m = parse_manifest(in);
        const fs::path cfg_path = fs::path(m.config_path).is_absolute() ? fs::path(m.config_path)
                                                                       : manifest_dir / m.config_path;
        base = load_config(cfg_path.string());
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitConfig;
    }
    const fs::path root = m.out_dir.empty() ? output_root() / fs::path(manifest_path).stem() : fs::path(m.out_dir);
    if (m.seeds.empty()) m.seeds.push_back(base.seed);

    struct Job {
        std::vector<std::pair<std::string, std::string>> point;
        std::uint64_t seed;
    };
    std::vector<Job> queue;
    for (const auto& pt : sweep_points(m)) {
        for (auto seed : m.seeds) queue.push_back({pt, seed});
    }
    std::vector<std::vector<std::string>> rows(queue.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < queue.size(); i = next++) {
            const Job& job = queue[i];
            char name[32];
            std::snprintf(name, sizeof name, "run_%04zu", i);
            std::vector<std::string> row = {name, std::to_string(job.seed)};
            for (const auto& kv : job.point) row.push_back(kv.second);
            try {
                ScenarioConfig cfg = base;
                for (const auto& [k, v] : job.point) set_config_value(cfg, k, v);
                cfg.seed = job.seed;
                cfg.validate();
                const SimulationTrace trace = run_simulation(cfg);
                const SimulationSummary s = summarize(trace);
                write_outputs(root / name, trace, s);
                row.push_back("ok");
                row.push_back("");
                for (auto& v : sweep_summary_values(cfg, s)) row.push_back(v);
            } catch (const std::exception& e) {
                ++failures;
                row.push_back("failed");
                row.push_back(e.what());
                std::lock_guard lock(log_mutex);
                std::cerr << name << ": " << e.what() << '\n';
            }
            rows[i] = std::move(row);
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(queue.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    fs::create_directories(root);
    std::ofstream csv(root / "sweep.csv", std::ios::binary);
    std::vector<std::string> header = {"run", "seed"};
    for (const auto& axis : m.axes) header.push_back(axis.first);
    header.push_back("status");
    header.push_back("error");
    // A summary column that repeats a sweep axis (e.g. scheme) is dropped.
    std::vector<std::size_t> keep(header.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    for (const auto& c : sweep_summary_columns()) {
        const bool dup = std::any_of(m.axes.begin(), m.axes.end(), [&](const auto& a) { return a.first == c; });
        if (!dup) keep.push_back(header.size());
        header.push_back(c);
    }
    for (std::size_t i = 0; i < keep.size(); ++i) csv << (i ? "," : "") << header[keep[i]];
    csv << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < keep.size(); ++i) {
            csv << (i ? "," : "") << (keep[i] < row.size() ? csv_field(row[keep[i]]) : std::string());
        }
        csv << '\n';
    }
    std::printf("%zu runs, %d failed -> %s\n", queue.size(), failures.load(), (root / "sweep.csv").string().c_str());
    return failures ? kExitRuntime : kExitOk;
}

// Extra checks for --strict: quadrature refinement and a short end-to-end run.
std::vector<CheckResult> strict_checks() {
    std::vector<CheckResult> out;
    out.push_back(detail::timed("quadrature refinement", [] {
        const EmConstants c = EmConstants::from_frequency(30e9);
        DipoleSpec spec = DipoleSpec::half_wave(c);
        spec.wire_radius = c.wavelength / 1000.0;
        double worst = 0.0;
        for (double sep : {0.0, 0.5, 1.0}) {
            const DipoleElement p{spec, Vec3::Zero()};
            const DipoleElement q{spec, Vec3(sep * c.wavelength, 0.0, 0.0)};
            const cplx a = mutual_impedance(p, q, c);
            const cplx b = mutual_impedance(p, q, c, {1e-6, 1 << 18});
            worst = std::max(worst, std::abs(a - b));
        }
        CheckResult r;
        r.pass = worst < 1e-3;
        r.detail = detail::printf_string("max |Z - Z_refined| = %.2e ohm (< 1e-3)", worst);
        return r;
    }));
    out.push_back(detail::timed("short run invariants", [] {
        ScenarioConfig cfg;
        cfg.n_slots = 300;
        const SimulationTrace t = run_simulation(cfg);
        const SimulationSummary s = summarize(t);
        bool feasible = true;
        for (const auto& r : t.slots) feasible = feasible && r.w.squaredNorm() <= cfg.p_max * (1 + 1e-12);
        CheckResult r;
        r.pass = feasible && s.min_queue_bound_slack >= -1e-12;
        r.detail = detail::printf_string("300 slots: power feasible %s, min queue-bound slack %.3e", feasible ? "yes" : "no",
                                         s.min_queue_bound_slack);
        return r;
    }));
    return out;
}

int cmd_validate(bool strict) {
    auto results = run_validation_suite();
    if (strict) {
        for (auto& r : strict_checks()) results.push_back(std::move(r));
    }
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] %-22s %s (%.3f s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
        all = all && r.pass;
    }
    return all ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exposure-aware uplink beamforming simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, manifest_path;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool strict = false;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("config", config_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("manifest", manifest_path, "sweep manifest")->required();
    sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "run the oracle checks");
    validate->add_flag("--strict", strict, "also run refinement and end-to-end checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            return cmd_run(config_path, out_dir, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
        }
        if (*sweep) return cmd_sweep(manifest_path, jobs);
        if (*validate) return cmd_validate(strict);
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
