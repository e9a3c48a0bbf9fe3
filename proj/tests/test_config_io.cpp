#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "expobeam/config.hpp"
#include "expobeam/io.hpp"

using namespace expobeam;

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

int error_line(const std::string& text) {
    try {
        parse_config_string(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(ConfigParse, MinimalAndComments) {
    const auto cfg = parse_config_string("# demo\nscheme = adaptive_backoff\n\n  n_slots=25   # short\nv_param = 1e-4\n");
    EXPECT_EQ(cfg.scheme, "adaptive_backoff");
    EXPECT_EQ(cfg.n_slots, 25);
    EXPECT_EQ(cfg.v_param, 1e-4);
    EXPECT_EQ(cfg.p_max, ScenarioConfig{}.p_max);
}

TEST(ConfigParse, ErrorsNameKeyAndLine) {
    try {
        parse_config_string("scheme = lyapunov\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "n_slots");
        EXPECT_NE(std::string(e.what()).find("n_slots"), std::string::npos);
    }
    EXPECT_EQ(error_line("scheme = lyapunov\nn_slots = 10\nbogus = 3\n"), 3);
    EXPECT_EQ(error_line("scheme = lyapunov\nn_slots = ten\n"), 2);
    EXPECT_EQ(error_line("scheme = lyapunov\nn_slots = 10\nn_slots = 11\n"), 3);
    EXPECT_EQ(error_line("scheme = lyapunov\nthis line has no equals\nn_slots = 1\n"), 2);
    EXPECT_EQ(error_line("scheme = lyapunov\nn_slots = 1\nfar_field_mismatch = maybe\n"), 3);
    EXPECT_EQ(error_line("scheme = lyapunov\nn_slots = 1\nd_exp = 0.5\nd_min = 0.4\n"), 4);
    EXPECT_THROW(parse_config_string("scheme = lyapunov\nn_slots = 1\np_max = 1.5x\n"), ConfigError);
    EXPECT_THROW(parse_config_string("scheme = warp\nn_slots = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_string("scheme = lyapunov\nn_slots = 1\nd_min = 0.3\nd_max = 0.2\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(ConfigParse, ExposureDistanceAlias) {
    const auto cfg = parse_config_string("scheme = lyapunov\nn_slots = 1\nd_exp = 0.5\n");
    EXPECT_EQ(cfg.d_min, 0.5);
    EXPECT_EQ(cfg.d_max, 0.5);
}

TEST(ConfigParse, EchoRoundTrip) {
    ScenarioConfig cfg;
    cfg.v_param = 1.0 / 3.0;
    cfg.seed = 0xfeedfacecafebeefULL;
    cfg.far_field_mismatch = false;
    cfg.scheme = "per_slot_optimal";
    std::string text;
    for (const auto& [k, v] : config_echo(cfg)) text += k + " = " + v + "\n";
    const auto back = parse_config_string(text);
    EXPECT_EQ(config_echo(back), config_echo(cfg));
    EXPECT_EQ(back.v_param, cfg.v_param);
    EXPECT_EQ(back.seed, cfg.seed);
}

TEST(Manifest, ParseAndCartesianProduct) {
    std::istringstream in("config = base.cfg\nout = res\nseeds = 1, 2\nsweep.v_param = 1e-5, 1e-4, 5e-4\nsweep.scheme = lyapunov, unconstrained\n");
    const auto m = parse_manifest(in);
    EXPECT_EQ(m.config_path, "base.cfg");
    EXPECT_EQ(m.out_dir, "res");
    EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{1, 2}));
    const auto pts = sweep_points(m);
    ASSERT_EQ(pts.size(), 6u);
    EXPECT_EQ(pts[0][0], (std::pair<std::string, std::string>{"v_param", "1e-5"}));
    EXPECT_EQ(pts[5][1], (std::pair<std::string, std::string>{"scheme", "unconstrained"}));

    std::istringstream empty_axes("config = a.cfg\n");
    EXPECT_EQ(sweep_points(parse_manifest(empty_axes)).size(), 1u);
    std::istringstream bad_axis("config = a.cfg\nsweep.nope = 1\n");
    EXPECT_THROW(parse_manifest(bad_axis), ConfigError);
    std::istringstream no_config("seeds = 1\n");
    EXPECT_THROW(parse_manifest(no_config), ConfigError);
}

TEST(TraceCsv, SchemaAndRoundTrip) {
    ScenarioConfig cfg;
    cfg.n_slots = 12;
    cfg.n_sampling_points = 3;
    const auto trace = run_simulation(cfg);
    std::ostringstream out;
    write_trace_csv(out, trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    const std::vector<std::string> expect = {"slot", "ue_x", "ue_y", "ue_z", "alpha", "beta", "power_w", "snr_db",
                                             "lambda_max", "silent", "pd_m1", "pd_m2", "pd_m3", "t_m1", "t_m2",
                                             "t_m3", "q_m1", "q_m2", "q_m3", "w_re_1", "w_re_2", "w_re_3",
                                             "w_re_4", "w_im_1", "w_im_2", "w_im_3", "w_im_4"};
    EXPECT_EQ(header, expect);
    int rows = 0;
    while (std::getline(in, line)) {
        const auto f = split(line);
        ASSERT_EQ(f.size(), expect.size());
        const auto& r = trace.slots[rows];
        EXPECT_EQ(std::stol(f[0]), r.slot);
        EXPECT_EQ(std::strtod(f[1].c_str(), nullptr), r.pose.center.x());
        EXPECT_EQ(std::strtod(f[6].c_str(), nullptr), r.power);
        EXPECT_EQ(f[9], r.silent ? "1" : "0");
        EXPECT_EQ(std::strtod(f[13].c_str(), nullptr), r.temps(0));
        EXPECT_EQ(std::strtod(f[20].c_str(), nullptr), r.w(1).real());
        EXPECT_EQ(std::strtod(f[26].c_str(), nullptr), r.w(3).imag());
        ++rows;
    }
    EXPECT_EQ(rows, 12);
}

TEST(SummaryJson, ContainsEchoConversionsAndNotes) {
    ScenarioConfig cfg;
    cfg.n_slots = 5;
    const auto trace = run_simulation(cfg);
    const auto j = summary_json(trace, summarize(trace));
    EXPECT_EQ(j["config"]["scheme"], "lyapunov");
    EXPECT_EQ(j["config"]["n_slots"], "5");
    EXPECT_NEAR(j["unit_conversions"][0]["to"].get<double>(), 1.7667e-6, 1e-10);
    bool penalty_note = false;
    for (const auto& n : j["notes"]) penalty_note = penalty_note || n.get<std::string>().find("c_pen") != std::string::npos;
    EXPECT_TRUE(penalty_note);
    EXPECT_EQ(j["summary"]["n_slots"], 5);
    EXPECT_TRUE(j["summary"]["snr_db_quantiles"].contains("p50"));
    EXPECT_TRUE(j["derived"]["worst_case_power_w"].is_null());
    EXPECT_EQ(j["summary"]["avg_temperature_series"].size(), 5u);
    // Round-trips through text.
    EXPECT_EQ(nlohmann::json::parse(j.dump()), j);
}

TEST(SweepCsv, FieldQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    ScenarioConfig cfg;
    SimulationSummary s;
    s.snr_db_quantiles = {{0.5, 12.5}};
    const auto v = sweep_summary_values(cfg, s);
    ASSERT_EQ(v.size(), sweep_summary_columns().size());
    EXPECT_EQ(v[2], "12.5");
}

TEST(Format, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 123456789.123456789}) {
        EXPECT_EQ(std::strtod(fmt17(x).c_str(), nullptr), x);
    }
}
