#include <bbm/harness/records.hpp>
#include <bbm/harness/runner.hpp>
#include <bbm/harness/spec.hpp>
#include <bbm/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

using namespace bbm;
using namespace bbm::harness;

namespace {

ExperimentSpec parse(std::vector<std::string> args) {
    args.insert(args.begin(), "bbm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_flags(static_cast<int>(argv.size()), argv.data());
}

int usage_code(std::vector<std::string> args) {
    try {
        parse(std::move(args));
    } catch (const UsageError& e) {
        return e.code();
    }
    return -1;
}

struct EnvGuard {
    explicit EnvGuard(const char* value) { ::setenv("BBM_SEED", value, 1); }
    ~EnvGuard() { ::unsetenv("BBM_SEED"); }
};

}  // namespace

// --- serialisation ----------------------------------------------------------

TEST(Records, RealsUseSeventeenDigits) {
    nlohmann::ordered_json j;
    j["a"] = 0.1;
    j["b"] = 1.0;
    j["c"] = std::numeric_limits<double>::infinity();
    j["d"] = 3;
    j["e"] = {1e-300, -2.5};
    EXPECT_EQ(dump_json(j), R"({"a":0.10000000000000001,"b":1.0,"c":null,"d":3,"e":[1e-300,-2.5]})");
}

TEST(Records, RoundTrip) {
    ReplicateResult r;
    r.replicate_index = 7;
    r.seed_used = 0xFFFF'FFFF'FFFF'FFFFULL;
    r.config_digest = "abc";
    r.truncated = true;
    r.observables = {{"T@0.5", std::numbers::pi, false}, {"T@1", 20.0, true}, {"log_Z_over_k@0.5", std::nullopt, false}};
    const auto line = to_json_line(r);
    EXPECT_EQ(line.find("wall_time_ms"), std::string::npos);
    const auto back = parse_json_line(line);
    EXPECT_EQ(back.replicate_index, r.replicate_index);
    EXPECT_EQ(back.seed_used, r.seed_used);
    EXPECT_EQ(back.truncated, r.truncated);
    EXPECT_EQ(back.observables, r.observables);
    EXPECT_EQ(to_json_line(back), line);

    r.wall_time_ms = 1.5;
    EXPECT_NE(to_json_line(r, true).find("\"wall_time_ms\":1.5"), std::string::npos);
    EXPECT_THROW(parse_json_line(R"({"replicate_index":0})"), std::runtime_error);
}

// --- specs ------------------------------------------------------------------

TEST(ParseFlags, CrossingExample) {
    const auto spec = parse({"crossing", "--y", "0.5", "--replicates", "100", "--horizon", "20", "--dt", "0.001", "--seed",
                             "42", "--out", "r.jsonl"});
    EXPECT_EQ(spec.kind, Kind::Crossing);
    EXPECT_EQ(spec.ys, std::vector<double>{0.5});
    EXPECT_EQ(spec.replicates, 100u);
    EXPECT_EQ(spec.horizon, 20.0);
    EXPECT_EQ(spec.dt, 0.001);
    EXPECT_EQ(spec.master_seed, 42u);
    EXPECT_EQ(spec.output_path, "r.jsonl");
    EXPECT_EQ(spec.prune_gap, 4.0);
}

TEST(ParseFlags, Errors) {
    EXPECT_EQ(usage_code({"crossing", "--replicates", "3"}), kExitUsage);
    EXPECT_EQ(usage_code({"crossing", "--y", "0.5", "--dt", "0"}), kExitUsage);
    EXPECT_EQ(usage_code({"simulate", "--horizon", "1", "--dt", "2"}), kExitUsage);
    EXPECT_EQ(usage_code({"crossing", "--y", "-1"}), kExitUsage);
    EXPECT_EQ(usage_code({"lead", "--s", "0.5", "--prune-gap", "3"}), kExitUsage);
    EXPECT_EQ(usage_code({"lead", "--s", "30"}), kExitUsage);
    EXPECT_EQ(usage_code({"cohort", "--k", "4"}), kExitUsage);
    EXPECT_EQ(usage_code({}), kExitUsage);
    EXPECT_EQ(usage_code({"bogus"}), kExitUsage);
    EXPECT_EQ(usage_code({"--help"}), kExitOk);
    try {
        parse({"crossing", "--y", "0.5", "--dt", "0"});
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("--dt"), std::string::npos) << e.what();
    }
}

TEST(ParseFlags, SeedPrecedence) {
    {
        EnvGuard env("99");
        EXPECT_EQ(parse({"simulate"}).master_seed, 99u);
        EXPECT_EQ(parse({"simulate", "--seed", "5"}).master_seed, 5u);
    }
    EXPECT_EQ(parse({"simulate"}).master_seed, 1u);
}

TEST(ParseFlags, ConfigFileBetweenFlagsAndDefaults) {
    const auto path = std::filesystem::temp_directory_path() / "bbm_cfg_test.toml";
    std::ofstream(path) << "seed = 17\nreplicates = 9\nhorizon = 6.0\n[crossing]\ny = [0.25, 0.75]\n";
    const auto spec = parse({"--config", path.string(), "crossing", "--replicates", "3"});
    EXPECT_EQ(spec.master_seed, 17u);
    EXPECT_EQ(spec.replicates, 3u);
    EXPECT_EQ(spec.horizon, 6.0);
    EXPECT_EQ(spec.ys, (std::vector<double>{0.25, 0.75}));
    {
        EnvGuard env("99");
        EXPECT_EQ(parse({"--config", path.string(), "crossing"}).master_seed, 17u);
    }
    std::filesystem::remove(path);
}

TEST(Digest, ChangesWithEverySpecField) {
    const auto base = parse({"crossing", "--y", "0.5", "--seed", "3"});
    const auto d = config_digest(base);
    EXPECT_EQ(d.size(), 64u);
    EXPECT_EQ(config_digest(parse({"crossing", "--y", "0.5", "--seed", "3", "--out", "x.jsonl", "--threads", "2"})), d);
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"crossing", "--y", "0.5", "--seed", "4"},
             {"crossing", "--y", "0.6", "--seed", "3"},
             {"crossing", "--y", "0.5", "--seed", "3", "--replicates", "2"},
             {"crossing", "--y", "0.5", "--seed", "3", "--dt", "0.01"},
             {"crossing", "--y", "0.5", "--seed", "3", "--horizon", "10"},
             {"crossing", "--y", "0.5", "--seed", "3", "--prune-gap", "5"},
             {"crossing", "--y", "0.5", "--seed", "3", "--bridge"},
             {"crossing", "--y", "0.5", "--seed", "3", "--max-particles", "1000"},
             {"two-bbm", "--z", "0.5", "--seed", "3"},
         })
        EXPECT_NE(config_digest(parse(args)), d) << args[1] << " " << args.back();
}

// --- execution ----------------------------------------------------------------

TEST(Execute, SeedsOrderAndDigest) {
    auto spec = parse({"crossing", "--y", "0.5,1", "--replicates", "5", "--seed", "11", "--horizon", "5", "--dt", "0.01"});
    const auto records = execute(spec);
    ASSERT_EQ(records.size(), 5u);
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(records[i].replicate_index, i);
        EXPECT_EQ(records[i].seed_used, mix64(11, i));
        EXPECT_EQ(records[i].config_digest, config_digest(spec));
        ASSERT_NE(records[i].find("T@0.5"), nullptr);
        ASSERT_NE(records[i].find("T@1"), nullptr);
        EXPECT_LE(*records[i].find("T@0.5")->value, *records[i].find("T@1")->value);
    }
    spec.threads = 4;
    EXPECT_EQ(to_jsonl(execute(spec)), to_jsonl(records));
}

TEST(Execute, BudgetFlagsTruncation) {
    const auto spec = parse({"simulate", "--replicates", "3", "--horizon", "8", "--max-particles", "4"});
    for (const auto& r : execute(spec)) {
        EXPECT_TRUE(r.truncated);
        EXPECT_LT(*r.find("time_reached")->value, 8.0);
    }
    std::ostringstream out, err;
    EXPECT_EQ(run(spec, out, err), kExitTruncated);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Execute, LeadAndThetaKeys) {
    const auto lead = execute(parse({"lead", "--s", "0.5,1", "--replicates", "2", "--horizon", "4", "--dt", "0.01"}));
    for (const auto& r : lead) {
        for (const char* key : {"labels@0.5", "tau_leftmost@0.5", "theta@1", "leftmost_position@1", "tau@0.5#0"})
            EXPECT_NE(r.find(key), nullptr) << key;
        const double labels = *r.find("labels@1")->value;
        for (int u = 0; u < static_cast<int>(labels); ++u) EXPECT_NE(r.find("tau@1#" + std::to_string(u)), nullptr);
    }
    const auto theta = execute(parse({"theta", "--s", "0.5", "--replicates", "2", "--horizon", "4", "--dt", "0.01"}));
    for (const auto& r : theta) {
        EXPECT_NE(r.find("slowest_position@0.5"), nullptr);
        ASSERT_NE(r.find("slowest_first_branch@0.5"), nullptr);
        EXPECT_GT(*r.find("slowest_first_branch@0.5")->value, 0.5);
        EXPECT_EQ(r.find("tau@0.5#0"), nullptr);
    }
}

TEST(Execute, CohortKeys) {
    const auto records = execute(parse({"cohort", "--k", "3", "--a", "0.5,-10", "--delta", "0.5", "--replicates", "3"}));
    for (const auto& r : records) {
        EXPECT_NE(r.find("N_delta@0.5"), nullptr);
        EXPECT_NE(r.find("log_Z_over_k@0.5"), nullptr);
        EXPECT_GE(*r.find("Z@-10")->value, *r.find("Z@0.5")->value);
    }
}

// --- fits ---------------------------------------------------------------------

TEST(Fit, RecordsToSlope) {
    std::vector<ReplicateResult> records;
    for (int i = 0; i < 5; ++i) {
        ReplicateResult r;
        for (double y : {0.5, 1.0, 1.5})
            r.observables.push_back({scale_key("T", y), std::exp(std::numbers::sqrt2 * y + 0.01 * i), false});
        r.observables.push_back({"T@2", 20.0, true});
        r.observables.push_back({"tau@2#0", 1.0, false});
        records.push_back(r);
    }
    const auto report = fit_records(records, "T");
    EXPECT_NEAR(report.fit.slope, std::numbers::sqrt2, 1e-9);
    EXPECT_EQ(report.fit.censored_excluded, 5u);
    EXPECT_EQ(report.reference, std::numbers::sqrt2);
    ASSERT_EQ(report.censored_fraction.size(), 4u);
    EXPECT_EQ(report.censored_fraction.back().second, 1.0);
    const auto json = nlohmann::json::parse(fit_report_json(report, "T"));
    EXPECT_EQ(json["points"].size(), 3u);
    const auto csv = fit_report_csv(report);
    EXPECT_EQ(csv.rfind("scale,median_log_time,weight,censored_fraction\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
