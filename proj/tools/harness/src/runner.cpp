#include <bbm/harness/runner.hpp>

#include <bbm/error.hpp>
#include <bbm/harness/criteria.hpp>
#include <bbm/observables.hpp>
#include <bbm/replicates.hpp>
#include <bbm/rng.hpp>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>

namespace bbm::harness {

namespace {

using Clock = std::chrono::steady_clock;

Observable crossing_observable(std::string name, const CrossingRecord& rec) {
    return {std::move(name), rec.time, rec.censored};
}

Observable count_observable(std::string name, std::size_t n) {
    return {std::move(name), static_cast<double>(n), false};
}

void run_simulate(const ExperimentSpec& spec, std::uint64_t seed, ReplicateResult& r) {
    Population pop(spec.sim_config(seed));
    try {
        pop.advance_to(spec.horizon);
    } catch (const PopulationBudgetExceeded&) {
        r.truncated = true;
    }
    r.observables.push_back({"time_reached", pop.now(), r.truncated});
    r.observables.push_back(count_observable("population", pop.size()));
    r.observables.push_back(count_observable("branch_events", pop.event_count()));
    r.observables.push_back({"rightmost", pop.rightmost().position, false});
    r.observables.push_back({"leftmost", pop.leftmost().position, false});
}

void run_crossing(const ExperimentSpec& spec, std::uint64_t seed, ReplicateResult& r) {
    Population pop(spec.sim_config(seed));
    const auto recs = track_front_exceedance(pop, spec.ys);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        r.observables.push_back(crossing_observable(scale_key("T", spec.ys[i]), recs[i]));
        r.truncated = r.truncated || recs[i].truncated;
    }
}

void run_two(const ExperimentSpec& spec, std::uint64_t seed, ReplicateResult& r) {
    // The pair shares the replicate seed: streams mix64(seed, 0) and mix64(seed, 1).
    const auto recs = track_two_population_lead(spec.sim_config(mix64(seed, 0)), spec.sim_config(mix64(seed, 1)), spec.zs);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        r.observables.push_back(crossing_observable(scale_key("lead_time", spec.zs[i]), recs[i]));
        r.truncated = r.truncated || recs[i].truncated;
    }
}

void run_lead(const ExperimentSpec& spec, std::uint64_t seed, ReplicateResult& r, bool per_label) {
    // Every snapshot time replays the same realisation: all runs walk the grid.
    for (double s : spec.snapshot_times) {
        Population pop(spec.sim_config(seed));
        try {
            advance_along_grid(pop, s);
        } catch (const PopulationBudgetExceeded&) {
            r.truncated = true;
            r.observables.push_back({scale_key("labels", s), std::nullopt, true});
            r.observables.push_back({scale_key("tau_leftmost", s), std::nullopt, true});
            r.observables.push_back({scale_key("theta", s), std::nullopt, true});
            continue;
        }
        auto labeling = assign_labels(pop, s);
        const auto tau = track_lead_times(pop, labeling);
        const auto theta = cohort_lead_time(tau);
        const auto& left = tau.at(labeling.leftmost_label);
        r.truncated = r.truncated || theta.truncated;

        r.observables.push_back(count_observable(scale_key("labels", s), labeling.label_count()));
        r.observables.push_back(crossing_observable(scale_key("tau_leftmost", s), left));
        r.observables.push_back(crossing_observable(scale_key("theta", s), theta));
        r.observables.push_back({scale_key("leftmost_position", s), labeling.position_at_s[labeling.leftmost_label], false});
        if (per_label) {
            for (const auto& [label, rec] : tau)
                r.observables.push_back(crossing_observable(fmt::format("tau@{}#{}", s, label), rec));
        } else {
            // Where the last label to lead sat at time s.
            const LabelId slow = slowest_label(tau);
            r.observables.push_back({scale_key("slowest_position", s), labeling.position_at_s[slow], false});
            r.observables.push_back({scale_key("slowest_first_branch", s), labeling.first_branch_time[slow], false});
        }
    }
}

void run_cohort(const ExperimentSpec& spec, std::uint64_t seed, ReplicateResult& r) {
    Population pop(spec.sim_config(seed));
    try {
        pop.advance_to(spec.cohort_time);
    } catch (const PopulationBudgetExceeded&) {
        r.truncated = true;
    }
    const double k = spec.cohort_time;
    for (double a : spec.slopes) {
        const auto c = cohort_count(pop, a);
        r.observables.push_back({scale_key("Z", a), static_cast<double>(c.count), r.truncated});
        std::optional<double> rate;
        if (c.count > 0) rate = std::log(static_cast<double>(c.count)) / k;
        r.observables.push_back({scale_key("log_Z_over_k", a), rate, r.truncated});
    }
    for (double d : spec.deltas)
        r.observables.push_back({scale_key("N_delta", d), static_cast<double>(cohort_count_delta(pop, d).count), r.truncated});
}

std::string utc_now() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

std::vector<ReplicateResult> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError(kExitUsage, "--input: cannot open " + path);
    std::vector<ReplicateResult> records;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) records.push_back(parse_json_line(line));
    return records;
}

int write_output(const ExperimentSpec& spec, const std::string& text, std::ostream& out, std::ostream& err) {
    if (spec.output_path.empty()) {
        out << text;
        return kExitOk;
    }
    std::ofstream file(spec.output_path, std::ios::binary);
    if (!file) {
        err << "--out: cannot write " << spec.output_path << '\n';
        return kExitUsage;
    }
    file << text;
    return kExitOk;
}

}  // namespace

std::string scale_key(const std::string& prefix, double scale) {
    return fmt::format("{}@{}", prefix, scale);
}

std::vector<ReplicateResult> execute(const ExperimentSpec& spec) {
    const std::string digest = config_digest(spec);
    auto one = [&](std::size_t i) {
        const auto start = Clock::now();
        ReplicateResult r;
        r.replicate_index = i;
        r.seed_used = mix64(spec.master_seed, i);
        r.config_digest = digest;
        switch (spec.kind) {
            case Kind::Simulate: run_simulate(spec, r.seed_used, r); break;
            case Kind::Crossing: run_crossing(spec, r.seed_used, r); break;
            case Kind::TwoBbm: run_two(spec, r.seed_used, r); break;
            case Kind::Lead: run_lead(spec, r.seed_used, r, true); break;
            case Kind::Theta: run_lead(spec, r.seed_used, r, false); break;
            case Kind::Cohort: run_cohort(spec, r.seed_used, r); break;
            default: throw std::logic_error("not a simulation kind");
        }
        r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        return r;
    };
    return run_replicates(spec.replicates, spec.threads, one);
}

std::string to_jsonl(const std::vector<ReplicateResult>& records, bool timings) {
    std::string out;
    for (const auto& r : records) {
        out += to_json_line(r, timings);
        out += '\n';
    }
    return out;
}

std::vector<FitPoint> collect_fit_points(const std::vector<ReplicateResult>& records, const std::string& prefix) {
    const std::string head = prefix + "@";
    std::vector<FitPoint> points;
    for (const auto& r : records) {
        for (const auto& o : r.observables) {
            if (o.name.rfind(head, 0) != 0 || o.name.find('#') != std::string::npos) continue;
            if (!o.value || !(*o.value > 0.0)) continue;
            points.push_back({std::stod(o.name.substr(head.size())), std::log(*o.value), 1.0, o.censored});
        }
    }
    return points;
}

double reference_slope(const std::string& prefix) {
    constexpr double sqrt2 = std::numbers::sqrt2;
    if (prefix == "T" || prefix == "lead_time") return sqrt2;
    if (prefix == "tau_leftmost") return 4.0;
    if (prefix == "theta") return 2.0 + 2.0 * sqrt2;
    return 0.0;
}

FitReport fit_records(const std::vector<ReplicateResult>& records, const std::string& prefix, const FitOptions& opts) {
    const auto points = collect_fit_points(records, prefix);
    FitReport report;
    report.fit = exponent_fit(points, opts);
    report.reference = reference_slope(prefix);
    std::map<double, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& p : points) {
        auto& [censored, total] = counts[p.scale];
        censored += p.censored;
        ++total;
    }
    for (const auto& [scale, c] : counts)
        report.censored_fraction.emplace_back(scale, static_cast<double>(c.first) / static_cast<double>(c.second));
    return report;
}

std::string fit_report_json(const FitReport& report, const std::string& prefix) {
    nlohmann::ordered_json j;
    j["observable"] = prefix;
    j["slope"] = report.fit.slope;
    j["intercept"] = report.fit.intercept;
    j["slope_ci95"] = {report.fit.slope_ci95.first, report.fit.slope_ci95.second};
    if (report.reference > 0.0) j["reference_slope"] = report.reference;
    else j["reference_slope"] = nullptr;
    j["censored_excluded"] = report.fit.censored_excluded;
    auto& pts = j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : report.fit.points)
        pts.push_back({{"scale", p.scale}, {"median_log_time", p.log_time}, {"weight", p.weight}});
    auto& cf = j["censored_fraction"] = nlohmann::ordered_json::array();
    for (const auto& [scale, f] : report.censored_fraction) cf.push_back({{"scale", scale}, {"fraction", f}});
    return dump_json(j) + "\n";
}

std::string fit_report_csv(const FitReport& report) {
    std::string out = "scale,median_log_time,weight,censored_fraction\n";
    for (const auto& p : report.fit.points) {
        double frac = 0.0;
        for (const auto& [scale, f] : report.censored_fraction)
            if (scale == p.scale) frac = f;
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", p.scale, p.log_time, p.weight, frac);
    }
    return out;
}

int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    try {
        if (spec.kind == Kind::Validate) {
            CriteriaOptions opts;
            opts.scale = spec.validate_scale;
            opts.threads = spec.threads;
            const auto results = run_criteria(opts, out);
            for (const auto& r : results)
                if (!r.passed) return kExitFailedChecks;
            return kExitOk;
        }
        if (spec.kind == Kind::Fit) {
            FitOptions fo;
            fo.include_censored = spec.include_censored;
            fo.bootstrap = spec.bootstrap;
            fo.seed = spec.master_seed;
            const auto report = fit_records(read_records(spec.input_path), spec.observable, fo);
            if (!spec.csv_path.empty()) {
                std::ofstream csv(spec.csv_path, std::ios::binary);
                if (!csv) {
                    err << "--csv: cannot write " << spec.csv_path << '\n';
                    return kExitUsage;
                }
                csv << fit_report_csv(report);
            }
            return write_output(spec, fit_report_json(report, spec.observable), out, err);
        }

        const std::string started = utc_now();
        const auto wall_start = Clock::now();
        const auto records = execute(spec);
        std::size_t truncated = 0;
        for (const auto& r : records) truncated += r.truncated;

        if (const int code = write_output(spec, to_jsonl(records, spec.timings), out, err); code != kExitOk) return code;
        if (!spec.output_path.empty()) {
            nlohmann::ordered_json m;
            m["tool"] = "bbm";
            m["version"] = BBM_TOOL_VERSION;
            m["spec"] = spec.to_json();
            m["config_digest"] = config_digest(spec);
            m["output"] = spec.output_path;
            m["records"] = records.size();
            m["truncated_records"] = truncated;
            m["started_at"] = started;
            m["finished_at"] = utc_now();
            m["wall_time_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - wall_start).count();
            std::ofstream(spec.output_path + ".manifest.json", std::ios::binary) << m.dump(2) << '\n';
        }
        if (truncated > 0) {
            err << truncated << " replicate(s) hit the particle budget; their records are flagged\n";
            return kExitTruncated;
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << e.what() << '\n';
        return e.code();
    } catch (const DegenerateDesign& e) {
        err << "fit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidConfig& e) {
        err << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace bbm::harness
