#include <bbm/harness/criteria.hpp>

#include <bbm/analytic.hpp>
#include <bbm/error.hpp>
#include <bbm/estimators.hpp>
#include <bbm/harness/runner.hpp>
#include <bbm/observables.hpp>
#include <bbm/replicates.hpp>
#include <bbm/rng.hpp>
#include <bbm/stats.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>

namespace bbm::harness {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned tolerances.
constexpr double kGofLevel = 1e-3;         // chi-square / KS p-value floor
constexpr double kMeanRelTol = 0.01;       // mean N(1) vs e
constexpr double kSeBand = 3.0;            // MC agreement, combined standard errors
constexpr double kAnalyticTol = 1e-12;     // Gaussian sandwich
constexpr double kBigginsTol = 0.2;        // mean log Z / k vs 1 - a^2/2
constexpr double kSlopeLo = 1.0;           // T(y) and two-population exponent window
constexpr double kSlopeHi = 1.9;

// Replicate counts at scale 1.
constexpr std::size_t kGeomRuns = 100000;
constexpr std::size_t kSplitRuns = 100000;
constexpr std::size_t kManyToOneRuns = 100000;
constexpr std::size_t kLeftTailRuns = 1000000;
constexpr std::size_t kCohortRuns = 200;
constexpr std::size_t kCrossingRuns = 200;
constexpr std::size_t kLeadRuns = 200;
constexpr std::size_t kPairSumRuns = 1000000;

// Run settings for the path observables. The front window keeps horizon-20
// populations affordable; lead tracking cannot prune and uses a budget.
constexpr double kFrontDt = 1e-3;
constexpr double kFrontPrune = 4.0;
constexpr double kLeadDt = 0.01;
constexpr std::size_t kLeadBudget = 100000;

std::size_t scaled(std::size_t full, std::size_t floor, const CriteriaOptions& o) {
    return std::max(floor, static_cast<std::size_t>(std::llround(static_cast<double>(full) * o.scale)));
}

SimConfig sim(std::uint64_t seed, double horizon, double dt, std::size_t budget = std::size_t{1} << 22) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.horizon = horizon;
    cfg.dt = dt;
    cfg.max_particles = budget;
    return cfg;
}

ReplicateOptions rep(std::uint64_t seed, std::size_t n, const CriteriaOptions& o) {
    ReplicateOptions r;
    r.seed = seed;
    r.replicates = n;
    r.threads = o.threads;
    return r;
}

CriterionResult geometric_law(const CriteriaOptions& o) {
    const std::size_t n = scaled(kGeomRuns, 2000, o);
    const auto sizes = run_replicates(n, o.threads, [](std::size_t i) {
        Population pop(sim(mix64(0xC1, i), 1.0, 0.5));
        pop.advance_to(1.0);
        return pop.size();
    });
    const std::size_t top = *std::max_element(sizes.begin(), sizes.end());
    std::vector<double> observed(top, 0.0), expected(top, 0.0);
    stats::RunningStats mean;
    for (std::size_t k : sizes) {
        observed[k - 1] += 1.0;
        mean.push(static_cast<double>(k));
    }
    for (std::size_t k = 1; k < top; ++k) expected[k - 1] = static_cast<double>(n) * analytic::population_pmf(1.0, k);
    expected[top - 1] = static_cast<double>(n) * std::pow(-std::expm1(-1.0), static_cast<double>(top - 1));
    const auto chi = stats::chi_square_test(observed, expected);
    const double e = std::numbers::e;
    const bool mean_ok = std::abs(mean.mean() - e) <= kMeanRelTol * e;
    return {1, "geometric population law at t=1", chi.p_value > kGofLevel && mean_ok,
            fmt::format("n={} chi2={:.3f} p={:.4f} mean N={:.5f} (e={:.5f})", n, chi.statistic, chi.p_value,
                        mean.mean(), e)};
}

CriterionResult split_law(const CriteriaOptions& o) {
    const std::size_t n = scaled(kSplitRuns, 2000, o);
    const auto samples =
        run_replicates(n, o.threads, [](std::size_t i) { return sample_split_time(sim(mix64(0xC2, i), 10.0, 0.5), 3); });
    std::vector<double> times;
    bool alive_ok = true;
    for (const auto& s : samples) {
        times.push_back(s.time);
        alive_ok = alive_ok && s.alive == 4;
    }
    const auto ks = stats::ks_test(times, [](double s) { return s <= 0 ? 0.0 : std::pow(-std::expm1(-s), 3.0); });
    return {2, "third split time law, M+1 alive at the split", ks.p_value > kGofLevel && alive_ok,
            fmt::format("n={} D={:.5f} p={:.4f} alive==4 in all: {}", n, ks.statistic, ks.p_value, alive_ok)};
}

CriterionResult many_to_one(const CriteriaOptions& o) {
    const std::size_t n = scaled(kManyToOneRuns, 2000, o);
    const double t = 2.0;
    struct Case {
        const char* name;
        PathFunctional f;
    };
    const Case cases[] = {
        {"1", [](std::span<const double>, double) { return 1.0; }},
        {"1{B_t>=0}", [](std::span<const double> p, double) { return p.back() >= 0.0 ? 1.0 : 0.0; }},
        {"exp(sqrt2 B_t)", [](std::span<const double> p, double) { return std::exp(kSqrt2 * p.back()); }},
    };
    bool ok = true;
    std::string detail = fmt::format("n={} t=2", n);
    std::uint64_t seed = 0xC3;
    for (const auto& c : cases) {
        const auto check = many_to_one_check(c.f, t, 0.1, rep(seed++, n, o));
        const double z = (check.lhs.mean - check.rhs.mean) / std::hypot(check.lhs.std_error, check.rhs.std_error);
        const bool agree = agree_within(check.lhs, check.rhs, kSeBand);
        ok = ok && agree;
        detail += fmt::format("; F={} lhs={:.4f} rhs={:.4f} z={:+.2f}", c.name, check.lhs.mean, check.rhs.mean,
                              std::isfinite(z) ? z : 0.0);
        if (std::string(c.name) == "1") {
            const bool exact = check.rhs.mean == std::exp(t);
            ok = ok && exact;
            detail += exact ? " (rhs exactly e^2)" : " (rhs not exactly e^2)";
        }
    }
    return {3, "many-to-one identity", ok, detail};
}

CriterionResult gauss_sandwich(const CriteriaOptions&) {
    std::size_t checked = 0, bad = 0;
    double worst = -kInf;
    for (double s : {1.0, 4.0, 9.0}) {
        for (double r : {1.5, 2.0, 3.0, 5.0}) {
            const double a = r * std::sqrt(s);
            const auto b = analytic::gauss_tail_bounds(s, a);
            const double exact = analytic::gauss_tail(s, a);
            ++checked;
            worst = std::max({worst, b.lower - exact, exact - b.upper});
            if (b.lower > exact + kAnalyticTol || exact > b.upper + kAnalyticTol) ++bad;
        }
    }
    return {4, "Gaussian tail sandwich", bad == 0,
            fmt::format("{} grid points, {} violations, worst excess {:.3g}", checked, bad, worst)};
}

CriterionResult left_tail(const CriteriaOptions& o) {
    const std::size_t n = scaled(kLeftTailRuns, 10000, o);
    const auto report = left_tail_estimate(4.0, kSqrt2, rep(0xC5, n, o));
    const bool under = report.left.mean <= report.bound + kSeBand * report.left.std_error;
    const bool sym = agree_within(report.left, report.right, kSeBand);
    return {5, "left-tail bound and L/R symmetry", under && sym,
            fmt::format("n={} P[L<=-mu s]={:.3e}+-{:.1e} P[R>=mu s]={:.3e}+-{:.1e} bound={:.4e}", n, report.left.mean,
                        report.left.std_error, report.right.mean, report.right.std_error, report.bound)};
}

CriterionResult biggins(const CriteriaOptions& o) {
    const std::size_t n = scaled(kCohortRuns, 50, o);
    const double k = 8.0, a = 0.5;
    const auto counts = run_replicates(n, o.threads, [&](std::size_t i) {
        Population pop(sim(mix64(0xC6, i), k, 1.0));
        pop.advance_to(k);
        return cohort_count(pop, a).count;
    });
    // log 0 is undefined: empty cohorts are counted and left out of the mean.
    stats::RunningStats rate, z;
    std::size_t empty = 0;
    for (std::size_t c : counts) {
        z.push(static_cast<double>(c));
        if (c == 0) {
            ++empty;
            continue;
        }
        rate.push(std::log(static_cast<double>(c)) / k);
    }
    const double target = analytic::cohort_growth_rate(a);
    const double mean_z = std::exp(k) * 0.5 * std::erfc(a * std::sqrt(k) / kSqrt2);
    return {6, "cohort growth rate at k=8, a=0.5", std::abs(rate.mean() - target) <= kBigginsTol,
            fmt::format("n={} mean log Z/k={:.4f} target {:.4f}+-{} (empty cohorts: {}); mean Z={:.1f} vs exact "
                        "{:.1f}; log(E Z)/k={:.4f}",
                        n, rate.mean(), target, kBigginsTol, empty, z.mean(), mean_z, std::log(mean_z) / k)};
}

std::string fraction_list(const FitReport& report) {
    std::string s;
    for (const auto& [scale, f] : report.censored_fraction) s += fmt::format("{}{}:{:.2f}", s.empty() ? "" : " ", scale, f);
    return s;
}

std::string medians_all(const std::vector<FitPoint>& pts) {
    // Median with censored values at +inf: a censored majority gives +inf.
    std::map<double, std::vector<double>> by;
    for (const auto& p : pts) by[p.scale].push_back(p.censored ? kInf : p.log_time);
    std::string s;
    for (auto& [scale, v] : by) s += fmt::format("{}{}:{:.3f}", s.empty() ? "" : " ", scale, stats::median(v));
    return s;
}

CriterionResult front_trend(const CriteriaOptions& o) {
    const std::size_t n = scaled(kCrossingRuns, 40, o);
    ExperimentSpec spec;
    spec.kind = Kind::Crossing;
    spec.master_seed = 0xC7;
    spec.replicates = n;
    spec.horizon = 20.0;
    spec.dt = kFrontDt;
    spec.prune_gap = kFrontPrune;
    spec.threads = o.threads;
    spec.ys = {0.5, 1.0, 1.5};
    const auto records = execute(spec);
    const auto report = fit_records(records, "T");
    const double slope = report.fit.slope;
    return {7, "T(y) log-slope trend, y in {0.5,1,1.5}", slope >= kSlopeLo && slope <= kSlopeHi,
            fmt::format("n={} slope={:.3f} ci95=[{:.3f},{:.3f}] window [{},{}] ref sqrt2; censored {}; "
                        "median log T with censored=+inf: {}",
                        n, slope, report.fit.slope_ci95.first, report.fit.slope_ci95.second, kSlopeLo, kSlopeHi,
                        fraction_list(report), medians_all(collect_fit_points(records, "T")))};
}

CriterionResult two_population_trend(const CriteriaOptions& o) {
    const std::size_t n = scaled(kCrossingRuns, 40, o);
    ExperimentSpec spec;
    spec.kind = Kind::TwoBbm;
    spec.master_seed = 0xC8;
    spec.replicates = n;
    spec.horizon = 20.0;
    spec.dt = kFrontDt;
    spec.prune_gap = kFrontPrune;
    spec.threads = o.threads;
    spec.zs = {0.3, 0.6, 0.9};
    const auto records = execute(spec);
    std::size_t ordered = 0;
    for (const auto& r : records) {
        const double a = r.find("lead_time@0.3")->value.value_or(kInf);
        const double b = r.find("lead_time@0.6")->value.value_or(kInf);
        const double c = r.find("lead_time@0.9")->value.value_or(kInf);
        ordered += (a <= b && b <= c);
    }
    const auto report = fit_records(records, "lead_time");
    const double slope = report.fit.slope;
    const bool ok = slope >= kSlopeLo && slope <= kSlopeHi && ordered == records.size();
    return {8, "two-population lead log-slope trend and coupling", ok,
            fmt::format("n={} slope={:.3f} ci95=[{:.3f},{:.3f}] window [{},{}] ref sqrt2; ordered {}/{}; censored {}; "
                        "median log with censored=+inf: {}",
                        n, slope, report.fit.slope_ci95.first, report.fit.slope_ci95.second, kSlopeLo, kSlopeHi,
                        ordered, records.size(), fraction_list(report),
                        medians_all(collect_fit_points(records, "lead_time")))};
}

struct LeadSample {
    std::size_t labels = 0;
    CrossingRecord leftmost;
    CrossingRecord theta;
    bool theta_dominates = true;
    bool led_monotone = true;
};

using LeadStudy = std::map<double, std::vector<LeadSample>>;

const LeadStudy& lead_study(const CriteriaOptions& o) {
    static std::mutex mu;
    static std::optional<std::pair<std::size_t, LeadStudy>> cache;
    const std::size_t n = scaled(kLeadRuns, 40, o);
    std::lock_guard lock(mu);
    if (cache && cache->first == n) return cache->second;

    LeadStudy study;
    for (double s : {0.3, 0.5, 0.8}) {
        study[s] = run_replicates(n, o.threads, [s](std::size_t i) {
            Population pop(sim(mix64(0xC9, i), 25.0, kLeadDt, kLeadBudget));
            advance_along_grid(pop, s);
            auto labeling = assign_labels(pop, s);
            LeadSample out;
            std::size_t last = 0;
            const auto tau = track_lead_times(pop, labeling, [&](const Population&, double, const std::set<LabelId>& led) {
                out.led_monotone = out.led_monotone && led.size() >= last;
                last = led.size();
            });
            out.labels = labeling.label_count();
            out.leftmost = tau.at(labeling.leftmost_label);
            out.theta = cohort_lead_time(tau);
            for (const auto& [label, rec] : tau) out.theta_dominates = out.theta_dominates && out.theta.time >= rec.time;
            out.theta_dominates = out.theta_dominates && out.theta.time >= out.leftmost.time;
            return out;
        });
    }
    cache.emplace(n, std::move(study));
    return cache->second;
}

CriterionResult lead_structure(const CriteriaOptions& o) {
    const auto& study = lead_study(o);
    bool ok = true;
    std::string detail;
    for (const auto& [s, samples] : study) {
        std::size_t uncensored = 0, dominated = 0, monotone = 0;
        for (const auto& x : samples) {
            monotone += x.led_monotone;
            if (x.theta.censored) continue;
            ++uncensored;
            dominated += x.theta_dominates;
        }
        ok = ok && dominated == uncensored && monotone == samples.size();
        detail += fmt::format("{}s={}: theta>=tau {}/{} uncensored, led-set monotone {}/{}", detail.empty() ? "" : "; ",
                              s, dominated, uncensored, monotone, samples.size());
    }
    return {9, "lead-time structure: theta dominates, led set grows", ok, detail};
}

CriterionResult leftmost_direction(const CriteriaOptions& o) {
    const auto& study = lead_study(o);
    std::vector<double> medians;
    std::vector<FitPoint> points;
    std::string detail;
    for (const auto& [s, samples] : study) {
        // Censored values enter at their lower bound.
        std::vector<double> logs, multi;
        std::size_t censored = 0, single = 0;
        for (const auto& x : samples) {
            const double v = std::log(x.leftmost.time);
            logs.push_back(v);
            censored += x.leftmost.censored;
            points.push_back({s, v, 1.0, x.leftmost.censored});
            if (x.labels >= 2) multi.push_back(v);
            else ++single;
        }
        medians.push_back(stats::median(logs));
        detail += fmt::format("{}s={}: median log tau={:.3f} censored {:.3f} N(s)=1 in {:.2f} (given N(s)>=2: {:.3f})",
                              detail.empty() ? "" : "; ", s, medians.back(),
                              static_cast<double>(censored) / samples.size(),
                              static_cast<double>(single) / samples.size(),
                              multi.empty() ? std::nan("") : stats::median(multi));
    }
    bool increasing = true;
    for (std::size_t i = 1; i < medians.size(); ++i) increasing = increasing && medians[i] > medians[i - 1];
    FitOptions fo;
    fo.bootstrap = 200;
    const auto fit = exponent_fit(points, fo);
    detail += fmt::format("; fitted slope {:.3f} (reference 4, report only)", fit.slope);
    return {10, "leftmost-label lead time grows with s", increasing, detail};
}

CriterionResult determinism(const CriteriaOptions&) {
    std::vector<ExperimentSpec> specs(5);
    specs[0].kind = Kind::Simulate;
    specs[0].horizon = 3.0;
    specs[1].kind = Kind::Crossing;
    specs[1].horizon = 6.0;
    specs[1].dt = 0.01;
    specs[1].prune_gap = 4.0;
    specs[1].bridge_refine = true;
    specs[1].ys = {0.5, 1.0};
    specs[2].kind = Kind::Lead;
    specs[2].horizon = 4.0;
    specs[2].dt = 0.01;
    specs[2].snapshot_times = {0.5, 1.0};
    specs[3].kind = Kind::TwoBbm;
    specs[3].horizon = 4.0;
    specs[3].dt = 0.01;
    specs[3].zs = {0.3};
    specs[4].kind = Kind::Cohort;
    specs[4].cohort_time = specs[4].horizon = 4.0;
    specs[4].slopes = {0.5};
    specs[4].deltas = {0.5};
    bool ok = true;
    std::size_t bytes = 0;
    for (auto& spec : specs) {
        spec.master_seed = 0xC11;
        spec.replicates = 4;
        spec.threads = 1;
        const std::string first = to_jsonl(execute(spec));
        const std::string again = to_jsonl(execute(spec));
        spec.threads = 3;
        const std::string threaded = to_jsonl(execute(spec));
        ok = ok && first == again && first == threaded && !first.empty();
        bytes += first.size();
    }
    return {11, "byte-identical JSONL on rerun", ok,
            fmt::format("{} experiment kinds, {} bytes compared, reruns and 3-thread runs", specs.size(), bytes)};
}

CriterionResult pair_sum_identity(const CriteriaOptions& o) {
    const std::size_t n = scaled(kPairSumRuns, 20000, o);
    const auto check = many_to_two_check(1.0, -kInf, kInf, rep(0xC12, n, o));
    const bool ok = std::abs(check.mc.mean - check.quadrature) <= kSeBand * check.mc.std_error;
    return {12, "pair-sum identity at k=1, full window", ok,
            fmt::format("n={} mc={:.4f}+-{:.4f} quadrature={:.6f} z={:+.2f}", n, check.mc.mean, check.mc.std_error,
                        check.quadrature, (check.mc.mean - check.quadrature) / check.mc.std_error)};
}

}  // namespace

CriterionResult run_criterion(int id, const CriteriaOptions& opts) {
    switch (id) {
        case 1: return geometric_law(opts);
        case 2: return split_law(opts);
        case 3: return many_to_one(opts);
        case 4: return gauss_sandwich(opts);
        case 5: return left_tail(opts);
        case 6: return biggins(opts);
        case 7: return front_trend(opts);
        case 8: return two_population_trend(opts);
        case 9: return lead_structure(opts);
        case 10: return leftmost_direction(opts);
        case 11: return determinism(opts);
        case 12: return pair_sum_identity(opts);
    }
    throw DomainError(fmt::format("no criterion {}", id));
}

std::string format_result(const CriterionResult& r) {
    return fmt::format("criterion {:02d} {}  {} | {}", r.id, r.passed ? "PASS" : "FAIL", r.title, r.detail);
}

std::vector<CriterionResult> run_criteria(const CriteriaOptions& opts, std::ostream& out) {
    std::vector<CriterionResult> results;
    for (int id = 1; id <= kCriterionCount; ++id) {
        results.push_back(run_criterion(id, opts));
        out << format_result(results.back()) << std::endl;
    }
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.passed;
    out << fmt::format("{}/{} criteria passed", passed, results.size()) << std::endl;
    return results;
}

}  // namespace bbm::harness
