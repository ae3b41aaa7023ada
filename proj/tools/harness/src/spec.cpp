#include <bbm/harness/spec.hpp>

#include <bbm/error.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <sstream>

namespace bbm::harness {

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::Simulate: return "simulate";
        case Kind::Crossing: return "crossing";
        case Kind::Lead: return "lead";
        case Kind::Theta: return "theta";
        case Kind::TwoBbm: return "two-bbm";
        case Kind::Cohort: return "cohort";
        case Kind::Validate: return "validate";
        case Kind::Fit: return "fit";
    }
    return "unknown";
}

SimConfig ExperimentSpec::sim_config(std::uint64_t seed) const {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.horizon = horizon;
    cfg.dt = dt;
    cfg.max_particles = max_particles;
    cfg.prune_gap = prune_gap;
    cfg.bridge_refine = bridge_refine;
    return cfg;
}

nlohmann::ordered_json ExperimentSpec::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(kind);
    j["master_seed"] = master_seed;
    j["replicates"] = replicates;
    nlohmann::ordered_json p;
    switch (kind) {
        case Kind::Simulate:
        case Kind::Crossing:
        case Kind::Lead:
        case Kind::Theta:
        case Kind::TwoBbm:
        case Kind::Cohort:
            p["horizon"] = horizon;
            p["dt"] = dt;
            p["max_particles"] = max_particles;
            if (prune_gap) p["prune_gap"] = *prune_gap;
            else p["prune_gap"] = nullptr;
            p["bridge_refine"] = bridge_refine;
            break;
        default: break;
    }
    switch (kind) {
        case Kind::Crossing: p["y"] = ys; break;
        case Kind::TwoBbm: p["z"] = zs; break;
        case Kind::Lead:
        case Kind::Theta: p["s"] = snapshot_times; break;
        case Kind::Cohort:
            p["k"] = cohort_time;
            p["a"] = slopes;
            p["delta"] = deltas;
            break;
        case Kind::Fit:
            p["input"] = input_path;
            p["observable"] = observable;
            p["include_censored"] = include_censored;
            p["bootstrap"] = bootstrap;
            break;
        case Kind::Validate: p["scale"] = validate_scale; break;
        case Kind::Simulate: break;
    }
    j["params"] = std::move(p);
    return j;
}

std::string config_digest(const ExperimentSpec& spec) {
    const std::string text = spec.to_json().dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

namespace {

void check_all(const std::vector<double>& xs, const char* flag, bool allow_zero) {
    for (double x : xs)
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
            throw UsageError(kExitUsage, fmt::format("{}: invalid value {}", flag, x));
}

}  // namespace

ExperimentSpec parse_flags(int argc, const char* const* argv) {
    CLI::App app{"Monte Carlo experiments on binary branching Brownian motion", "bbm"};
    app.set_config("--config", "", "TOML/INI file with flag values; flags given on the command line win");
    app.require_subcommand(1);
    app.fallthrough();

    ExperimentSpec spec;
    std::optional<double> horizon;
    std::optional<double> prune_gap;
    app.add_option("--seed", spec.master_seed, "master seed; replicate i uses mix64(seed, i)")->envname("BBM_SEED");
    app.add_option("--replicates", spec.replicates)->check(CLI::PositiveNumber);
    app.add_option("--horizon", horizon, "absolute simulation horizon")->check(CLI::PositiveNumber);
    app.add_option("--dt", spec.dt, "checkpoint spacing")->check(CLI::PositiveNumber);
    app.add_option("--max-particles", spec.max_particles)->check(CLI::PositiveNumber);
    app.add_option("--threads", spec.threads, "worker threads (0: all cores)");
    app.add_option("--out", spec.output_path, "JSONL output; a .manifest.json is written next to it");
    app.add_option("--prune-gap", prune_gap, "drop particles more than this far behind the leader (0: off)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--bridge", spec.bridge_refine, "Brownian-bridge crossing test between checkpoints");
    app.add_flag("--timings", spec.timings, "include wall_time_ms in records (breaks byte-identical reruns)");

    auto* simulate = app.add_subcommand("simulate", "run populations to the horizon");
    auto* crossing = app.add_subcommand("crossing", "first exceedance times T(y) of the centred front");
    crossing->add_option("--y", spec.ys, "thresholds, coupled on one realisation")->required()->delimiter(',');
    auto* lead = app.add_subcommand("lead", "per-label lead times after snapshot times s");
    lead->add_option("--s", spec.snapshot_times, "snapshot times")->required()->delimiter(',');
    auto* theta = app.add_subcommand("theta", "cohort lead time: the last label to lead");
    theta->add_option("--s", spec.snapshot_times, "snapshot times")->required()->delimiter(',');
    auto* two = app.add_subcommand("two-bbm", "lead times of one BBM over an independent copy");
    two->add_option("--z", spec.zs, "lead thresholds")->required()->delimiter(',');
    auto* cohort = app.add_subcommand("cohort", "counts of particles at or below -a k");
    cohort->add_option("--k", spec.cohort_time, "observation time")->check(CLI::PositiveNumber);
    cohort->add_option("--a", spec.slopes, "slopes a")->delimiter(',');
    cohort->add_option("--delta", spec.deltas, "delta, for a = sqrt2 (1 - delta / 2)")->delimiter(',');
    auto* validate = app.add_subcommand("validate", "run the acceptance checks and print a table");
    validate->add_option("--scale", spec.validate_scale, "fraction of the full replicate counts")
        ->check(CLI::Range(1e-3, 1.0));
    auto* fit = app.add_subcommand("fit", "log-scale exponent fit over crossing/lead/theta/two-bbm output");
    fit->add_option("--input", spec.input_path, "JSONL produced by another subcommand")->required();
    fit->add_option("--observable", spec.observable, "observable prefix, e.g. T, lead_time, tau_leftmost, theta");
    fit->add_option("--csv", spec.csv_path, "also write the per-scale points as CSV");
    fit->add_flag("--include-censored", spec.include_censored, "censored values enter at their lower bound");
    fit->add_option("--bootstrap", spec.bootstrap, "bootstrap resamples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream out, err;
        const int code = app.exit(e, out, err);
        throw UsageError(code == 0 ? kExitOk : kExitUsage, out.str() + err.str());
    }

    if (*simulate) spec.kind = Kind::Simulate;
    else if (*crossing) spec.kind = Kind::Crossing;
    else if (*lead) spec.kind = Kind::Lead;
    else if (*theta) spec.kind = Kind::Theta;
    else if (*two) spec.kind = Kind::TwoBbm;
    else if (*cohort) spec.kind = Kind::Cohort;
    else if (*validate) spec.kind = Kind::Validate;
    else if (*fit) spec.kind = Kind::Fit;

    // Kind defaults: the front-type observables need a window to stay
    // affordable; lead tracking must see the whole population.
    spec.prune_gap = prune_gap;
    switch (spec.kind) {
        case Kind::Crossing:
        case Kind::TwoBbm:
            spec.horizon = horizon.value_or(20.0);
            if (!prune_gap) spec.prune_gap = 4.0;
            break;
        case Kind::Lead:
        case Kind::Theta: spec.horizon = horizon.value_or(25.0); break;
        case Kind::Cohort: spec.horizon = spec.cohort_time; break;
        default: spec.horizon = horizon.value_or(10.0); break;
    }
    if (spec.prune_gap == 0.0) spec.prune_gap.reset();
    if ((spec.kind == Kind::Lead || spec.kind == Kind::Theta) && spec.prune_gap)
        throw UsageError(kExitUsage, "--prune-gap: lead tracking needs the unpruned population");

    check_all(spec.ys, "--y", false);
    check_all(spec.zs, "--z", true);
    check_all(spec.snapshot_times, "--s", true);
    check_all(spec.deltas, "--delta", true);
    for (double s : spec.snapshot_times)
        if (s >= spec.horizon) throw UsageError(kExitUsage, fmt::format("--s: {} is not below the horizon", s));
    for (double a : spec.slopes)
        if (!std::isfinite(a)) throw UsageError(kExitUsage, "--a: values must be finite");
    if (spec.kind == Kind::Cohort && spec.slopes.empty() && spec.deltas.empty())
        throw UsageError(kExitUsage, "--a: cohort needs --a or --delta");
    if (spec.kind != Kind::Fit && spec.kind != Kind::Validate && !(spec.dt < spec.horizon))
        throw UsageError(kExitUsage, fmt::format("--dt: {} must be below the horizon {}", spec.dt, spec.horizon));
    try {
        spec.sim_config(spec.master_seed).validate();
    } catch (const InvalidConfig& e) {
        throw UsageError(kExitUsage, e.what());
    }
    return spec;
}

}  // namespace bbm::harness
