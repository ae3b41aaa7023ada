#pragma once

#include <bbm/population.hpp>

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bbm::harness {

enum class Kind { Simulate, Crossing, Lead, Theta, TwoBbm, Cohort, Validate, Fit };

const char* to_string(Kind kind);

/// Exit codes of the bbm tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedChecks = 1;
inline constexpr int kExitTruncated = 2;
inline constexpr int kExitUsage = 3;

/// Raised by parse_flags. code 0 means help was requested and `what()` holds
/// the help text.
class UsageError : public std::runtime_error {
public:
    UsageError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

struct ExperimentSpec {
    Kind kind = Kind::Simulate;
    std::uint64_t master_seed = 1;
    std::size_t replicates = 1;
    double horizon = 10.0;
    double dt = 1e-3;
    std::size_t max_particles = std::size_t{1} << 22;
    std::optional<double> prune_gap;
    bool bridge_refine = false;
    unsigned threads = 0;  ///< 0: machine parallelism
    std::string output_path;  ///< empty: stdout, no manifest
    bool timings = false;  ///< add wall_time_ms to every record

    // crossing / two-bbm / lead, theta / cohort
    std::vector<double> ys;
    std::vector<double> zs;
    std::vector<double> snapshot_times;
    std::vector<double> slopes;
    std::vector<double> deltas;
    double cohort_time = 8.0;

    // fit
    std::string input_path;
    std::string observable = "T";
    std::string csv_path;
    bool include_censored = false;
    std::size_t bootstrap = 1000;

    // validate
    double validate_scale = 0.1;

    /// Simulation settings for replicate seed `seed`.
    SimConfig sim_config(std::uint64_t seed) const;

    /// Everything that determines the records, in a fixed key order. Leaves out
    /// output_path, threads and timings, which do not change the results.
    nlohmann::ordered_json to_json() const;
};

/// Hex SHA-256 of spec.to_json() serialised compactly.
std::string config_digest(const ExperimentSpec& spec);

/// Flags override config-file values, which override defaults. When --seed is
/// absent everywhere, BBM_SEED is used. Throws UsageError.
ExperimentSpec parse_flags(int argc, const char* const* argv);

}  // namespace bbm::harness
