#pragma once

// One JSONL line per replicate:
//
//   {"replicate_index":0,"seed_used":...,"config_digest":"<sha256>",
//    "truncated":false,"observables":{"T@0.5":{"value":2.113,"censored":false},...}}
//
// Reals are printed with 17 significant digits; a missing value (e.g. the log
// of an empty cohort) is null. wall_time_ms is appended only with --timings.

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bbm::harness {

struct Observable {
    std::string name;
    std::optional<double> value;
    bool censored = false;

    bool operator==(const Observable&) const = default;
};

struct ReplicateResult {
    std::size_t replicate_index = 0;
    std::uint64_t seed_used = 0;
    std::vector<Observable> observables;
    bool truncated = false;
    double wall_time_ms = 0.0;
    std::string config_digest;

    const Observable* find(const std::string& name) const;
};

/// Compact JSON with reals at 17 significant digits and non-finite reals as null.
std::string dump_json(const nlohmann::ordered_json& j);

std::string to_json_line(const ReplicateResult& r, bool timings = false);

/// Inverse of to_json_line. Throws std::runtime_error on schema violations.
ReplicateResult parse_json_line(const std::string& line);

}  // namespace bbm::harness
