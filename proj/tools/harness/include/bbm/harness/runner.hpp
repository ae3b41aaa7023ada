#pragma once

#include <bbm/estimators.hpp>
#include <bbm/harness/records.hpp>
#include <bbm/harness/spec.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace bbm::harness {

/// "T@0.5", "theta@0.8", ... The scale is printed in shortest round-trip form.
std::string scale_key(const std::string& prefix, double scale);

/// Runs every replicate of a simulation kind and returns the records in
/// replicate order. Replicate i uses seed mix64(master_seed, i).
std::vector<ReplicateResult> execute(const ExperimentSpec& spec);

std::string to_jsonl(const std::vector<ReplicateResult>& records, bool timings = false);

/// Fit points for observable `prefix` (keys "prefix@scale"), one per record.
std::vector<FitPoint> collect_fit_points(const std::vector<ReplicateResult>& records, const std::string& prefix);

/// Reference exponent of a known observable prefix, 0 when there is none.
double reference_slope(const std::string& prefix);

struct FitReport {
    SlopeFit fit;
    std::vector<std::pair<double, double>> censored_fraction;  ///< (scale, fraction)
    double reference = 0.0;
};

FitReport fit_records(const std::vector<ReplicateResult>& records, const std::string& prefix,
                      const FitOptions& opts = {});

std::string fit_report_json(const FitReport& report, const std::string& prefix);
std::string fit_report_csv(const FitReport& report);

/// Executes the spec: writes records (or the fit report) to output_path, or to
/// `out` when no path is set, plus a manifest next to the file. Returns the
/// process exit code.
int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace bbm::harness
