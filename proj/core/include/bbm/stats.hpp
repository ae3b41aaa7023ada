#pragma once

// Goodness-of-fit and summary helpers used by the Monte Carlo checks.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bbm::stats {

/// Welford accumulator.
class RunningStats {
public:
    void push(double x);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  ///< unbiased sample variance, 0 when n < 2
    double std_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov test.
TestResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Pearson chi-square test of observed counts against expected counts. Cells
/// are merged from the tail inward until each holds at least `min_expected`.
TestResult chi_square_test(std::span<const double> observed, std::span<const double> expected,
                           double min_expected = 5.0);

/// Median of the values (average of the two middle ones for even sizes).
double median(std::vector<double> values);

}  // namespace bbm::stats
