#pragma once

// Monte Carlo cross-checks: many-to-one and many-to-two identities, front and
// left-tail frequencies against their analytic bounds, and log-scale exponent
// regression for first-passage times.

#include <bbm/population.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace bbm {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    double censored_fraction = 0.0;
};

/// |a - b| <= k * sqrt(se_a^2 + se_b^2)
bool agree_within(const McEstimate& a, const McEstimate& b, double k = 3.0);

/// Functional of a path sampled on a uniform grid that starts at time 0.
using PathFunctional = std::function<double(std::span<const double> path, double dt)>;

struct ReplicateOptions {
    std::uint64_t seed = 1;
    std::size_t replicates = 10000;
    unsigned threads = 1;
    std::size_t max_particles = std::size_t{1} << 22;
};

struct IdentityCheck {
    McEstimate lhs;  ///< E[sum over N(t) of F(ancestral path)]
    McEstimate rhs;  ///< e^t E[F(Brownian path)]
};

/// Both sides of the many-to-one identity, each from `replicates` draws on a
/// grid of step t / round(t / dt). The two sides use independent streams.
IdentityCheck many_to_one_check(const PathFunctional& F, double t, double dt, const ReplicateOptions& opts);

/// sum over u with a k <= X_u(k) <= b k of sum over w != u of exp(sqrt2 (X_w - X_u)),
/// with k = pop.now().
double pair_sum(const Population& pop, double a, double b);

/// 2 int_0^k e^{3k-2s} E[e^{sqrt2 B_s - sqrt2 B_k}; a k <= B_k <= b k] ds, with the
/// conditional expectation given B_k supplied by the Brownian-bridge moment.
double pair_sum_quadrature(double k, double a, double b);

struct PairSumCheck {
    McEstimate mc;
    double quadrature = 0.0;
};

PairSumCheck many_to_two_check(double k, double a, double b, const ReplicateOptions& opts);

/// Frequencies of R(t) > m(t) + y for each y, all from the same replicates.
std::vector<McEstimate> front_tail_estimate(double t, std::span<const double> ys, const ReplicateOptions& opts);

struct LeftTailReport {
    McEstimate left;   ///< P[L(s) <= -mu s]
    McEstimate right;  ///< P[R(s) >= mu s]
    double bound = 0.0;
};

LeftTailReport left_tail_estimate(double s, double mu, const ReplicateOptions& opts);

/// Frequency with its binomial standard error.
McEstimate binomial_estimate(std::size_t hits, std::size_t n);

struct FitPoint {
    double scale = 0.0;
    double log_time = 0.0;
    double weight = 1.0;
    bool censored = false;
};

struct FitOptions {
    bool include_censored = false;  ///< censored points enter at their lower bound
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 0x5eed;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::pair<double, double> slope_ci95{0.0, 0.0};
    std::vector<FitPoint> points;  ///< one per scale: (scale, median log time, summed weight)
    std::size_t censored_excluded = 0;
};

/// Weighted least squares of the median log time per scale against scale,
/// with a percentile bootstrap over the input points. Input order does not
/// matter. Throws DegenerateDesign with fewer than two distinct scales.
SlopeFit exponent_fit(std::span<const FitPoint> points, const FitOptions& opts = {});

}  // namespace bbm
