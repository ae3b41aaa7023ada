#include <bbm/error.hpp>
#include <bbm/estimators.hpp>
#include <bbm/analytic.hpp>
#include <bbm/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace bbm;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Unit-level agreement band. Dozens of MC comparisons run in this suite, so
// 4 combined SE keeps false alarms rare; acceptance uses the stricter 3.
constexpr double kBand = 4.0;

// P[R(4) > m(4) + 2], seed 4, 1e5 replicates.
constexpr double kPilotFrontTail = 0.02552;

// P[R(t) > m(t) + y] = 1 - u(t, m(t) + y) with u_t = u_xx / 2 + u^2 - u,
// u(0, x) = 1{x > 0}; explicit finite differences, h = 0.01.
constexpr double kFkppTail4At2 = 0.025504;
constexpr double kFkppTail9[] = {0.105656, 0.064784, 0.037562};  // y = 1, 1.5, 2

ReplicateOptions opts(std::uint64_t seed, std::size_t n) {
    ReplicateOptions o;
    o.seed = seed;
    o.replicates = n;
    return o;
}

double endpoint_one(std::span<const double>, double) { return 1.0; }
double endpoint_nonneg(std::span<const double> path, double) { return path.back() >= 0.0 ? 1.0 : 0.0; }
double endpoint_exp(std::span<const double> path, double) { return std::exp(kSqrt2 * path.back()); }
double path_max_above_one(std::span<const double> path, double) {
    return *std::max_element(path.begin(), path.end()) >= 1.0 ? 1.0 : 0.0;
}

// O(N^2) reference for the pair sum.
double brute_pair_sum(const Population& pop, double a, double b) {
    const double k = pop.now();
    const auto ps = pop.particles();
    double total = 0.0;
    for (std::size_t u = 0; u < ps.size(); ++u) {
        const double xu = ps[u].position;
        if (xu < a * k || xu > b * k) continue;
        for (std::size_t w = 0; w < ps.size(); ++w)
            if (w != u) total += std::exp(kSqrt2 * (ps[w].position - xu));
    }
    return total;
}

}  // namespace

// --- many-to-one -----------------------------------------------------------

TEST(ManyToOne, ConstantFunctionalGivesExpectedPopulation) {
    for (double t : {1.0, 2.0}) {
        const auto check = many_to_one_check(endpoint_one, t, 0.1, opts(11, 20000));
        EXPECT_DOUBLE_EQ(check.rhs.mean, std::exp(t));
        EXPECT_EQ(check.rhs.std_error, 0.0);
        EXPECT_TRUE(agree_within(check.lhs, check.rhs, kBand)) << check.lhs.mean << " +- " << check.lhs.std_error;
    }
}

TEST(ManyToOne, EndpointSymmetry) {
    for (double t : {1.0, 2.0}) {
        const auto check = many_to_one_check(endpoint_nonneg, t, 0.1, opts(12, 20000));
        EXPECT_LE(std::abs(check.rhs.mean - std::exp(t) / 2.0), 4.0 * check.rhs.std_error);
        EXPECT_TRUE(agree_within(check.lhs, check.rhs, kBand)) << check.lhs.mean << " vs " << check.rhs.mean;
    }
}

TEST(ManyToOne, ExponentialEndpoint) {
    // e^t E[e^{sqrt2 B_t}] = e^{2t}
    for (double t : {1.0, 2.0}) {
        const auto check = many_to_one_check(endpoint_exp, t, 0.1, opts(13, 20000));
        EXPECT_LE(std::abs(check.rhs.mean - std::exp(2.0 * t)), 4.0 * check.rhs.std_error);
        EXPECT_TRUE(agree_within(check.lhs, check.rhs, kBand)) << check.lhs.mean << " vs " << check.rhs.mean;
    }
}

TEST(ManyToOne, PathDependentFunctional) {
    const auto check = many_to_one_check(path_max_above_one, 1.5, 0.05, opts(14, 20000));
    EXPECT_TRUE(agree_within(check.lhs, check.rhs, kBand)) << check.lhs.mean << " vs " << check.rhs.mean;
    EXPECT_GT(check.lhs.mean, 0.0);
}

TEST(ManyToOne, RejectsBadArguments) {
    EXPECT_THROW(many_to_one_check(endpoint_one, 0.0, 0.1, opts(1, 10)), DomainError);
    EXPECT_THROW(many_to_one_check(endpoint_one, 1.0, 0.0, opts(1, 10)), DomainError);
}

TEST(ManyToOne, ThreadCountDoesNotChangeResult) {
    auto o = opts(15, 500);
    const auto one = many_to_one_check(endpoint_exp, 1.0, 0.1, o);
    o.threads = 3;
    const auto three = many_to_one_check(endpoint_exp, 1.0, 0.1, o);
    EXPECT_EQ(one.lhs.mean, three.lhs.mean);
    EXPECT_EQ(one.rhs.mean, three.rhs.mean);
}

// --- many-to-two -----------------------------------------------------------

TEST(PairSum, ZeroWithoutPairs) {
    SimConfig cfg;
    cfg.horizon = 5.0;
    cfg.dt = 0.1;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        Population pop(cfg);
        const double k = std::min(0.5 * pop.particles()[0].next_branch_time, 1.0);
        pop.advance_to(k);
        ASSERT_EQ(pop.size(), 1u);
        EXPECT_EQ(pair_sum(pop, -1e9, 1e9), 0.0);
    }
}

TEST(PairSum, MatchesBruteForce) {
    SimConfig cfg;
    cfg.horizon = 4.0;
    cfg.dt = 0.1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = mix64(31, seed);
        Population pop(cfg);
        pop.advance_to(3.0);
        for (auto [a, b] : {std::pair{-1e9, 1e9}, std::pair{-0.5, kSqrt2}, std::pair{-1.0, 0.3}, std::pair{0.2, 0.4}}) {
            const double ref = brute_pair_sum(pop, a, b);
            EXPECT_NEAR(pair_sum(pop, a, b), ref, 1e-9 * std::max(1.0, ref));
        }
    }
}

TEST(PairSum, QuadratureMatchesClosedForms) {
    // Full line: (2/3)(e^{4k} - e^k). Finite windows: the inner integral equals
    // e^{k-s} P[N(-sqrt2 (k - s), k) in [ak, bk]], integrated to 30 digits.
    for (double k : {0.5, 1.0, 2.0})
        EXPECT_NEAR(pair_sum_quadrature(k, -1e6, 1e6), 2.0 / 3.0 * (std::exp(4 * k) - std::exp(k)),
                    1e-9 * std::exp(4 * k));
    EXPECT_NEAR(pair_sum_quadrature(1.0, -1e6, 1e6), 34.5865788031234625618, 1e-9);
    EXPECT_NEAR(pair_sum_quadrature(1.0, -0.5, kSqrt2), 10.3501691752648082116, 1e-9);
    EXPECT_NEAR(pair_sum_quadrature(2.0, -1.0, 0.3), 745.055408160293755711, 1e-7);
    EXPECT_THROW(pair_sum_quadrature(0.0, -1, 1), DomainError);
    EXPECT_THROW(pair_sum_quadrature(1.0, 1, 1), DomainError);
}

TEST(PairSum, WindowBound) {
    const double theta = 0.5, k = 1.0;
    const double bound = 2.0 * std::exp(3 * k + kSqrt2 * theta * k);
    EXPECT_LE(pair_sum_quadrature(k, -theta, kSqrt2), bound);
    const auto check = many_to_two_check(k, -theta, kSqrt2, opts(21, 20000));
    EXPECT_LE(check.mc.mean, bound + 3.0 * check.mc.std_error);
}

TEST(PairSum, MonteCarloMatchesQuadrature) {
    const auto full = many_to_two_check(1.0, -1e6, 1e6, opts(22, 40000));
    EXPECT_LE(std::abs(full.mc.mean - full.quadrature), 3.0 * full.mc.std_error)
        << full.mc.mean << " +- " << full.mc.std_error << " vs " << full.quadrature;
    const auto window = many_to_two_check(1.0, -0.5, kSqrt2, opts(23, 40000));
    EXPECT_LE(std::abs(window.mc.mean - window.quadrature), 3.0 * window.mc.std_error)
        << window.mc.mean << " +- " << window.mc.std_error << " vs " << window.quadrature;
}

// --- tails -----------------------------------------------------------------

TEST(FrontTail, HugeThresholdNeverHit) {
    const double ys[] = {50.0};
    const auto est = front_tail_estimate(4.0, ys, opts(1, 2000));
    EXPECT_EQ(est[0].mean, 0.0);
    EXPECT_EQ(est[0].n, 2000u);
}

TEST(FrontTail, PilotGoldenAndBound) {
    const double ys[] = {2.0};
    const auto est = front_tail_estimate(4.0, ys, opts(4, 100000));
    EXPECT_DOUBLE_EQ(est[0].mean, kPilotFrontTail);
    EXPECT_LE(std::abs(est[0].mean - kFkppTail4At2), kBand * est[0].std_error);
    EXPECT_LE(est[0].mean, analytic::front_tail_upper(2.0, {}) + 3.0 * est[0].std_error);
}

TEST(FrontTail, NonIncreasingAndDecaying) {
    const double ys[] = {1.0, 1.5, 2.0};
    const auto est = front_tail_estimate(9.0, ys, opts(9, 10000));
    EXPECT_GE(est[0].mean, est[1].mean);
    EXPECT_GE(est[1].mean, est[2].mean);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_LE(std::abs(est[i].mean - kFkppTail9[i]), kBand * est[i].std_error) << "y=" << ys[i];
    // The exact slope over [1, 2] is -1.034; MC resolves it only to about +-0.07.
    EXPECT_LE(std::log(kFkppTail9[2] / kFkppTail9[0]), -1.0);
    ASSERT_GT(est[2].mean, 0.0);
    const double slope = std::log(est[2].mean / est[0].mean);
    const double se = std::hypot(est[0].std_error / est[0].mean, est[2].std_error / est[2].mean);
    EXPECT_LE(std::abs(slope - std::log(kFkppTail9[2] / kFkppTail9[0])), kBand * se);
}

TEST(LeftTail, SymmetryAndBound) {
    const auto report = left_tail_estimate(4.0, kSqrt2, opts(5, 100000));
    EXPECT_TRUE(agree_within(report.left, report.right)) << report.left.mean << " vs " << report.right.mean;
    EXPECT_NEAR(report.bound, analytic::lalley_sellke_bound(4.0, kSqrt2), 0.0);
    EXPECT_LE(report.left.mean, report.bound + 3.0 * report.left.std_error);
}

TEST(LeftTail, HugeSpeedNeverHit) {
    const auto report = left_tail_estimate(2.0, 50.0, opts(6, 2000));
    EXPECT_EQ(report.left.mean, 0.0);
    EXPECT_EQ(report.right.mean, 0.0);
}

// --- exponent fit ------------------------------------------------------------

TEST(ExponentFit, ExactLinearData) {
    std::vector<FitPoint> pts;
    for (double x : {0.5, 1.0, 1.5, 2.0}) pts.push_back({x, kSqrt2 * x});
    const auto fit = exponent_fit(pts);
    EXPECT_NEAR(fit.slope, kSqrt2, 1e-9);
    EXPECT_NEAR(fit.intercept, 0.0, 1e-9);
    EXPECT_NEAR(fit.slope_ci95.first, kSqrt2, 1e-9);
    EXPECT_NEAR(fit.slope_ci95.second, kSqrt2, 1e-9);
}

TEST(ExponentFit, NoisySlope) {
    std::mt19937_64 engine(77);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<FitPoint> pts;
    for (int i = 0; i < 50; ++i) {
        const double x = 0.1 * i;
        pts.push_back({x, 4.0 * x + noise(engine)});
    }
    const auto fit = exponent_fit(pts);
    EXPECT_GE(fit.slope, 3.8);
    EXPECT_LE(fit.slope, 4.2);
    EXPECT_LE(fit.slope_ci95.first, fit.slope);
    EXPECT_GE(fit.slope_ci95.second, fit.slope);
}

TEST(ExponentFit, PermutationInvariant) {
    std::mt19937_64 engine(78);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<FitPoint> pts;
    for (double x : {0.3, 0.5, 0.8})
        for (int r = 0; r < 25; ++r) pts.push_back({x, 4.0 * x + noise(engine)});
    const auto fit = exponent_fit(pts);
    std::shuffle(pts.begin(), pts.end(), engine);
    const auto shuffled = exponent_fit(pts);
    EXPECT_EQ(fit.slope, shuffled.slope);
    EXPECT_EQ(fit.intercept, shuffled.intercept);
    EXPECT_EQ(fit.slope_ci95, shuffled.slope_ci95);
}

TEST(ExponentFit, AffineEquivariant) {
    std::vector<FitPoint> pts{{0.5, 1.0}, {1.0, 1.9}, {1.5, 2.2}, {1.0, 1.4}};
    const auto base = exponent_fit(pts);
    for (auto& p : pts) p.log_time *= 2.5;
    const auto scaled = exponent_fit(pts);
    EXPECT_NEAR(scaled.slope, 2.5 * base.slope, 1e-12);
}

TEST(ExponentFit, DegenerateAndCensored) {
    std::vector<FitPoint> one{{1.0, 2.0}, {1.0, 3.0}};
    EXPECT_THROW(exponent_fit(one), DegenerateDesign);

    std::vector<FitPoint> pts{{1.0, 1.0}, {2.0, 2.0}, {3.0, 9.0, 1.0, true}};
    const auto fit = exponent_fit(pts);
    EXPECT_EQ(fit.censored_excluded, 1u);
    EXPECT_NEAR(fit.slope, 1.0, 1e-12);
    FitOptions with;
    with.include_censored = true;
    EXPECT_GT(exponent_fit(pts, with).slope, 1.0);

    std::vector<FitPoint> bad{{1.0, std::numeric_limits<double>::infinity()}, {2.0, 1.0}};
    EXPECT_THROW(exponent_fit(bad), DomainError);
}
