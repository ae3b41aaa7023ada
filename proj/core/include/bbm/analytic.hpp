#pragma once

// Closed-form laws, bounds and constants for binary branching Brownian motion
// with unit branching rate. These are the reference values the statistical
// checks compare against.

#include <cstddef>
#include <numbers>

namespace bbm::analytic {

/// Unspecified positive constants of the inequality family. Checks compare
/// decay rates, so the defaults only fix the scale.
struct BoundSpec {
    double c1 = 1.0;  ///< front right-tail constant
    double C1 = 1.0;  ///< small-deviation constant

    void validate() const;
};

struct Constants {
    static constexpr double sqrt2 = std::numbers::sqrt2;
    /// log T(y) / y
    static constexpr double front_exceedance_exponent = std::numbers::sqrt2;
    /// log tau_{l(s)} / s
    static constexpr double leftmost_lead_exponent = 4.0;
    /// log Theta_s / s
    static constexpr double cohort_lead_exponent = 2.0 + 2.0 * std::numbers::sqrt2;
    /// slope of the slowest ancestor's position, -(2 - sqrt2) s
    static constexpr double extremal_slope = 2.0 - std::numbers::sqrt2;
    /// liminf and limsup of (R(t) - sqrt2 t) / log t; reported, never simulated
    static constexpr double front_liminf = -3.0 / (2.0 * std::numbers::sqrt2);
    static constexpr double front_limsup = -1.0 / (2.0 * std::numbers::sqrt2);
};

static_assert(Constants::cohort_lead_exponent > Constants::leftmost_lead_exponent);

/// Bramson centring sqrt2 t - 3/(2 sqrt2) log t. Throws DomainError for t <= 0.
double front_centering(double t);

/// c1 (1 + y+)^2 exp(-sqrt2 y): upper bound on P[R(t) > m(t) + y] for
/// t >= 2, y <= sqrt t. The caller is responsible for the validity domain.
double front_tail_upper(double y, const BoundSpec& spec = {});

struct TailBounds {
    double lower;
    double upper;
};

/// Sandwich for P[B_s >= a], s >= 1, a > 0. The lower bound is negative (and
/// useless) when a^2 < s.
TailBounds gauss_tail_bounds(double s, double a);

/// P[B_s >= a] = P[B_s <= -a] via erfc; relative accuracy ~1e-15.
double gauss_tail(double s, double a);

/// mu^-1 (2 pi s)^-1/2 exp(-s (mu^2/2 - 1)); bounds P[R(s) >= mu s] for mu >= sqrt2.
double lalley_sellke_bound(double s, double mu);

/// P[N(t) = k] = e^-t (1 - e^-t)^(k-1).
double population_pmf(double t, std::size_t k);

/// Density of the time at which the population first reaches M + 1 particles.
double split_time_density(std::size_t M, double s);

/// P[no branch before s and L(s) <= -beta s] = e^-s P[B_s <= -beta s].
double lone_left_excursion_prob(double s, double beta);

/// C1 exp(-beta z / (6 sqrt2)).
double small_deviation_bound(double z, double alpha, double beta, const BoundSpec& spec = {});

/// Growth rate 1 - a^2/2 of the cohort below -a k. Throws DomainError outside [0, sqrt2).
double cohort_growth_rate(double a);

/// E[exp(sqrt2 b(s))] for a Brownian bridge b from 0 to x over [0, k].
double bridge_exp_moment(double k, double s, double x);

}  // namespace bbm::analytic
