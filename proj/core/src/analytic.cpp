#include <bbm/analytic.hpp>

#include <bbm/error.hpp>

#include <cmath>

namespace bbm::analytic {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
}  // namespace

void BoundSpec::validate() const {
    if (!(c1 > 0.0) || !(C1 > 0.0)) throw InvalidConfig("bound constants must be strictly positive");
}

double front_centering(double t) {
    if (!(t > 0.0)) throw DomainError("front_centering requires t > 0");
    return kSqrt2 * t - 3.0 / (2.0 * kSqrt2) * std::log(t);
}

double front_tail_upper(double y, const BoundSpec& spec) {
    const double yp = std::max(y, 0.0);
    return spec.c1 * (1.0 + yp) * (1.0 + yp) * std::exp(-kSqrt2 * y);
}

TailBounds gauss_tail_bounds(double s, double a) {
    if (!(s >= 1.0)) throw DomainError("gauss_tail_bounds requires s >= 1");
    if (!(a > 0.0)) throw DomainError("gauss_tail_bounds requires a > 0");
    const double upper = std::sqrt(s / (2.0 * kPi)) / a * std::exp(-a * a / (2.0 * s));
    return {(1.0 - s / (a * a)) * upper, upper};
}

double gauss_tail(double s, double a) {
    if (!(s > 0.0)) throw DomainError("gauss_tail requires s > 0");
    return 0.5 * std::erfc(a / std::sqrt(2.0 * s));
}

double lalley_sellke_bound(double s, double mu) {
    if (!(s > 0.0)) throw DomainError("lalley_sellke_bound requires s > 0");
    if (!(mu >= kSqrt2)) throw DomainError("lalley_sellke_bound requires mu >= sqrt2");
    return 1.0 / (mu * std::sqrt(2.0 * kPi * s)) * std::exp(-s * (mu * mu / 2.0 - 1.0));
}

double population_pmf(double t, std::size_t k) {
    if (!(t > 0.0)) throw DomainError("population_pmf requires t > 0");
    if (k < 1) throw DomainError("population_pmf requires k >= 1");
    const double p = std::exp(-t);
    return p * std::pow(-std::expm1(-t), static_cast<double>(k - 1));
}

double split_time_density(std::size_t M, double s) {
    if (M < 1) throw DomainError("split_time_density requires M >= 1");
    if (s < 0.0) return 0.0;
    return static_cast<double>(M) * std::exp(-s) * std::pow(-std::expm1(-s), static_cast<double>(M - 1));
}

double lone_left_excursion_prob(double s, double beta) {
    if (!(s > 0.0)) throw DomainError("lone_left_excursion_prob requires s > 0");
    return std::exp(-s) * gauss_tail(s, beta * s);
}

double small_deviation_bound(double z, double alpha, double beta, const BoundSpec& spec) {
    if (!(z > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
        throw DomainError("small_deviation_bound requires z, alpha, beta > 0");
    return spec.C1 * std::exp(-beta * z / (6.0 * kSqrt2));
}

double cohort_growth_rate(double a) {
    if (!(a >= 0.0) || !(a < kSqrt2)) throw DomainError("cohort_growth_rate requires 0 <= a < sqrt2");
    return 1.0 - a * a / 2.0;
}

double bridge_exp_moment(double k, double s, double x) {
    if (!(k > 0.0)) throw DomainError("bridge_exp_moment requires k > 0");
    if (!(s >= 0.0 && s <= k)) throw DomainError("bridge_exp_moment requires 0 <= s <= k");
    return std::exp(s * (k - s + kSqrt2 * x) / k);
}

}  // namespace bbm::analytic
