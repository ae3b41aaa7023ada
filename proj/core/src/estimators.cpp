#include <bbm/estimators.hpp>

#include <bbm/analytic.hpp>
#include <bbm/error.hpp>
#include <bbm/replicates.hpp>
#include <bbm/rng.hpp>
#include <bbm/stats.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

namespace bbm {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Tags separating the independent streams of one estimator call.
constexpr std::uint64_t kSingleBrownianStream = 0xB2A0'77E5'0000'0001ULL;

SimConfig replicate_config(const ReplicateOptions& opts, std::size_t i, double horizon, double dt) {
    SimConfig cfg;
    cfg.seed = mix64(opts.seed, i);
    cfg.horizon = horizon;
    cfg.dt = std::min(dt, horizon / 2.0);
    cfg.max_particles = opts.max_particles;
    return cfg;
}

McEstimate to_estimate(const stats::RunningStats& s, double scale = 1.0) {
    return {scale * s.mean(), scale * s.std_error(), s.count(), 0.0};
}

}  // namespace

bool agree_within(const McEstimate& a, const McEstimate& b, double k) {
    return std::abs(a.mean - b.mean) <= k * std::hypot(a.std_error, b.std_error);
}

McEstimate binomial_estimate(std::size_t hits, std::size_t n) {
    if (n == 0) throw DomainError("binomial estimate over zero trials");
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, 0.0};
}

IdentityCheck many_to_one_check(const PathFunctional& F, double t, double dt, const ReplicateOptions& opts) {
    if (!(t > 0.0) || !(dt > 0.0)) throw DomainError("many_to_one_check needs t > 0 and dt > 0");
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / dt)));
    const double step = t / static_cast<double>(steps);

    auto branching_side = [&](std::size_t i) {
        SimConfig cfg = replicate_config(opts, i, t, step);
        Population pop(cfg);
        pop.record_events(true);

        std::vector<std::unordered_map<ParticleId, double>> grid(steps + 1);
        grid[0].emplace(0, 0.0);
        for (std::size_t j = 1; j <= steps; ++j) {
            pop.advance_to(j == steps ? t : static_cast<double>(j) * step);
            for (const auto& p : pop.particles()) grid[j].emplace(p.id, p.position);
        }
        std::unordered_map<ParticleId, ParticleId> parent;
        for (const auto& ev : pop.events()) {
            parent.emplace(ev.first_child, ev.parent);
            parent.emplace(ev.second_child, ev.parent);
        }

        double total = 0.0;
        std::vector<double> path(steps + 1);
        for (const auto& p : pop.particles()) {
            ParticleId ancestor = p.id;
            for (std::size_t j = steps + 1; j-- > 0;) {
                auto it = grid[j].find(ancestor);
                while (it == grid[j].end()) {
                    ancestor = parent.at(ancestor);
                    it = grid[j].find(ancestor);
                }
                path[j] = it->second;
            }
            total += F(path, step);
        }
        return total;
    };

    auto single_side = [&](std::size_t i) {
        Rng rng(mix64(mix64(opts.seed, kSingleBrownianStream), i));
        std::vector<double> path(steps + 1, 0.0);
        const double sd = std::sqrt(step);
        for (std::size_t j = 1; j <= steps; ++j) path[j] = path[j - 1] + sd * rng.normal();
        return F(path, step);
    };

    const auto lhs_values = run_replicates(opts.replicates, opts.threads, branching_side);
    const auto rhs_values = run_replicates(opts.replicates, opts.threads, single_side);
    stats::RunningStats lhs, rhs;
    for (double v : lhs_values) lhs.push(v);
    for (double v : rhs_values) rhs.push(v);
    return {to_estimate(lhs), to_estimate(rhs, std::exp(t))};
}

double pair_sum(const Population& pop, double a, double b) {
    if (pop.size() < 2) return 0.0;
    const double k = pop.now();
    double weight_total = 0.0;
    for (const auto& w : pop.particles()) weight_total += std::exp(kSqrt2 * w.position);
    // sum over w != u of e^{sqrt2 X_w} = weight_total - e^{sqrt2 X_u}
    double total = 0.0;
    for (const auto& u : pop.particles()) {
        if (u.position < a * k || u.position > b * k) continue;
        total += weight_total * std::exp(-kSqrt2 * u.position) - 1.0;
    }
    return total;
}

double pair_sum_quadrature(double k, double a, double b) {
    if (!(k > 0.0)) throw DomainError("pair_sum_quadrature needs k > 0");
    if (!(a < b)) throw DomainError("pair_sum_quadrature needs a < b");
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double sd = std::sqrt(k);

    auto inner = [&](double s) {
        // The x-integrand is Gaussian in x with mean -sqrt2 (k - s); integrate
        // over the window clipped to +-40 standard deviations of that mass.
        const double centre = -kSqrt2 * (k - s);
        const double lo = std::max(a * k, centre - 40.0 * sd);
        const double hi = std::min(b * k, centre + 40.0 * sd);
        if (!(lo < hi)) return 0.0;
        auto f = [&](double x) {
            const double density = std::exp(-x * x / (2.0 * k)) / std::sqrt(2.0 * std::numbers::pi * k);
            return std::exp(-kSqrt2 * x) * density * analytic::bridge_exp_moment(k, s, x);
        };
        return 2.0 * std::exp(3.0 * k - 2.0 * s) * Quad::integrate(f, lo, hi, 15, 1e-13);
    };
    return Quad::integrate(inner, 0.0, k, 15, 1e-12);
}

PairSumCheck many_to_two_check(double k, double a, double b, const ReplicateOptions& opts) {
    auto one = [&](std::size_t i) {
        Population pop(replicate_config(opts, i, k, k));
        pop.advance_to(k);
        return pair_sum(pop, a, b);
    };
    const auto values = run_replicates(opts.replicates, opts.threads, one);
    stats::RunningStats acc;
    for (double v : values) acc.push(v);
    return {to_estimate(acc), pair_sum_quadrature(k, a, b)};
}

std::vector<McEstimate> front_tail_estimate(double t, std::span<const double> ys, const ReplicateOptions& opts) {
    const double centering = analytic::front_centering(t);
    auto one = [&](std::size_t i) {
        Population pop(replicate_config(opts, i, t, t));
        pop.advance_to(t);
        return pop.rightmost().position - centering;
    };
    const auto excess = run_replicates(opts.replicates, opts.threads, one);
    std::vector<McEstimate> out;
    for (double y : ys) {
        const auto hits = static_cast<std::size_t>(
            std::count_if(excess.begin(), excess.end(), [y](double e) { return e > y; }));
        out.push_back(binomial_estimate(hits, excess.size()));
    }
    return out;
}

LeftTailReport left_tail_estimate(double s, double mu, const ReplicateOptions& opts) {
    const double bound = analytic::lalley_sellke_bound(s, mu);
    auto one = [&](std::size_t i) {
        Population pop(replicate_config(opts, i, s, s));
        pop.advance_to(s);
        return std::pair{pop.leftmost().position <= -mu * s, pop.rightmost().position >= mu * s};
    };
    const auto flags = run_replicates(opts.replicates, opts.threads, one);
    std::size_t left = 0, right = 0;
    for (const auto& [l, r] : flags) {
        left += l;
        right += r;
    }
    return {binomial_estimate(left, flags.size()), binomial_estimate(right, flags.size()), bound};
}

namespace {

struct Line {
    double slope;
    double intercept;
};

std::vector<FitPoint> aggregate(std::span<const FitPoint> points) {
    std::map<double, std::pair<std::vector<double>, double>> groups;
    for (const auto& p : points) {
        auto& g = groups[p.scale];
        g.first.push_back(p.log_time);
        g.second += p.weight;
    }
    std::vector<FitPoint> out;
    for (auto& [scale, g] : groups) out.push_back({scale, stats::median(std::move(g.first)), g.second, false});
    return out;
}

Line weighted_line(const std::vector<FitPoint>& pts) {
    double sw = 0, sx = 0, sy = 0;
    for (const auto& p : pts) {
        sw += p.weight;
        sx += p.weight * p.scale;
        sy += p.weight * p.log_time;
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sxx += p.weight * (p.scale - mx) * (p.scale - mx);
        sxy += p.weight * (p.scale - mx) * (p.log_time - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

SlopeFit exponent_fit(std::span<const FitPoint> points, const FitOptions& opts) {
    std::vector<FitPoint> usable;
    std::size_t excluded = 0;
    for (const auto& p : points) {
        if (!std::isfinite(p.scale) || !std::isfinite(p.log_time) || !(p.weight > 0.0))
            throw DomainError("fit points need finite scale/log_time and positive weight");
        if (p.censored && !opts.include_censored) {
            ++excluded;
            continue;
        }
        usable.push_back(p);
    }
    std::sort(usable.begin(), usable.end(), [](const FitPoint& x, const FitPoint& y) {
        if (x.scale != y.scale) return x.scale < y.scale;
        if (x.log_time != y.log_time) return x.log_time < y.log_time;
        if (x.weight != y.weight) return x.weight < y.weight;
        return x.censored < y.censored;
    });

    SlopeFit fit;
    fit.points = aggregate(usable);
    fit.censored_excluded = excluded;
    if (fit.points.size() < 2) throw DegenerateDesign("exponent fit needs at least two distinct scales");
    const Line line = weighted_line(fit.points);
    fit.slope = line.slope;
    fit.intercept = line.intercept;

    std::mt19937_64 engine(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    std::vector<double> slopes;
    std::vector<FitPoint> resample(usable.size());
    for (std::size_t b = 0; b < opts.bootstrap; ++b) {
        for (auto& p : resample) p = usable[pick(engine)];
        const auto agg = aggregate(resample);
        if (agg.size() < 2) continue;
        slopes.push_back(weighted_line(agg).slope);
    }
    if (slopes.empty()) {
        fit.slope_ci95 = {fit.slope, fit.slope};
    } else {
        std::sort(slopes.begin(), slopes.end());
        fit.slope_ci95 = {quantile_sorted(slopes, 0.025), quantile_sorted(slopes, 0.975)};
    }
    return fit;
}

}  // namespace bbm
