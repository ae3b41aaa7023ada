#include <bbm/observables.hpp>

#include <bbm/analytic.hpp>
#include <bbm/error.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bbm {

namespace {

constexpr double kGridEps = 1e-9;

// Exponent beyond which a bridge crossing probability is treated as zero.
constexpr double kBridgeCutoff = 60.0;

CrossingRecord censored_record(CrossingKind kind, double threshold, double bound, double dt) {
    return {kind, threshold, bound, dt, true, false};
}

}  // namespace

const char* to_string(CrossingKind kind) {
    switch (kind) {
        case CrossingKind::FrontExceedance: return "front_exceedance";
        case CrossingKind::LabelLead: return "label_lead";
        case CrossingKind::CohortLead: return "cohort_lead";
        case CrossingKind::TwoPopulationLead: return "two_population_lead";
    }
    return "unknown";
}

std::size_t grid_steps(double horizon, double dt) {
    return static_cast<std::size_t>(std::floor(horizon / dt + kGridEps));
}

void advance_along_grid(Population& pop, double t) {
    const double dt = pop.config().dt;
    std::size_t k = static_cast<std::size_t>(std::floor(pop.now() / dt + kGridEps)) + 1;
    for (; static_cast<double>(k) * dt < t - kGridEps * dt; ++k) pop.advance_to(static_cast<double>(k) * dt);
    pop.advance_to(std::max(t, pop.now()));
}

std::vector<CrossingRecord> track_front_exceedance(Population& pop, std::span<const double> ys,
                                                   const CheckpointObserver& observer) {
    const SimConfig& cfg = pop.config();
    std::vector<CrossingRecord> out;
    out.reserve(ys.size());
    for (double y : ys) {
        if (!(y > 0.0)) throw DomainError("front exceedance threshold must be positive");
        out.push_back(censored_record(CrossingKind::FrontExceedance, y, cfg.horizon, cfg.dt));
    }
    std::vector<bool> done(ys.size(), false);
    std::size_t pending = ys.size();

    const std::size_t steps = grid_steps(cfg.horizon, cfg.dt);
    const std::size_t first = static_cast<std::size_t>(std::floor(pop.now() / cfg.dt + kGridEps)) + 1;
    bool bridge_armed = false;
    double prev_centering = 0.0;

    auto settle = [&](std::size_t i, double t) {
        out[i].time = t;
        out[i].censored = false;
        done[i] = true;
        --pending;
    };

    for (std::size_t k = first; k <= steps && pending > 0; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        try {
            pop.advance_to(t);
        } catch (const PopulationBudgetExceeded&) {
            for (std::size_t i = 0; i < ys.size(); ++i) {
                if (done[i]) continue;
                out[i].time = pop.now();
                out[i].truncated = true;
            }
            break;
        }

        const bool in_domain = t >= 1.0 - kGridEps;
        double centering = 0.0;
        if (in_domain) {
            centering = analytic::front_centering(t);
            const double excess = pop.rightmost().position - centering;
            for (std::size_t i = 0; i < ys.size(); ++i)
                if (!done[i] && excess > ys[i]) settle(i, t);

            if (cfg.bridge_refine && bridge_armed && pending > 0) {
                // One uniform per lineage; the crossing probability decreases in y,
                // so the coupled thresholds stay ordered.
                const auto particles = pop.particles();
                const auto anchors = pop.anchors();
                double y_min = 0.0;
                bool have_min = false;
                for (std::size_t i = 0; i < ys.size(); ++i)
                    if (!done[i] && (!have_min || ys[i] < y_min)) y_min = ys[i], have_min = true;
                for (std::size_t p = 0; p < particles.size() && pending > 0; ++p) {
                    const double gap_before = prev_centering + y_min - anchors[p];
                    const double gap_after = centering + y_min - particles[p].position;
                    if (gap_before <= 0.0 || gap_after <= 0.0) continue;
                    if (2.0 * gap_before * gap_after / cfg.dt > kBridgeCutoff) continue;
                    const double u = pop.rng().uniform();
                    for (std::size_t i = 0; i < ys.size(); ++i) {
                        if (done[i]) continue;
                        const double a = prev_centering + ys[i] - anchors[p];
                        const double b = centering + ys[i] - particles[p].position;
                        if (u < std::exp(-2.0 * a * b / cfg.dt)) settle(i, t);
                    }
                }
            }
        }

        if (observer) observer(pop, t);
        if (pending == 0) break;
        if (cfg.prune_gap) pop.prune(*cfg.prune_gap);
        if (cfg.bridge_refine) {
            pop.mark_anchors();
            bridge_armed = in_domain;
            prev_centering = centering;
        }
    }
    return out;
}

CrossingRecord track_front_exceedance(Population& pop, double y) {
    const double ys[] = {y};
    return track_front_exceedance(pop, ys).front();
}

SnapshotLabeling assign_labels(Population& pop, double s) {
    if (pop.truncated()) throw TruncatedPopulation("cannot label a truncated population");
    if (std::abs(pop.now() - s) > 1e-12) throw DomainError("labels must be assigned at the current time");
    if (pop.pruned() || pop.config().prune_gap)
        throw PruningForbidden("lead tracking needs the unpruned population");

    const std::size_t n = pop.label_by_id_order();
    SnapshotLabeling labeling;
    labeling.s = s;
    labeling.position_at_s.resize(n);
    labeling.first_branch_time.resize(n);
    for (const auto& p : pop.particles()) {
        const LabelId label = *p.label;
        labeling.labels.emplace(p.id, label);
        labeling.position_at_s[label] = p.position;
        labeling.first_branch_time[label] = p.next_branch_time;
    }
    labeling.leftmost_label = labeling.labels.at(pop.leftmost().id);
    labeling.rightmost_label = labeling.labels.at(pop.rightmost().id);
    return labeling;
}

std::map<LabelId, CrossingRecord> track_lead_times(Population& pop, SnapshotLabeling& labeling,
                                                   const LeadObserver& observer) {
    if (pop.pruned() || pop.config().prune_gap)
        throw PruningForbidden("lead tracking needs the unpruned population");
    if (!pop.lineage_tracking()) throw DomainError("lead tracking requires assign_labels first");

    const SimConfig& cfg = pop.config();
    const double s = labeling.s;
    const std::size_t n = labeling.label_count();
    std::map<LabelId, CrossingRecord> out;
    for (LabelId label = 0; label < n; ++label) {
        auto rec = censored_record(CrossingKind::LabelLead, label, std::max(cfg.horizon - s, 0.0), cfg.dt);
        if (labeling.led.count(label)) rec.censored = false;
        out.emplace(label, rec);
    }

    // Offsets are read on the absolute grid when s sits on it, so that runs
    // labelled at different grid times share their checkpoints.
    const double base_index = s / cfg.dt;
    const bool on_grid = std::abs(base_index - std::round(base_index)) < kGridEps;
    auto checkpoint = [&](std::size_t k) {
        return on_grid ? (std::round(base_index) + static_cast<double>(k)) * cfg.dt
                       : s + static_cast<double>(k) * cfg.dt;
    };

    const std::size_t steps = cfg.horizon > s ? grid_steps(cfg.horizon - s, cfg.dt) : 0;
    for (std::size_t k = 1; k <= steps && labeling.led.size() < n; ++k) {
        const double t = checkpoint(k);
        const double offset = static_cast<double>(k) * cfg.dt;
        try {
            pop.advance_to(t);
        } catch (const PopulationBudgetExceeded&) {
            for (auto& [label, rec] : out) {
                if (labeling.led.count(label)) continue;
                rec.time = pop.now() - s;
                rec.truncated = true;
            }
            break;
        }
        const LabelId leader = *pop.rightmost_particle().label;
        if (labeling.led.insert(leader).second) {
            out[leader].time = offset;
            out[leader].censored = false;
        }
        if (observer) observer(pop, t, labeling.led);
    }
    return out;
}

CrossingRecord cohort_lead_time(const std::map<LabelId, CrossingRecord>& lead_times) {
    if (lead_times.empty()) throw DomainError("cohort lead time needs at least one label");
    CrossingRecord out{CrossingKind::CohortLead, 0.0, 0.0, lead_times.begin()->second.resolution, false, false};
    for (const auto& [label, rec] : lead_times) {
        out.time = std::max(out.time, rec.time);
        out.censored = out.censored || rec.censored;
        out.truncated = out.truncated || rec.truncated;
    }
    return out;
}

LabelId slowest_label(const std::map<LabelId, CrossingRecord>& lead_times) {
    if (lead_times.empty()) throw DomainError("no labels");
    auto best = lead_times.begin();
    for (auto it = lead_times.begin(); it != lead_times.end(); ++it)
        if (it->second.time > best->second.time) best = it;
    return best->first;
}

std::vector<CrossingRecord> track_two_population_lead(const SimConfig& first, const SimConfig& second,
                                                      std::span<const double> zs,
                                                      const PairObserver& observer) {
    if (first.dt != second.dt || first.horizon != second.horizon)
        throw InvalidConfig("paired populations must share dt and horizon");
    Population a(first);
    Population b(second);

    std::vector<CrossingRecord> out;
    for (double z : zs) {
        if (!(z >= 0.0)) throw DomainError("lead threshold z must be non-negative");
        out.push_back(censored_record(CrossingKind::TwoPopulationLead, z, first.horizon, first.dt));
    }
    std::vector<bool> done(zs.size(), false);
    std::size_t pending = zs.size();

    auto check = [&](double t) {
        const double lead = a.rightmost().position - b.rightmost().position;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (!done[i] && lead > zs[i]) {
                out[i].time = t;
                out[i].censored = false;
                done[i] = true;
                --pending;
            }
        }
    };

    check(0.0);
    if (observer) observer(a, b, 0.0);
    const std::size_t steps = grid_steps(first.horizon, first.dt);
    for (std::size_t k = 1; k <= steps && pending > 0; ++k) {
        const double t = static_cast<double>(k) * first.dt;
        try {
            a.advance_to(t);
            b.advance_to(t);
        } catch (const PopulationBudgetExceeded&) {
            const double reached = std::min(a.now(), b.now());
            for (std::size_t i = 0; i < zs.size(); ++i) {
                if (done[i]) continue;
                out[i].time = reached;
                out[i].truncated = true;
            }
            break;
        }
        check(t);
        if (observer) observer(a, b, t);
        if (first.prune_gap) a.prune(*first.prune_gap);
        if (second.prune_gap) b.prune(*second.prune_gap);
    }
    return out;
}

CohortCount cohort_count(const Population& pop, double a) {
    const double k = pop.now();
    const double threshold = k == 0.0 ? 0.0 : -a * k;
    std::size_t count = 0;
    for (const auto& p : pop.particles())
        if (p.position <= threshold) ++count;
    return {k, a, count, std::nullopt};
}

CohortCount cohort_count_delta(const Population& pop, double delta) {
    auto out = cohort_count(pop, std::numbers::sqrt2 * (1.0 - delta / 2.0));
    out.delta = delta;
    return out;
}

SplitSample sample_split_time(const SimConfig& config, std::size_t M) {
    if (M < 1) throw DomainError("split time needs M >= 1");
    Population pop(config);
    for (std::size_t i = 0; i < M; ++i) pop.advance_to_next_branch();

    std::vector<double> xs;
    for (const auto& p : pop.particles()) xs.push_back(p.position);
    std::sort(xs.begin(), xs.end());
    const auto distinct = static_cast<std::size_t>(std::unique(xs.begin(), xs.end()) - xs.begin());
    return {pop.now(), pop.leftmost().position, pop.size(), distinct};
}

}  // namespace bbm
