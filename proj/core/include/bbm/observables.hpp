#pragma once

// Waiting-time functionals measured on simulated populations.
//
// Path-dependent quantities are read on the checkpoint grid t_k = k * dt of
// the population's SimConfig; every reported first-passage time is a grid
// time and carries dt as its resolution. Horizons are absolute simulation
// times (config.horizon).

#include <bbm/population.hpp>

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace bbm {

enum class CrossingKind { FrontExceedance, LabelLead, CohortLead, TwoPopulationLead };

const char* to_string(CrossingKind kind);

struct CrossingRecord {
    CrossingKind kind = CrossingKind::FrontExceedance;
    double threshold = 0.0;  ///< y, z, label id or snapshot time depending on kind
    double time = 0.0;       ///< first-passage time, or its lower bound when censored
    double resolution = 0.0;
    bool censored = false;
    bool truncated = false;  ///< censoring came from the population budget
};

/// Called after every checkpoint with the grid time.
using CheckpointObserver = std::function<void(const Population&, double)>;

/// Number of grid points k >= 1 with k * dt <= horizon.
std::size_t grid_steps(double horizon, double dt);

/// Advances through every grid point k * dt <= t and then to t itself. Two
/// runs with the same seed that walk the same grid see the same realization,
/// whatever they observe on the way.
void advance_along_grid(Population& pop, double t);

/// First grid time t >= 1 with R(t) - m(t) > y, for each y, all on the same
/// realization. Applies config.prune_gap after each checkpoint and, when
/// config.bridge_refine is set, a Brownian-bridge test for crossings between
/// consecutive checkpoints. Budget exhaustion censors pending thresholds.
std::vector<CrossingRecord> track_front_exceedance(Population& pop, std::span<const double> ys,
                                                   const CheckpointObserver& observer = {});

CrossingRecord track_front_exceedance(Population& pop, double y);

struct SnapshotLabeling {
    double s = 0.0;
    std::map<ParticleId, LabelId> labels;
    LabelId leftmost_label = 0;
    LabelId rightmost_label = 0;
    std::set<LabelId> led;
    /// Per label: position at s and the instant the labelled particle splits.
    std::vector<double> position_at_s;
    std::vector<double> first_branch_time;

    std::size_t label_count() const { return position_at_s.size(); }
};

/// Labels the population alive at s = pop.now(). Throws TruncatedPopulation
/// if the population hit its budget and DomainError if s != pop.now().
SnapshotLabeling assign_labels(Population& pop, double s);

/// Observer invoked after each lead-tracking checkpoint with the led set.
using LeadObserver = std::function<void(const Population&, double, const std::set<LabelId>&)>;

/// For each label, the first grid offset t > 0 after s at which the rightmost
/// particle carries that label. Stops early once every label has led.
std::map<LabelId, CrossingRecord> track_lead_times(Population& pop, SnapshotLabeling& labeling,
                                                   const LeadObserver& observer = {});

/// Maximum of the per-label lead times; censored (a lower bound) if any label is.
CrossingRecord cohort_lead_time(const std::map<LabelId, CrossingRecord>& lead_times);

/// Label owning the largest lead time (the first such label on ties).
LabelId slowest_label(const std::map<LabelId, CrossingRecord>& lead_times);

/// First grid time t >= 0 with R_a(t) - R_b(t) > z for each z, on one coupled
/// pair. Both configs must share dt and horizon.
using PairObserver = std::function<void(const Population&, const Population&, double)>;

std::vector<CrossingRecord> track_two_population_lead(const SimConfig& first, const SimConfig& second,
                                                      std::span<const double> zs,
                                                      const PairObserver& observer = {});

struct CohortCount {
    double k = 0.0;
    double a = 0.0;
    std::size_t count = 0;
    std::optional<double> delta;
};

/// #{u : X_u(k) <= -a k} with k = pop.now().
CohortCount cohort_count(const Population& pop, double a);

/// The delta-parameterised cohort, a = sqrt2 (1 - delta/2).
CohortCount cohort_count_delta(const Population& pop, double delta);

struct SplitSample {
    double time = 0.0;              ///< exact instant the population reaches M + 1
    double leftmost = 0.0;          ///< L at that instant
    std::size_t alive = 0;
    std::size_t distinct_positions = 0;
};

/// Runs from a fresh root until the M-th branch event.
SplitSample sample_split_time(const SimConfig& config, std::size_t M);

}  // namespace bbm
