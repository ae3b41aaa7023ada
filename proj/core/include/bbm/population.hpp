#pragma once

// Event-driven simulation of binary branching Brownian motion.
//
// Every alive particle carries an exponential(1) branch clock. Clocks sit in a
// min-heap; positions are advanced lazily (Gaussian increment with variance
// equal to the elapsed time) when the particle branches or when the whole
// population is synchronised at a requested time. Branch times are exact;
// only path-dependent observables need a checkpoint grid.

#include <bbm/rng.hpp>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

namespace bbm {

using ParticleId = std::uint64_t;
using LabelId = std::uint32_t;

struct SimConfig {
    std::uint64_t seed = 1;
    double horizon = 10.0;
    double dt = 1e-3;
    std::size_t max_particles = std::size_t{1} << 22;
    std::optional<double> prune_gap;
    bool bridge_refine = false;

    /// Throws InvalidConfig naming the first violated field.
    void validate() const;
};

struct ParticleRecord {
    ParticleId id = 0;
    std::optional<ParticleId> parent_id;
    double birth_time = 0.0;
    double position = 0.0;
    double next_branch_time = 0.0;
    std::optional<LabelId> label;
};

struct Extremum {
    ParticleId id = 0;
    double position = 0.0;
};

struct SnapshotEntry {
    ParticleId id = 0;
    double position = 0.0;
    std::optional<LabelId> label;

    friend bool operator==(const SnapshotEntry&, const SnapshotEntry&) = default;
};

struct BranchEvent {
    double time = 0.0;
    ParticleId parent = 0;
    ParticleId first_child = 0;
    ParticleId second_child = 0;
    double position = 0.0;

    friend bool operator==(const BranchEvent&, const BranchEvent&) = default;
};

class Population {
public:
    /// One particle at the origin with a fresh exponential(1) clock drawn from
    /// the stream seeded by config.seed.
    explicit Population(const SimConfig& config);

    const SimConfig& config() const { return config_; }
    double now() const { return now_; }
    std::size_t size() const { return records_.size(); }
    std::uint64_t event_count() const { return event_count_; }
    bool truncated() const { return truncated_; }
    bool pruned() const { return pruned_; }
    bool lineage_tracking() const { return lineage_tracking_; }

    /// Alive particles in storage order (not id order). Positions are current
    /// only right after advance_to / advance_to_next_branch.
    std::span<const ParticleRecord> particles() const { return records_; }

    /// Position of each particle's lineage at the last mark_anchors() call,
    /// parallel to particles(). Children inherit the parent's anchor.
    std::span<const double> anchors() const { return anchors_; }

    /// Extremes of the alive set; ties go to the smallest id.
    Extremum rightmost() const { return rightmost_; }
    Extremum leftmost() const { return leftmost_; }
    const ParticleRecord& rightmost_particle() const { return records_[rightmost_slot_]; }

    /// Processes every branch event with time <= t in time order, then moves
    /// all particles to t. Throws PopulationBudgetExceeded (after flagging the
    /// state truncated and stopping at the offending branch instant) when a
    /// branch would exceed max_particles.
    void advance_to(double t);

    /// Processes exactly the next branch event and synchronises every particle
    /// to its time. Returns the event time. Throws like advance_to.
    double advance_to_next_branch();

    /// (id, position, label) sorted by id.
    std::vector<SnapshotEntry> snapshot() const;

    /// Removes particles more than `gap` behind the rightmost one. Returns the
    /// number removed. Throws PruningForbidden while lineage tracking is on.
    std::size_t prune(double gap);

    /// Gives every alive particle a distinct label (rank in id order) that its
    /// descendants inherit, and turns lineage tracking on. Returns the number
    /// of labels.
    std::size_t label_by_id_order();

    void mark_anchors();

    void record_events(bool on) { record_events_ = on; }
    std::span<const BranchEvent> events() const { return events_; }

    Rng& rng() { return rng_; }

private:
    struct Pending {
        double time;
        ParticleId id;
        std::size_t slot;
        bool operator>(const Pending& other) const {
            return time != other.time ? time > other.time : id > other.id;
        }
    };

    void branch(const Pending& ev);
    void sync_all(double t);
    void refresh_extremes();
    void rebuild_heap();
    [[noreturn]] void truncate_at(double t);

    SimConfig config_;
    Rng rng_;
    double now_ = 0.0;
    ParticleId next_id_ = 0;
    std::uint64_t event_count_ = 0;
    bool truncated_ = false;
    bool pruned_ = false;
    bool lineage_tracking_ = false;
    bool record_events_ = false;

    std::vector<ParticleRecord> records_;
    std::vector<double> synced_at_;
    std::vector<double> anchors_;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> clocks_;
    std::vector<BranchEvent> events_;

    Extremum rightmost_;
    Extremum leftmost_;
    std::size_t rightmost_slot_ = 0;
};

}  // namespace bbm
