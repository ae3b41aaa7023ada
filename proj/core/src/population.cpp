#include <bbm/population.hpp>

#include <bbm/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bbm {

void SimConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidConfig("horizon must be a positive finite time");
    if (!(dt > 0.0))
        throw InvalidConfig("dt must be positive");
    if (!(dt < horizon))
        throw InvalidConfig("dt must be smaller than horizon");
    if (max_particles < 1)
        throw InvalidConfig("max_particles must be at least 1");
    if (prune_gap && !(*prune_gap > 0.0))
        throw InvalidConfig("prune_gap must be positive");
}

Population::Population(const SimConfig& config) : config_(config), rng_(config.seed) {
    config_.validate();
    ParticleRecord root;
    root.id = next_id_++;
    root.birth_time = 0.0;
    root.position = 0.0;
    root.next_branch_time = rng_.exponential();
    records_.push_back(root);
    synced_at_.push_back(0.0);
    anchors_.push_back(0.0);
    clocks_.push({root.next_branch_time, root.id, 0});
    rightmost_ = leftmost_ = {root.id, 0.0};
}

void Population::truncate_at(double t) {
    truncated_ = true;
    sync_all(t);
    now_ = t;
    refresh_extremes();
    throw PopulationBudgetExceeded("population budget of " + std::to_string(config_.max_particles) +
                                   " particles exceeded at t=" + std::to_string(t));
}

void Population::branch(const Pending& ev) {
    const std::size_t slot = ev.slot;
    ParticleRecord parent = records_[slot];
    const double elapsed = ev.time - synced_at_[slot];
    const double x = parent.position + (elapsed > 0.0 ? std::sqrt(elapsed) * rng_.normal() : 0.0);
    const double anchor = anchors_[slot];

    ParticleRecord first;
    first.id = next_id_++;
    first.parent_id = parent.id;
    first.birth_time = ev.time;
    first.position = x;
    first.next_branch_time = ev.time + rng_.exponential();
    first.label = parent.label;

    ParticleRecord second = first;
    second.id = next_id_++;
    second.next_branch_time = ev.time + rng_.exponential();

    records_[slot] = first;
    synced_at_[slot] = ev.time;
    records_.push_back(second);
    synced_at_.push_back(ev.time);
    anchors_.push_back(anchor);

    clocks_.push({first.next_branch_time, first.id, slot});
    clocks_.push({second.next_branch_time, second.id, records_.size() - 1});
    ++event_count_;
    if (record_events_) events_.push_back({ev.time, parent.id, first.id, second.id, x});
}

void Population::advance_to(double t) {
    if (truncated_)
        throw PopulationBudgetExceeded("population already truncated at t=" + std::to_string(now_));
    if (t < now_) throw DomainError("advance_to cannot move backwards in time");
    if (t == now_) return;

    while (!clocks_.empty() && clocks_.top().time <= t) {
        const Pending ev = clocks_.top();
        if (records_.size() + 1 > config_.max_particles) truncate_at(ev.time);
        clocks_.pop();
        branch(ev);
    }
    sync_all(t);
    now_ = t;
    refresh_extremes();
}

double Population::advance_to_next_branch() {
    if (truncated_)
        throw PopulationBudgetExceeded("population already truncated at t=" + std::to_string(now_));
    const Pending ev = clocks_.top();
    if (records_.size() + 1 > config_.max_particles) truncate_at(ev.time);
    clocks_.pop();
    branch(ev);
    sync_all(ev.time);
    now_ = ev.time;
    refresh_extremes();
    return ev.time;
}

void Population::sync_all(double t) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const double elapsed = t - synced_at_[i];
        if (elapsed > 0.0) {
            records_[i].position += std::sqrt(elapsed) * rng_.normal();
            synced_at_[i] = t;
        }
    }
}

void Population::refresh_extremes() {
    const ParticleRecord* hi = &records_.front();
    const ParticleRecord* lo = hi;
    for (const auto& p : records_) {
        if (p.position > hi->position || (p.position == hi->position && p.id < hi->id)) hi = &p;
        if (p.position < lo->position || (p.position == lo->position && p.id < lo->id)) lo = &p;
    }
    rightmost_ = {hi->id, hi->position};
    rightmost_slot_ = static_cast<std::size_t>(hi - records_.data());
    leftmost_ = {lo->id, lo->position};
}

std::vector<SnapshotEntry> Population::snapshot() const {
    std::vector<SnapshotEntry> out;
    out.reserve(records_.size());
    for (const auto& p : records_) out.push_back({p.id, p.position, p.label});
    std::sort(out.begin(), out.end(),
              [](const SnapshotEntry& a, const SnapshotEntry& b) { return a.id < b.id; });
    return out;
}

void Population::rebuild_heap() {
    std::vector<Pending> pending;
    pending.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i)
        pending.push_back({records_[i].next_branch_time, records_[i].id, i});
    clocks_ = decltype(clocks_)(std::greater<>{}, std::move(pending));
}

std::size_t Population::prune(double gap) {
    if (lineage_tracking_)
        throw PruningForbidden("pruning would discard lineages needed for lead-time tracking");
    if (!(gap > 0.0)) throw DomainError("prune gap must be positive");
    sync_all(now_);
    refresh_extremes();
    const double cutoff = rightmost_.position - gap;

    std::size_t kept = 0;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].position < cutoff) continue;
        if (kept != i) {
            records_[kept] = records_[i];
            synced_at_[kept] = synced_at_[i];
            anchors_[kept] = anchors_[i];
        }
        ++kept;
    }
    const std::size_t removed = records_.size() - kept;
    if (removed == 0) return 0;
    records_.resize(kept);
    synced_at_.resize(kept);
    anchors_.resize(kept);
    rebuild_heap();
    refresh_extremes();
    pruned_ = true;
    return removed;
}

std::size_t Population::label_by_id_order() {
    std::vector<std::size_t> order(records_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [this](std::size_t a, std::size_t b) { return records_[a].id < records_[b].id; });
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        records_[order[rank]].label = static_cast<LabelId>(rank);
    lineage_tracking_ = true;
    return order.size();
}

void Population::mark_anchors() {
    for (std::size_t i = 0; i < records_.size(); ++i) anchors_[i] = records_[i].position;
}

}  // namespace bbm
