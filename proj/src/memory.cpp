#include "rsb/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsb {

namespace {

Label majority_label(const std::array<std::size_t, kNumLabels>& counts) {
    Label best = 0;
    for (Label y = 1; y < kNumLabels; ++y) {
        if (counts[y] > counts[best]) best = y;
    }
    return best;
}

std::vector<const SlidingWindow::Entry*> entries_with_label(const SlidingWindow& w, Label y) {
    std::vector<const SlidingWindow::Entry*> out;
    for (const auto& e : w.entries()) {
        if (e.label == y) out.push_back(&e);
    }
    return out;
}

// Statistics and buffer of c rebuilt from window entries carrying label y.
void rebuild_from_window(ReactiveCentroid& c, Label y, const RsbConfig& cfg) {
    const auto chosen = entries_with_label(c.window, y);
    if (chosen.empty()) {
        throw IllegalStateError("centroid " + std::to_string(c.id) +
                                " has no window entry with label " + std::to_string(y));
    }
    std::vector<const FeatureVector*> points;
    points.reserve(chosen.size());
    for (const auto* e : chosen) points.push_back(&e->features);
    c.reset_statistics(points);
    c.label = y;

    c.buffer.clear();
    // Buffer has room for all `take` items, so offer never samples.
    Rng unused(0);
    const std::size_t take = std::min(cfg.b_max, chosen.size());
    for (std::size_t i = chosen.size() - take; i < chosen.size(); ++i) {
        const auto* e = chosen[i];
        c.buffer.offer(LabeledInstance{e->features, e->label, -1}, unused);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// RsbConfig
// ---------------------------------------------------------------------------

std::size_t RsbConfig::switch_count() const {
    return static_cast<std::size_t>(
        std::ceil(switch_fraction * static_cast<double>(omega_max)));
}

void RsbConfig::validate() const {
    if (c_min < 1) throw ConfigError("c_min must be positive");
    if (c_max < 1) throw ConfigError("c_max must be positive");
    if (c_min > c_max) throw ConfigError("c_min must not exceed c_max");
    if (b_max < 1) throw ConfigError("b_max must be positive");
    if (omega_max < 1) throw ConfigError("omega_max must be positive");
    if (n_s < 1) throw ConfigError("n_s must be positive");
    if (!(tau_s >= 0.0)) throw ConfigError("tau_s must be non-negative");
    if (!(alpha_r >= 0.0 && alpha_r <= 1.0)) throw ConfigError("alpha_r must be in [0,1]");
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (!(sigma_k > 0.0)) throw ConfigError("sigma_k must be positive");
    if (!(switch_fraction > 0.0 && switch_fraction <= 1.0))
        throw ConfigError("switch_fraction must be in (0,1]");
}

// ---------------------------------------------------------------------------
// SlidingWindow
// ---------------------------------------------------------------------------

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("window capacity must be positive");
}

void SlidingWindow::push(FeatureVector x, Label y, std::uint64_t stamp) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(Entry{std::move(x), y, stamp});
    ++cumulative_;
}

void SlidingWindow::retain_label(Label y) {
    std::erase_if(entries_, [y](const Entry& e) { return e.label != y; });
}

std::array<std::size_t, kNumLabels> SlidingWindow::label_counts() const {
    std::array<std::size_t, kNumLabels> counts{};
    for (const auto& e : entries_) ++counts[e.label];
    return counts;
}

SlidingWindow SlidingWindow::merged(const SlidingWindow& a, const SlidingWindow& b) {
    SlidingWindow out(std::max(a.capacity_, b.capacity_));
    std::vector<const Entry*> all;
    all.reserve(a.size() + b.size());
    for (const auto& e : a.entries_) all.push_back(&e);
    for (const auto& e : b.entries_) all.push_back(&e);
    std::stable_sort(all.begin(), all.end(),
                     [](const Entry* l, const Entry* r) { return l->stamp < r->stamp; });
    const std::size_t skip = all.size() > out.capacity_ ? all.size() - out.capacity_ : 0;
    for (std::size_t i = skip; i < all.size(); ++i) out.entries_.push_back(*all[i]);
    out.cumulative_ = a.cumulative_ + b.cumulative_;
    return out;
}

// ---------------------------------------------------------------------------
// CentroidBuffer
// ---------------------------------------------------------------------------

CentroidBuffer::CentroidBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("buffer capacity must be positive");
}

bool CentroidBuffer::offer(const LabeledInstance& inst, Rng& rng) {
    ++offered_;
    if (items_.size() < capacity_) {
        items_.push_back(inst);
        return true;
    }
    const std::size_t j = rng.index(static_cast<std::size_t>(offered_));
    if (j < capacity_) {
        items_[j] = inst;
        return true;
    }
    return false;
}

void CentroidBuffer::clear() {
    items_.clear();
    offered_ = 0;
}

// ---------------------------------------------------------------------------
// ReactiveCentroid
// ---------------------------------------------------------------------------

ReactiveCentroid::ReactiveCentroid(int id_, const LabeledInstance& first, const RsbConfig& cfg,
                                   std::uint64_t stamp)
    : id(id_),
      label(first.label),
      mean(first.features),
      m2(first.features.size(), 0.0),
      count(1),
      buffer(cfg.b_max),
      window(cfg.omega_max),
      registered_since_maintenance(1),
      created_at(stamp),
      window_updates_since_check(1) {
    Rng unused(0);
    buffer.offer(first, unused);
    window.push(first.features, first.label, stamp);
}

double ReactiveCentroid::variance(std::size_t j) const {
    return count == 0 ? 0.0 : m2[j] / static_cast<double>(count);
}

void ReactiveCentroid::absorb_statistics(const FeatureVector& x) {
    ++count;
    const double n = static_cast<double>(count);
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const double delta = x[j] - mean[j];
        mean[j] += delta / n;
        m2[j] += delta * (x[j] - mean[j]);
    }
}

void ReactiveCentroid::reset_statistics(const std::vector<const FeatureVector*>& points) {
    const std::size_t d = mean.size();
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
    for (const auto* p : points) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += (*p)[j];
    }
    const double n = static_cast<double>(points.size());
    for (std::size_t j = 0; j < d; ++j) mean[j] /= n;
    for (const auto* p : points) {
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = (*p)[j] - mean[j];
            m2[j] += delta * delta;
        }
    }
    count = points.size();
}

// ---------------------------------------------------------------------------
// Free operations
// ---------------------------------------------------------------------------

std::optional<std::size_t> nearest_index(std::span<const ReactiveCentroid> centroids,
                                         const FeatureVector& x,
                                         std::optional<Label> only_label) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        const auto& c = centroids[i];
        if (only_label && c.label != *only_label) continue;
        const double d = squared_distance(c.mean, x);
        if (!best || d < best_d || (d == best_d && c.id < centroids[*best].id)) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

const ReactiveCentroid& find_nearest(std::span<const ReactiveCentroid> centroids,
                                     const FeatureVector& x) {
    const auto i = nearest_index(centroids, x);
    if (!i) throw NotFoundError("no centroid to search");
    return centroids[*i];
}

bool within_bounds(const ReactiveCentroid& c, const FeatureVector& x, double sigma_k) {
    double total_var = 0.0;
    for (std::size_t j = 0; j < c.dim(); ++j) total_var += std::max(c.variance(j), kVarianceFloor);
    return squared_distance(c.mean, x) <= sigma_k * sigma_k * total_var;
}

std::optional<Label> check_switch(const ReactiveCentroid& c, const RsbConfig& cfg) {
    const auto counts = c.window.label_counts();
    const Label major = majority_label(counts);
    if (major != c.label && counts[major] >= cfg.switch_count()) return major;
    return std::nullopt;
}

void apply_switch(ReactiveCentroid& c, Label new_label, const RsbConfig& cfg) {
    rebuild_from_window(c, new_label, cfg);
}

bool check_split(const ReactiveCentroid& c, const RsbConfig& cfg, bool switched_this_pass) {
    if (switched_this_pass) return false;
    auto counts = c.window.label_counts();
    std::sort(counts.begin(), counts.end(), std::greater<>());
    const double c1 = static_cast<double>(counts[0]);
    const double c2 = static_cast<double>(counts[1]);
    if (c2 <= 0.0) return false;
    return c1 / c2 - 1.0 < cfg.tau_s;
}

std::string to_string(MemoryEvent::Kind kind) {
    switch (kind) {
        case MemoryEvent::Kind::Created: return "created";
        case MemoryEvent::Kind::Updated: return "updated";
        case MemoryEvent::Kind::WindowUpdated: return "window_updated";
        case MemoryEvent::Kind::Switched: return "switched";
        case MemoryEvent::Kind::Split: return "split";
        case MemoryEvent::Kind::Removed: return "removed";
        case MemoryEvent::Kind::Merged: return "merged";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// RsbMemory
// ---------------------------------------------------------------------------

RsbMemory::RsbMemory(RsbConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
    cfg_.validate();
}

std::size_t RsbMemory::index_of(int id) const {
    const auto it = std::lower_bound(centroids_.begin(), centroids_.end(), id,
                                     [](const ReactiveCentroid& c, int v) { return c.id < v; });
    if (it == centroids_.end() || it->id != id)
        throw NotFoundError("no centroid with id " + std::to_string(id));
    return static_cast<std::size_t>(it - centroids_.begin());
}

const ReactiveCentroid& RsbMemory::centroid(int id) const { return centroids_[index_of(id)]; }
ReactiveCentroid& RsbMemory::mutable_centroid(int id) { return centroids_[index_of(id)]; }

std::size_t RsbMemory::class_count(Label y) const {
    return static_cast<std::size_t>(std::count_if(
        centroids_.begin(), centroids_.end(), [y](const ReactiveCentroid& c) { return c.label == y; }));
}

int RsbMemory::create(const LabeledInstance& inst, std::vector<MemoryEvent>& events) {
    const int id = next_id_++;
    centroids_.emplace_back(id, inst, cfg_, stream_counter_);
    events.push_back({MemoryEvent::Kind::Created, id, inst.label});
    return id;
}

void RsbMemory::update_full(ReactiveCentroid& c, const LabeledInstance& inst) {
    c.absorb_statistics(inst.features);
    c.buffer.offer(inst, rng_);
    register_window(c, inst);
}

void RsbMemory::register_window(ReactiveCentroid& c, const LabeledInstance& inst) {
    c.window.push(inst.features, inst.label, stream_counter_);
    ++c.registered_since_maintenance;
    ++c.window_updates_since_check;
}

std::vector<MemoryEvent> RsbMemory::ingest(const LabeledInstance& inst) {
    validate_features(inst.features, dim_);
    validate_label(inst.label);
    if (dim_ == 0) dim_ = inst.features.size();

    std::vector<MemoryEvent> events;
    const Label y = inst.label;
    int touched = -1;

    if (class_count(y) < static_cast<std::size_t>(cfg_.c_min)) {
        touched = create(inst, events);
    } else {
        const std::size_t ix = *nearest_index(centroids_, inst.features);
        ReactiveCentroid& cx = centroids_[ix];
        if (cx.label == y) {
            update_full(cx, inst);
            touched = cx.id;
            events.push_back({MemoryEvent::Kind::Updated, cx.id, y});
        } else if (within_bounds(cx, inst.features, cfg_.sigma_k)) {
            register_window(cx, inst);
            touched = cx.id;
            events.push_back({MemoryEvent::Kind::WindowUpdated, cx.id, cx.label});
            if (const auto new_label = check_switch(cx, cfg_)) {
                apply_switch(cx, *new_label, cfg_);
                events.push_back({MemoryEvent::Kind::Switched, cx.id, *new_label});
                enforce_cap(*new_label, static_cast<std::size_t>(cfg_.c_max), events);
            }
        } else {
            const std::size_t iy = *nearest_index(centroids_, inst.features, y);
            ReactiveCentroid& cy = centroids_[iy];
            if (within_bounds(cy, inst.features, cfg_.sigma_k) ||
                class_count(y) >= static_cast<std::size_t>(cfg_.c_max)) {
                update_full(cy, inst);
                touched = cy.id;
                events.push_back({MemoryEvent::Kind::Updated, cy.id, y});
            } else {
                touched = create(inst, events);
            }
        }
    }

    ++stream_counter_;

    if (cfg_.cadence == MaintenanceCadence::Global) {
        if (stream_counter_ % cfg_.n_s == 0) {
            auto more = maintenance();
            events.insert(events.end(), more.begin(), more.end());
        }
    } else {
        // The touched centroid may have been merged away by a cap enforcement.
        const auto it = std::find_if(centroids_.begin(), centroids_.end(),
                                     [touched](const ReactiveCentroid& c) { return c.id == touched; });
        if (it != centroids_.end() && it->window_updates_since_check >= cfg_.n_s) {
            maintain_one(touched, events);
        }
    }
    return events;
}

bool RsbMemory::removable(const ReactiveCentroid& c) const {
    const double tau_r = cfg_.tau_r();
    const bool small = static_cast<double>(c.registered_since_maintenance) < tau_r &&
                       static_cast<double>(c.count) < tau_r;
    if (cfg_.cadence == MaintenanceCadence::Global) return small && c.created_at < period_start_;
    return small;
}

std::vector<MemoryEvent> RsbMemory::maintenance() {
    std::vector<MemoryEvent> events;
    std::array<std::size_t, kNumLabels> split_born{};

    std::vector<int> ids;
    ids.reserve(centroids_.size());
    for (const auto& c : centroids_) ids.push_back(c.id);

    for (int id : ids) {
        ReactiveCentroid& c = mutable_centroid(id);
        if (const auto new_label = check_switch(c, cfg_)) {
            apply_switch(c, *new_label, cfg_);
            events.push_back({MemoryEvent::Kind::Switched, id, *new_label});
            continue;
        }
        if (check_split(c, cfg_)) {
            const auto [kept, born] = apply_split(id, &events);
            (void)kept;
            ++split_born[centroid(born).label];
        }
    }

    for (std::size_t i = 0; i < centroids_.size();) {
        const ReactiveCentroid& c = centroids_[i];
        if (removable(c) && class_count(c.label) > 1) {
            events.push_back({MemoryEvent::Kind::Removed, c.id, c.label});
            centroids_.erase(centroids_.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }

    for (Label y = 0; y < kNumLabels; ++y) {
        enforce_cap(y, static_cast<std::size_t>(cfg_.c_max) + split_born[y], events);
    }

    for (auto& c : centroids_) c.registered_since_maintenance = 0;
    period_start_ = stream_counter_;
    return events;
}

void RsbMemory::maintain_one(int id, std::vector<MemoryEvent>& events) {
    ReactiveCentroid& c = mutable_centroid(id);
    c.window_updates_since_check = 0;
    if (const auto new_label = check_switch(c, cfg_)) {
        apply_switch(c, *new_label, cfg_);
        events.push_back({MemoryEvent::Kind::Switched, id, *new_label});
        enforce_cap(*new_label, static_cast<std::size_t>(cfg_.c_max), events);
    } else if (check_split(c, cfg_)) {
        apply_split(id, &events);
    }
    const auto it = std::find_if(centroids_.begin(), centroids_.end(),
                                 [id](const ReactiveCentroid& r) { return r.id == id; });
    if (it == centroids_.end()) return;
    if (removable(*it) && class_count(it->label) > 1) {
        events.push_back({MemoryEvent::Kind::Removed, it->id, it->label});
        centroids_.erase(it);
        return;
    }
    it->registered_since_maintenance = 0;
}

std::pair<int, int> RsbMemory::apply_split(int centroid_id, std::vector<MemoryEvent>* events) {
    {
        const ReactiveCentroid& c = centroid(centroid_id);
        if (!check_split(c, cfg_)) {
            throw IllegalStateError("centroid " + std::to_string(centroid_id) +
                                    " is not eligible for a split");
        }
    }
    const ReactiveCentroid& src = centroid(centroid_id);
    const auto counts = src.window.label_counts();
    const Label major = majority_label(counts);
    const Label minor = 1 - major;

    // Seed the new centroid from the minority window entries.
    const auto minor_entries = entries_with_label(src.window, minor);
    const auto& first = *minor_entries.front();
    const int new_id = next_id_++;
    ReactiveCentroid born(new_id, LabeledInstance{first.features, minor, -1}, cfg_, stream_counter_);
    born.window = SlidingWindow(cfg_.omega_max);
    for (const auto* e : minor_entries) born.window.push(e->features, e->label, e->stamp);
    rebuild_from_window(born, minor, cfg_);
    born.registered_since_maintenance = minor_entries.size();
    born.window_updates_since_check = 0;

    ReactiveCentroid& orig = mutable_centroid(centroid_id);
    rebuild_from_window(orig, major, cfg_);
    orig.window.retain_label(major);

    centroids_.push_back(std::move(born));  // ids ascend, order kept
    if (events) events->push_back({MemoryEvent::Kind::Split, centroid_id, major, new_id});
    return {centroid_id, new_id};
}

void RsbMemory::enforce_cap(Label y, std::size_t allowed, std::vector<MemoryEvent>& events) {
    while (class_count(y) > allowed) {
        std::size_t best_a = 0, best_b = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < centroids_.size(); ++a) {
            if (centroids_[a].label != y) continue;
            for (std::size_t b = a + 1; b < centroids_.size(); ++b) {
                if (centroids_[b].label != y) continue;
                const double d = squared_distance(centroids_[a].mean, centroids_[b].mean);
                if (d < best_d) {
                    best_d = d;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const int survivor = centroids_[best_a].id;
        const int absorbed = centroids_[best_b].id;
        merge(best_a, best_b);
        events.push_back({MemoryEvent::Kind::Merged, survivor, y, absorbed});
    }
}

void RsbMemory::merge(std::size_t survivor, std::size_t absorbed) {
    ReactiveCentroid& a = centroids_[survivor];
    ReactiveCentroid& b = centroids_[absorbed];

    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    for (std::size_t j = 0; j < a.dim(); ++j) {
        const double delta = b.mean[j] - a.mean[j];
        a.mean[j] += delta * nb / n;
        a.m2[j] += b.m2[j] + delta * delta * na * nb / n;
    }
    a.count += b.count;

    // Uniform subsample of the union when it overflows.
    std::vector<LabeledInstance> pool = a.buffer.items_;
    pool.insert(pool.end(), b.buffer.items_.begin(), b.buffer.items_.end());
    const std::uint64_t offered = a.buffer.offered_ + b.buffer.offered_;
    if (pool.size() > cfg_.b_max) {
        for (std::size_t i = 0; i < cfg_.b_max; ++i) {
            const std::size_t j = i + rng_.index(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(cfg_.b_max);
    }
    a.buffer.items_ = std::move(pool);
    a.buffer.offered_ = offered;

    a.window = SlidingWindow::merged(a.window, b.window);
    a.registered_since_maintenance += b.registered_since_maintenance;
    a.window_updates_since_check += b.window_updates_since_check;
    a.created_at = std::min(a.created_at, b.created_at);

    centroids_.erase(centroids_.begin() + static_cast<std::ptrdiff_t>(absorbed));
}

}  // namespace rsb
