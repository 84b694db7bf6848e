#ifndef RSB_MEMORY_HPP
#define RSB_MEMORY_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsb/rng.hpp"
#include "rsb/types.hpp"

namespace rsb {

enum class MaintenanceCadence {
    Global,       // one tick every n_s ingested instances, applied to all centroids
    PerCentroid,  // a centroid is checked after every n_s-th update of its own window
};

struct RsbConfig {
    int c_min = 5;
    int c_max = 10;
    std::size_t b_max = 100;
    std::size_t omega_max = 100;
    std::size_t n_s = 1000;
    double tau_s = 0.5;
    double alpha_r = 0.4;
    double beta = 4.0;
    double sigma_k = 2.0;
    double switch_fraction = 0.5;
    MaintenanceCadence cadence = MaintenanceCadence::Global;

    // Removal threshold: centroids registering fewer instances are minuscule.
    double tau_r() const { return alpha_r * static_cast<double>(omega_max); }
    // Minimum window count of the new majority label before a switch.
    std::size_t switch_count() const;

    // Throws ConfigError.
    void validate() const;
};

// FIFO of the most recent (x, y) pairs registered at a centroid.
class SlidingWindow {
public:
    struct Entry {
        FeatureVector features;
        Label label = 0;
        std::uint64_t stamp = 0;  // stream position, used to order merged windows
    };

    explicit SlidingWindow(std::size_t capacity);

    void push(FeatureVector x, Label y, std::uint64_t stamp);
    // Keeps only entries carrying label y (order preserved).
    void retain_label(Label y);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t cumulative_updates() const { return cumulative_; }
    const std::deque<Entry>& entries() const { return entries_; }
    std::array<std::size_t, kNumLabels> label_counts() const;

    // Merges two windows by stamp, keeping the newest `capacity` entries.
    static SlidingWindow merged(const SlidingWindow& a, const SlidingWindow& b);

private:
    std::size_t capacity_;
    std::deque<Entry> entries_;
    std::uint64_t cumulative_ = 0;
};

// Bounded replay store. Reservoir sampling over everything offered to it.
class CentroidBuffer {
public:
    explicit CentroidBuffer(std::size_t capacity);

    // Returns true if the instance was stored.
    bool offer(const LabeledInstance& inst, Rng& rng);
    void clear();

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    const std::vector<LabeledInstance>& items() const { return items_; }
    std::uint64_t offered() const { return offered_; }

private:
    friend class RsbMemory;
    friend class StaticCentroidMemory;
    std::size_t capacity_;
    std::vector<LabeledInstance> items_;
    std::uint64_t offered_ = 0;
};

// Online cluster that owns a replay buffer and a label-tagged window.
struct ReactiveCentroid {
    int id = 0;
    Label label = 0;
    FeatureVector mean;
    std::vector<double> m2;
    std::uint64_t count = 0;
    CentroidBuffer buffer;
    SlidingWindow window;
    std::uint64_t registered_since_maintenance = 0;
    std::uint64_t created_at = 0;  // stream position of the creating instance
    std::uint64_t window_updates_since_check = 0;

    ReactiveCentroid(int id, const LabeledInstance& first, const RsbConfig& cfg,
                     std::uint64_t stamp);

    std::size_t dim() const { return mean.size(); }
    double variance(std::size_t j) const;

    // Welford update of mean/m2/count.
    void absorb_statistics(const FeatureVector& x);
    // Replaces mean/m2/count by the exact statistics of the given points.
    void reset_statistics(const std::vector<const FeatureVector*>& points);
};

// ε floor for per-dimension variance in the containment rule.
inline constexpr double kVarianceFloor = 1e-9;

// Nearest centroid by Euclidean distance; ties go to the lowest id.
// Throws NotFoundError when the (filtered) collection is empty.
const ReactiveCentroid& find_nearest(std::span<const ReactiveCentroid> centroids,
                                     const FeatureVector& x);
std::optional<std::size_t> nearest_index(std::span<const ReactiveCentroid> centroids,
                                         const FeatureVector& x,
                                         std::optional<Label> only_label = std::nullopt);

// Containment: ||x - mean||^2 <= sigma_k^2 * sum_j max(var_j, eps).
bool within_bounds(const ReactiveCentroid& c, const FeatureVector& x, double sigma_k);

// Majority label of the window (ties -> lowest label) when it differs from
// c.label and reaches cfg.switch_count().
std::optional<Label> check_switch(const ReactiveCentroid& c, const RsbConfig& cfg);

// Relabels c, rebuilds statistics and buffer from the window entries of the
// new label. The window itself is kept.
void apply_switch(ReactiveCentroid& c, Label new_label, const RsbConfig& cfg);

// c1/c2 - 1 < tau_s over the two window label counts.
bool check_split(const ReactiveCentroid& c, const RsbConfig& cfg,
                 bool switched_this_pass = false);

struct MemoryEvent {
    enum class Kind { Created, Updated, WindowUpdated, Switched, Split, Removed, Merged };
    Kind kind;
    int centroid;
    Label label;
    int other = -1;  // Split: new centroid id; Merged: absorbed id

    bool operator==(const MemoryEvent&) const = default;
};

std::string to_string(MemoryEvent::Kind kind);

// Reactive Subspace Buffer: per-class centroids that follow label drift in
// their neighbourhood by switching, splitting and pruning.
class RsbMemory {
public:
    explicit RsbMemory(RsbConfig cfg, std::uint64_t seed = 0);

    std::vector<MemoryEvent> ingest(const LabeledInstance& inst);
    std::vector<MemoryEvent> maintenance();

    // Splits the centroid with the given id. Returns (original id, new id).
    // Throws IllegalStateError if check_split does not hold.
    std::pair<int, int> apply_split(int centroid_id, std::vector<MemoryEvent>* events = nullptr);

    const RsbConfig& config() const { return cfg_; }
    const std::vector<ReactiveCentroid>& centroids() const { return centroids_; }
    const ReactiveCentroid& centroid(int id) const;
    std::size_t class_count(Label y) const;
    std::size_t dim() const { return dim_; }
    std::uint64_t stream_counter() const { return stream_counter_; }
    bool empty() const { return centroids_.empty(); }

private:
    ReactiveCentroid& mutable_centroid(int id);
    std::size_t index_of(int id) const;
    int create(const LabeledInstance& inst, std::vector<MemoryEvent>& events);
    void update_full(ReactiveCentroid& c, const LabeledInstance& inst);
    void register_window(ReactiveCentroid& c, const LabeledInstance& inst);
    void enforce_cap(Label y, std::size_t allowed, std::vector<MemoryEvent>& events);
    void merge(std::size_t survivor, std::size_t absorbed);
    bool removable(const ReactiveCentroid& c) const;
    void maintain_one(int id, std::vector<MemoryEvent>& events);

    RsbConfig cfg_;
    Rng rng_;
    std::vector<ReactiveCentroid> centroids_;  // ascending id
    int next_id_ = 0;
    std::size_t dim_ = 0;
    std::uint64_t stream_counter_ = 0;
    std::uint64_t period_start_ = 0;
};

}  // namespace rsb

#endif  // RSB_MEMORY_HPP
