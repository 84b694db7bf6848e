#ifndef RSB_BASELINES_HPP
#define RSB_BASELINES_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "rsb/memory.hpp"
#include "rsb/rng.hpp"
#include "rsb/types.hpp"

namespace rsb {

// Per-label bounded buffers with threshold replacement. tau = 0 keeps the
// first b_max arrivals forever (CB0); tau = 1 replaces on every arrival (CB1).
class ClassBuffer {
public:
    ClassBuffer(std::size_t b_max, double tau);

    // Returns true when the instance was stored (appended or replaced a victim).
    bool ingest(const LabeledInstance& inst, Rng& rng);

    // k draws with replacement from every non-empty label.
    std::vector<LabeledInstance> sample(std::size_t k, Rng& rng) const;

    const std::vector<LabeledInstance>& items(Label y) const { return buffers_.at(y); }
    std::size_t capacity() const { return b_max_; }
    double tau() const { return tau_; }
    bool empty() const;

private:
    std::size_t b_max_;
    double tau_;
    std::array<std::vector<LabeledInstance>, kNumLabels> buffers_;
};

// Centroid-driven memory without reactivity: same routing, containment and
// reservoir buffers as RsbMemory, but centroids never relabel, split or get
// removed, and instances only ever update centroids of their own label.
class StaticCentroidMemory {
public:
    explicit StaticCentroidMemory(RsbConfig cfg, std::uint64_t seed = 0);

    MemoryEvent ingest(const LabeledInstance& inst);

    const std::vector<ReactiveCentroid>& centroids() const { return centroids_; }
    const RsbConfig& config() const { return cfg_; }
    std::size_t class_count(Label y) const;
    std::size_t dim() const { return dim_; }
    bool empty() const { return centroids_.empty(); }

private:
    void update(ReactiveCentroid& c, const LabeledInstance& inst);

    RsbConfig cfg_;
    Rng rng_;
    std::vector<ReactiveCentroid> centroids_;
    int next_id_ = 0;
    std::size_t dim_ = 0;
    std::uint64_t stream_counter_ = 0;
};

}  // namespace rsb

#endif  // RSB_BASELINES_HPP
