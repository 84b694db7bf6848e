#ifndef RSB_REPLAY_HPP
#define RSB_REPLAY_HPP

#include <memory>
#include <string>
#include <vector>

#include "rsb/baselines.hpp"
#include "rsb/memory.hpp"
#include "rsb/rng.hpp"
#include "rsb/types.hpp"

namespace rsb {

struct ReplayOrigin {
    enum class Kind { Centroid, ClassBuffer };
    Kind kind = Kind::Centroid;
    int id = 0;  // centroid id, or the buffer's label

    bool operator==(const ReplayOrigin&) const = default;
};

struct ReplayBatch {
    std::vector<LabeledInstance> instances;
    std::vector<ReplayOrigin> provenance;  // parallel to instances

    std::size_t size() const { return instances.size(); }
    bool empty() const { return instances.empty(); }
    void add(LabeledInstance inst, ReplayOrigin origin);
};

// Sampling gate tanh(beta * (c1 - c2) / (c1 + c2)); 0 for an empty window.
double purity(std::size_t c1, std::size_t c2, double beta);

// One purity-gated draw per centroid, using the centroid's window label
// counts. Only buffer items carrying the centroid's current label qualify.
ReplayBatch sample_replay(const RsbMemory& memory, Rng& rng);

// One ungated draw per centroid.
ReplayBatch sample_replay(const StaticCentroidMemory& memory, Rng& rng);

// k draws per label.
ReplayBatch sample_replay(const ClassBuffer& buffer, std::size_t k, Rng& rng);

// Duplicates random minority-label instances until both labels have equal
// counts. Single-label and empty batches come back unchanged.
ReplayBatch oversample_balance(ReplayBatch batch, Rng& rng);

// A replay memory as the learner sees it.
class ReplayMemory {
public:
    virtual ~ReplayMemory() = default;
    virtual void observe(const LabeledInstance& inst) = 0;
    virtual ReplayBatch draw(Rng& rng) const = 0;
};

class RsbReplay final : public ReplayMemory {
public:
    RsbReplay(RsbConfig cfg, std::uint64_t seed) : memory_(cfg, seed) {}
    void observe(const LabeledInstance& inst) override { memory_.ingest(inst); }
    ReplayBatch draw(Rng& rng) const override { return sample_replay(memory_, rng); }
    const RsbMemory& memory() const { return memory_; }

private:
    RsbMemory memory_;
};

class StaticCentroidReplay final : public ReplayMemory {
public:
    StaticCentroidReplay(RsbConfig cfg, std::uint64_t seed) : memory_(cfg, seed) {}
    void observe(const LabeledInstance& inst) override { memory_.ingest(inst); }
    ReplayBatch draw(Rng& rng) const override { return sample_replay(memory_, rng); }
    const StaticCentroidMemory& memory() const { return memory_; }

private:
    StaticCentroidMemory memory_;
};

class ClassBufferReplay final : public ReplayMemory {
public:
    ClassBufferReplay(std::size_t b_max, double tau, std::size_t draws_per_label, std::uint64_t seed)
        : buffer_(b_max, tau), rng_(seed), draws_per_label_(draws_per_label) {}
    void observe(const LabeledInstance& inst) override { buffer_.ingest(inst, rng_); }
    ReplayBatch draw(Rng& rng) const override {
        return sample_replay(buffer_, draws_per_label_, rng);
    }
    const ClassBuffer& buffer() const { return buffer_; }

private:
    ClassBuffer buffer_;
    Rng rng_;
    std::size_t draws_per_label_;
};

}  // namespace rsb

#endif  // RSB_REPLAY_HPP
