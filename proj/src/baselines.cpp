#include "rsb/baselines.hpp"

#include <algorithm>

namespace rsb {

ClassBuffer::ClassBuffer(std::size_t b_max, double tau) : b_max_(b_max), tau_(tau) {
    if (b_max_ == 0) throw ConfigError("class buffer capacity must be positive");
    if (!(tau_ >= 0.0 && tau_ <= 1.0)) throw ConfigError("class buffer tau must be in [0,1]");
}

bool ClassBuffer::ingest(const LabeledInstance& inst, Rng& rng) {
    validate_label(inst.label);
    auto& buf = buffers_[inst.label];
    if (buf.size() < b_max_) {
        buf.push_back(inst);
        return true;
    }
    if (rng.uniform() < tau_) {
        buf[rng.index(buf.size())] = inst;
        return true;
    }
    return false;
}

std::vector<LabeledInstance> ClassBuffer::sample(std::size_t k, Rng& rng) const {
    std::vector<LabeledInstance> out;
    for (const auto& buf : buffers_) {
        if (buf.empty()) continue;
        for (std::size_t i = 0; i < k; ++i) out.push_back(buf[rng.index(buf.size())]);
    }
    return out;
}

bool ClassBuffer::empty() const {
    return std::all_of(buffers_.begin(), buffers_.end(), [](const auto& b) { return b.empty(); });
}

StaticCentroidMemory::StaticCentroidMemory(RsbConfig cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed) {
    cfg_.validate();
}

std::size_t StaticCentroidMemory::class_count(Label y) const {
    return static_cast<std::size_t>(std::count_if(
        centroids_.begin(), centroids_.end(), [y](const ReactiveCentroid& c) { return c.label == y; }));
}

void StaticCentroidMemory::update(ReactiveCentroid& c, const LabeledInstance& inst) {
    c.absorb_statistics(inst.features);
    c.buffer.offer(inst, rng_);
    ++c.registered_since_maintenance;
}

MemoryEvent StaticCentroidMemory::ingest(const LabeledInstance& inst) {
    validate_features(inst.features, dim_);
    validate_label(inst.label);
    if (dim_ == 0) dim_ = inst.features.size();
    const Label y = inst.label;
    const std::uint64_t stamp = stream_counter_++;

    auto create = [&] {
        const int id = next_id_++;
        centroids_.emplace_back(id, inst, cfg_, stamp);
        return MemoryEvent{MemoryEvent::Kind::Created, id, y};
    };

    if (class_count(y) < static_cast<std::size_t>(cfg_.c_min)) return create();

    // Mirrors the RSB routing with the opposite-label window branch removed.
    const std::size_t ix = *nearest_index(centroids_, inst.features);
    if (centroids_[ix].label == y) {
        update(centroids_[ix], inst);
        return {MemoryEvent::Kind::Updated, centroids_[ix].id, y};
    }
    const std::size_t iy = *nearest_index(centroids_, inst.features, y);
    if (within_bounds(centroids_[iy], inst.features, cfg_.sigma_k) ||
        class_count(y) >= static_cast<std::size_t>(cfg_.c_max)) {
        update(centroids_[iy], inst);
        return {MemoryEvent::Kind::Updated, centroids_[iy].id, y};
    }
    return create();
}

}  // namespace rsb
